#include "filtra/numeric.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace filtra {

std::string Num<double>::to_string(double r) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), r);
  if (ec != std::errc()) throw Error("cannot format floating value");
  return std::string(buf.data(), end);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

BigInt parse_integer(std::string_view s) {
  if (s.empty()) throw Error("empty integer");
  std::string digits(s);
  if (digits.front() == '+') digits.erase(0, 1);
  BigInt z;
  if (z.set_str(digits, 10) != 0) throw Error("not an integer: " + std::string(s));
  return z;
}

Rational parse_decimal(std::string_view s) {
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    auto exp_text = s.substr(e + 1);
    auto res = std::from_chars(exp_text.data() + (exp_text.starts_with('+') ? 1 : 0),
                               exp_text.data() + exp_text.size(), exponent);
    if (res.ec != std::errc() || res.ptr != exp_text.data() + exp_text.size())
      throw Error("bad exponent in number: " + std::string(s));
    s = s.substr(0, e);
  }
  std::string mantissa;
  long fraction_digits = 0;
  bool seen_point = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_point) throw Error("bad number: " + std::string(s));
      seen_point = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      mantissa.push_back(c);
      if (seen_point) ++fraction_digits;
    } else {
      throw Error("bad number: " + std::string(s));
    }
  }
  if (mantissa.empty()) throw Error("bad number: " + std::string(s));
  Rational r(parse_integer(mantissa));
  long shift = exponent - fraction_digits;
  BigInt scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
  if (shift < 0) {
    r /= Rational(scale);
  } else {
    r *= Rational(scale);
  }
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto s = trim(text);
  if (s.empty()) throw Error("empty number");
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    BigInt p = parse_integer(trim(s.substr(0, slash)));
    BigInt q = parse_integer(trim(s.substr(slash + 1)));
    if (q == 0) throw Error("zero denominator: " + std::string(s));
    Rational r(p, q);
    r.canonicalize();
    return r;
  }
  return parse_decimal(s);
}

const Rational& Scalar::rational() const {
  if (!is_exact()) throw ModeMismatch("scalar is floating, not exact");
  return std::get<Rational>(value_);
}

double Scalar::floating_value() const {
  if (is_exact()) throw ModeMismatch("scalar is exact, not floating");
  return std::get<double>(value_);
}

double Scalar::to_double() const {
  return is_exact() ? std::get<Rational>(value_).get_d() : std::get<double>(value_);
}

std::string Scalar::to_string() const {
  return is_exact() ? std::get<Rational>(value_).get_str()
                    : Num<double>::to_string(std::get<double>(value_));
}

void Scalar::require_same_mode(const Scalar& o, const char* op) const {
  if (mode() != o.mode())
    throw ModeMismatch(std::string("mixed exact/floating operands in ") + op);
}

Scalar Scalar::operator+(const Scalar& o) const {
  require_same_mode(o, "+");
  if (is_exact()) return Scalar(Rational(rational() + o.rational()));
  return Scalar(floating_value() + o.floating_value());
}

Scalar Scalar::operator-(const Scalar& o) const {
  require_same_mode(o, "-");
  if (is_exact()) return Scalar(Rational(rational() - o.rational()));
  return Scalar(floating_value() - o.floating_value());
}

Scalar Scalar::operator*(const Scalar& o) const {
  require_same_mode(o, "*");
  if (is_exact()) return Scalar(Rational(rational() * o.rational()));
  return Scalar(floating_value() * o.floating_value());
}

Scalar Scalar::operator/(const Scalar& o) const {
  require_same_mode(o, "/");
  if (is_exact()) {
    if (sgn(o.rational()) == 0) throw Error("division by zero");
    return Scalar(Rational(rational() / o.rational()));
  }
  return Scalar(floating_value() / o.floating_value());
}

bool Scalar::operator==(const Scalar& o) const {
  require_same_mode(o, "==");
  if (!is_exact()) throw ModeMismatch("floating comparison needs an explicit tolerance");
  return rational() == o.rational();
}

bool Scalar::approx_equal(const Scalar& o, double tol) const {
  require_same_mode(o, "approx_equal");
  if (is_exact()) return rational() == o.rational();
  return Num<double>::eq(floating_value(), o.floating_value(), tol);
}

bool Scalar::less(const Scalar& o, double tol) const {
  require_same_mode(o, "<");
  if (is_exact()) return rational() < o.rational();
  return Num<double>::lt(floating_value(), o.floating_value(), tol);
}

}  // namespace filtra
