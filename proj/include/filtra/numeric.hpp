#ifndef FILTRA_NUMERIC_HPP
#define FILTRA_NUMERIC_HPP

#include <gmpxx.h>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace filtra {

using Rational = mpq_class;
using BigInt = mpz_class;

/// Default tolerance for floating-point comparisons. Exact arithmetic ignores it.
inline constexpr double kFloatTol = 1e-12;

enum class NumericMode { exact, floating };

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpaceMismatch : public Error {
 public:
  using Error::Error;
};

class ModeMismatch : public Error {
 public:
  using Error::Error;
};

template <class T>
concept Numeric = std::same_as<T, Rational> || std::same_as<T, double>;

template <class T>
struct Num;

template <>
struct Num<Rational> {
  static constexpr NumericMode mode = NumericMode::exact;
  static constexpr bool exact = true;

  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static Rational ratio(long p, long q) {
    Rational r(p, q);
    r.canonicalize();
    return r;
  }
  static Rational from_rational(const Rational& r) { return r; }
  static Rational from_int(const BigInt& z) { return Rational(z); }
  static double to_double(const Rational& r) { return r.get_d(); }
  static std::string to_string(const Rational& r) { return r.get_str(); }
  static Rational abs(const Rational& a) { return sgn(a) < 0 ? Rational(-a) : a; }

  static bool eq(const Rational& a, const Rational& b, double = kFloatTol) { return a == b; }
  static bool le(const Rational& a, const Rational& b, double = kFloatTol) { return a <= b; }
  static bool lt(const Rational& a, const Rational& b, double = kFloatTol) { return a < b; }
  static bool is_zero(const Rational& a, double = kFloatTol) { return sgn(a) == 0; }
  static bool positive(const Rational& a, double = kFloatTol) { return sgn(a) > 0; }
  static bool negative(const Rational& a, double = kFloatTol) { return sgn(a) < 0; }
};

template <>
struct Num<double> {
  static constexpr NumericMode mode = NumericMode::floating;
  static constexpr bool exact = false;

  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static double ratio(long p, long q) { return static_cast<double>(p) / static_cast<double>(q); }
  static double from_rational(const Rational& r) { return r.get_d(); }
  static double from_int(const BigInt& z) { return z.get_d(); }
  static double to_double(double r) { return r; }
  static std::string to_string(double r);
  static double abs(double a) { return std::fabs(a); }

  static bool eq(double a, double b, double tol = kFloatTol) { return std::fabs(a - b) <= tol; }
  static bool le(double a, double b, double tol = kFloatTol) { return a <= b + tol; }
  static bool lt(double a, double b, double tol = kFloatTol) { return a < b - tol; }
  static bool is_zero(double a, double tol = kFloatTol) { return std::fabs(a) <= tol; }
  static bool positive(double a, double tol = kFloatTol) { return a > tol; }
  static bool negative(double a, double tol = kFloatTol) { return a < -tol; }
};

/// Parses "p/q", an integer, or a plain decimal ("0.125", "1e-3") into an exact rational.
Rational parse_rational(std::string_view text);

/// A numeric value carrying its mode. Arithmetic across modes throws ModeMismatch.
class Scalar {
 public:
  Scalar() : value_(Rational(0)) {}
  static Scalar exact(Rational r) { return Scalar(std::move(r)); }
  static Scalar floating(double d) { return Scalar(d); }
  template <Numeric T>
  static Scalar of(const T& v) {
    return Scalar(v);
  }

  NumericMode mode() const {
    return std::holds_alternative<Rational>(value_) ? NumericMode::exact : NumericMode::floating;
  }
  bool is_exact() const { return mode() == NumericMode::exact; }

  const Rational& rational() const;
  double floating_value() const;
  double to_double() const;
  /// "p/q" for exact values, shortest round-trip decimal for floats.
  std::string to_string() const;

  Scalar operator+(const Scalar& o) const;
  Scalar operator-(const Scalar& o) const;
  Scalar operator*(const Scalar& o) const;
  Scalar operator/(const Scalar& o) const;

  /// Exact equality; only valid between exact scalars.
  bool operator==(const Scalar& o) const;
  /// Tolerance comparison; requires matching modes. Exact mode ignores tol.
  bool approx_equal(const Scalar& o, double tol) const;
  bool less(const Scalar& o, double tol = kFloatTol) const;

 private:
  explicit Scalar(Rational r) : value_(std::move(r)) {}
  explicit Scalar(double d) : value_(d) {}
  void require_same_mode(const Scalar& o, const char* op) const;

  std::variant<Rational, double> value_;
};

}  // namespace filtra

#endif  // FILTRA_NUMERIC_HPP
