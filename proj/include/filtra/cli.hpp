#ifndef FILTRA_CLI_HPP
#define FILTRA_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "filtra/chain.hpp"

namespace filtra {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitVerification = 3;

/// Bad command-line input; maps to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Parses "lambda=<expr>" where <expr> uses |n|, n, numbers, + - * / ^, parentheses and
/// exp/log/sqrt, e.g. "lambda=|n|+1" or "lambda=1+1/(|n|+1)^2".
LambdaRule parse_lambda_rule(const std::string& text);

/// Runs one command; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace filtra

#endif  // FILTRA_CLI_HPP
