#ifndef MVNBV_CLI_HPP_
#define MVNBV_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace mvnbv {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvnbv

#endif  // MVNBV_CLI_HPP_
