#pragma once

#include <iosfwd>
#include <string_view>

namespace bqo {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Entry point of the `bqo` command-line tool. Returns the process exit code:
/// 0 on success, 1 on a numerical failure, 2 on a usage error. Failures are
/// reported as a one-line JSON object on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace bqo
