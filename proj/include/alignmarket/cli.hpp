#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace alignmarket {

inline constexpr const char* kVersion = "0.1.0";

// Entry point shared by the CLI binary and the tests.  `args` excludes the
// program name.  Returns 0 on success, 1 on validation/data errors, 2 on
// usage errors.
int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err);

}  // namespace alignmarket
