#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace evoes::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Returns 0 on success, 1 on usage or validation errors, 2 on runtime
/// failures. Results go to `out`, diagnostics to `err`.
int dispatch(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace evoes::cli
