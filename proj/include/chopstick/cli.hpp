#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chopstick::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/**
 * Runs one subcommand. `args` excludes the program name. Machine-readable results
 * go to `out`; usage errors and domain errors go to `err`.
 *
 * Returns 0 on success, 1 on a domain error and 2 on a usage error.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chopstick::cli
