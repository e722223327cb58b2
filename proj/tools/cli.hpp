#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cbp::cli {

/// Runs one subcommand. Returns 0 on success, 1 on invalid input and 2 on
/// numeric failure (including failed verification suites). Diagnostics go to
/// `err` as `error[Code]: message`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbp::cli
