#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace spd::cli {

/// Runs one command line (without the program name). Results go to `out`
/// and files under --out; progress and the one-line error go to `err`.
/// Returns 0 on success, 2 on a usage error, 1 on any other failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace spd::cli
