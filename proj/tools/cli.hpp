#pragma once

#include <iosfwd>

namespace tap3d::cli {

/// Runs the command line. Returns 0 on success, 1 on validation or
/// evaluation errors and 2 on usage errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tap3d::cli
