#pragma once

#include <iosfwd>

namespace specsel {

/// Entry point of the `specsel` command line tool. Returns 0 on success, 2 on
/// a configuration or usage error and 1 on a runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace specsel
