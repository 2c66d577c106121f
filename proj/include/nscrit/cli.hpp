#pragma once

#include <iosfwd>

namespace nscrit {

/// Exit status: 0 success, 1 a check or run failed, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nscrit
