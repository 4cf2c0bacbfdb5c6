#pragma once

// Fast invariant checks over every module; one line per check.

#include <ostream>

namespace magsim {

// True when every check passes.
bool run_selftest(std::ostream& out);

}  // namespace magsim
