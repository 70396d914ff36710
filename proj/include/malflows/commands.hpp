#pragma once

#include <iosfwd>

namespace malflows {

// Entry point of the `malflows` tool: stats, build, walk, embed, train,
// predict, eval, synth. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace malflows
