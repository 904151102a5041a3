// Command-line front end. `iaes` forwards straight to cli_main so the whole
// surface can be driven in-process by tests.
#pragma once

#include <iosfwd>

namespace iaes {

/// Exit codes: 0 success, 1 diagnostics or IO failure, 2 usage error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace iaes
