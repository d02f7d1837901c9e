#pragma once

namespace splatprop {

/// Entry point behind the command-line tool. Exit codes: 0 success, 1 usage
/// error, 2 data error (missing/malformed inputs), 3 numerical abort.
int run_cli(int argc, const char* const* argv);

}  // namespace splatprop
