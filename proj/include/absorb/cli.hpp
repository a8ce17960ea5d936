#pragma once

namespace absorb {

// Full command-line driver; returns the process exit code.
// 0 success, 2 config error, 3 numerical size guard, 4 invariant violation.
int cli_main(int argc, char** argv);

}  // namespace absorb
