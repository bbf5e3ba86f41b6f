#pragma once

namespace fedglb {

// Command-line front door (run / sweep / prepare-data / list-algos).
// Exit codes: 0 success, 1 validation or input error, 2 runtime abort,
// 3 sweep finished with failed cells.
int cli_main(int argc, const char* const* argv);

}  // namespace fedglb
