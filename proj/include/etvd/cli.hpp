#pragma once

namespace etvd {

// Exit codes: 0 success, 1 usage error, 2 runtime/numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace etvd
