#pragma once

namespace s2p::cli {

/// Dispatch one subcommand. Exit codes: 0 success, 1 domain error,
/// 2 usage error.
int run(int argc, const char* const* argv);

}  // namespace s2p::cli
