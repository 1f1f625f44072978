#pragma once

namespace refprior {

/// CLI entry point. Exit codes: 0 success, 1 validation/usage error,
/// 2 runtime or numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace refprior
