#pragma once

namespace compabs::cli {

/// Parses argv and runs one subcommand. Returns the process exit code.
int run(int argc, char** argv);

}  // namespace compabs::cli
