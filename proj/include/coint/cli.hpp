#pragma once

namespace coint {

/// Entry point of the `coint` command line tool. Returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace coint
