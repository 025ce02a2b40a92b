#ifndef FIBCAST_CLI_HPP
#define FIBCAST_CLI_HPP

namespace fibcast::cli {

// Entry point behind the fibcast binary. Returns the process exit code:
// 0 success, 1 internal failure, 2 bad input or configuration.
int run(int argc, char** argv);

} // namespace fibcast::cli

#endif
