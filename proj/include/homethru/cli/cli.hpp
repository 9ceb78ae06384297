#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace homethru::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs one invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Makes a running `serve` or `agent` return. Safe to call from a signal handler.
void request_shutdown();

// Routes SIGINT and SIGTERM to request_shutdown().
void install_signal_handlers();

}  // namespace homethru::cli
