#pragma once

#include <spdlog/spdlog.h>

namespace homethru {

// Shared stderr logger. Lines are "<utc time> level=<lvl> event=<name> k=v ...".
spdlog::logger& logger();

}  // namespace homethru
