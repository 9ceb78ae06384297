#include "homethru/log.hpp"

#include <spdlog/sinks/stdout_sinks.h>

namespace homethru {

spdlog::logger& logger() {
    static const auto instance = [] {
        auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
        auto log = std::make_shared<spdlog::logger>("homethru", std::move(sink));
        log->set_pattern("%Y-%m-%dT%H:%M:%S.%eZ level=%l %v", spdlog::pattern_time_type::utc);
        log->set_level(spdlog::level::info);
        return log;
    }();
    return *instance;
}

}  // namespace homethru
