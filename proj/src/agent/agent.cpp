#include "homethru/agent/agent.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "homethru/agent/test_slot.hpp"
#include "homethru/errors.hpp"
#include "homethru/log.hpp"
#include "homethru/probe/download_client.hpp"
#include "homethru/probe/download_server.hpp"
#include "homethru/store/api_server.hpp"

namespace homethru::agent {

struct Agent::Impl {
    AgentConfig config;
    store::SampleStore& store;
    AgentHooks hooks;
    TestSlot slot;
    std::unique_ptr<probe::DownloadServer> lan_server;
    std::unique_ptr<store::ApiServer> api;
    std::thread scheduler;

    mutable std::mutex mutex;
    std::condition_variable wake;
    bool stopping = false;
    AgentStats counters;
    std::deque<ThroughputSample> pending;

    Impl(AgentConfig c, store::SampleStore& s, AgentHooks h)
        : config(std::move(c)),
          store(s),
          hooks(std::move(h)),
          slot(std::chrono::seconds(config.schedule.min_gap_seconds)) {
        if (!hooks.run_wan_test) {
            hooks.run_wan_test = [](const AgentConfig& cfg) {
                const probe::TestLabels labels{cfg.schedule.household_id, wan_device_id(cfg),
                                               MeasurementPath::wan_access, "ndt7"};
                return probe::run_download_test(probe::parse_endpoint(cfg.schedule.wan_endpoint), cfg.test, labels)
                    .sample;
            };
        }
        if (!hooks.persist) hooks.persist = [this](const ThroughputSample& sample) { store.append_sample(sample); };
    }

    // Writes queued samples in order; stops at the first failure.
    void flush_pending() {
        std::unique_lock lock(mutex);
        while (!pending.empty()) {
            const auto sample = pending.front();
            lock.unlock();
            try {
                hooks.persist(sample);
            } catch (const Error& e) {
                logger().warn("event=persist_retry_failed pending={} error=\"{}\"", pending.size(), e.what());
                return;
            }
            lock.lock();
            pending.pop_front();
            ++counters.persisted;
            logger().info("event=pending_sample_persisted pending={}", pending.size());
        }
    }

    void persist(const ThroughputSample& sample) {
        flush_pending();
        {
            std::lock_guard lock(mutex);
            if (!pending.empty()) {
                enqueue(sample, "earlier writes still pending");
                return;
            }
        }
        try {
            hooks.persist(sample);
            std::lock_guard lock(mutex);
            ++counters.persisted;
        } catch (const Error& e) {
            std::lock_guard lock(mutex);
            enqueue(sample, e.what());
        }
    }

    // Requires mutex.
    void enqueue(const ThroughputSample& sample, std::string_view reason) {
        if (pending.size() >= config.pending_queue_limit) {
            pending.pop_front();
            ++counters.dropped;
            logger().error("event=pending_sample_dropped limit={}", config.pending_queue_limit);
        }
        pending.push_back(sample);
        logger().warn("event=persist_deferred pending={} reason=\"{}\"", pending.size(), reason);
    }

    void run_wan_slot(std::uint64_t k) {
        {
            std::lock_guard lock(mutex);
            ++counters.wan_slots;
        }
        std::optional<ThroughputSample> sample;
        try {
            auto permit = slot.acquire(TestKind::wan_test);
            logger().info("event=wan_test_start slot={} endpoint={}", k, config.schedule.wan_endpoint);
            sample = hooks.run_wan_test(config);
            sample->path = MeasurementPath::wan_access;
        } catch (const std::exception& e) {
            std::lock_guard lock(mutex);
            ++counters.wan_skipped;
            logger().warn("event=wan_test_skipped slot={} endpoint={} error=\"{}\"", k, config.schedule.wan_endpoint,
                          e.what());
            return;
        }
        logger().info("event=wan_test_complete slot={} mbps={:.3f} bytes={}", k, sample->throughput_mbps,
                      sample->bytes_transferred);
        {
            std::lock_guard lock(mutex);
            ++counters.wan_completed;
        }
        persist(*sample);
    }

    void scheduler_loop(WanSchedule schedule) {
        for (std::uint64_t k = 1;; ++k) {
            const auto event = schedule.event(k);
            {
                std::unique_lock lock(mutex);
                const auto wait_for = event.fire_at_utc - now_utc();
                if (wake.wait_for(lock, wait_for, [this] { return stopping; })) return;
            }
            // After a stall (suspend, clock jump) run only the latest overdue slot.
            if (schedule.event(k + 1).fire_at_utc <= now_utc()) {
                std::lock_guard lock(mutex);
                ++counters.wan_slots;
                ++counters.wan_skipped;
                logger().warn("event=wan_test_skipped slot={} reason=missed", k);
                continue;
            }
            run_wan_slot(k);
        }
    }
};

Agent::Agent(AgentConfig config, store::SampleStore& store, AgentHooks hooks) {
    validate(config);
    impl_ = std::make_unique<Impl>(std::move(config), store, std::move(hooks));
    auto& cfg = impl_->config;

    probe::ServerOptions lan;
    lan.test = cfg.test;
    lan.rate_limit_mbps = cfg.lan_rate_limit_mbps;
    lan.test_slot = &impl_->slot;
    impl_->lan_server = probe::serve_download(cfg.lan_bind, lan);

    store::ApiOptions api;
    const auto api_endpoint = probe::parse_endpoint(cfg.api_bind);
    api.host = api_endpoint.host;
    api.port = api_endpoint.port;
    api.bearer_token = cfg.api_token;
    api.web_root = cfg.web_root;
    api.default_household_id = cfg.schedule.household_id;
    try {
        impl_->api = std::make_unique<store::ApiServer>(store, api);
    } catch (...) {
        impl_->lan_server->stop();
        throw;
    }

    WanSchedule schedule(cfg.schedule, schedule_seed(cfg), now_utc());
    logger().info("event=agent_started household={} lan_port={} api_port={} wan_endpoint={} interval_s={} jitter_s={}",
                  cfg.schedule.household_id, impl_->lan_server->port(), impl_->api->port(), cfg.schedule.wan_endpoint,
                  cfg.schedule.wan_interval_seconds, cfg.schedule.wan_jitter_seconds);
    impl_->scheduler = std::thread([impl = impl_.get(), schedule] { impl->scheduler_loop(schedule); });
}

Agent::~Agent() { stop(); }

std::uint16_t Agent::lan_port() const { return impl_->lan_server->port(); }
std::uint16_t Agent::api_port() const { return impl_->api->port(); }

AgentStats Agent::stats() const {
    std::lock_guard lock(impl_->mutex);
    auto s = impl_->counters;
    s.pending = impl_->pending.size();
    return s;
}

void Agent::stop() {
    {
        std::lock_guard lock(impl_->mutex);
        if (impl_->stopping) return;
        impl_->stopping = true;
    }
    impl_->wake.notify_all();
    if (impl_->scheduler.joinable()) impl_->scheduler.join();
    impl_->api->stop();
    impl_->lan_server->stop();
    impl_->flush_pending();
    const auto s = stats();
    logger().info("event=agent_stopped wan_slots={} wan_completed={} wan_skipped={} persisted={} pending={} dropped={}",
                  s.wan_slots, s.wan_completed, s.wan_skipped, s.persisted, s.pending, s.dropped);
}

}  // namespace homethru::agent
