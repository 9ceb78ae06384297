#pragma once

#include <string>
#include <vector>

#include "homethru/probe/endpoint.hpp"
#include "homethru/probe/throughput.hpp"
#include "homethru/sample.hpp"

namespace homethru::probe {

struct TestLabels {
    std::string household_id;
    std::string device_id;
    MeasurementPath path = MeasurementPath::wan_access;
    std::string tool = "ndt7";
};

struct DownloadResult {
    ThroughputSample sample;
    // Snapshots the server sent, in arrival order.
    std::vector<MeasurementSnapshot> server_snapshots;
    // Receiver-side progress taken every snapshot interval.
    std::vector<MeasurementSnapshot> client_snapshots;
};

// Runs one download test against `endpoint`. Throughput is computed from the
// payload bytes this client received over its own wall-clock elapsed time.
//
// Errors: InvalidArgument for a bad config; TransportError when the endpoint
// cannot be reached or the stream breaks; IncompleteTestError when the stream
// ends before 10% of the configured duration; ProtocolError for malformed
// snapshot messages; BusyError when the server answers 503.
DownloadResult run_download_test(const Endpoint& endpoint, const TestConfig& config, const TestLabels& labels);

}  // namespace homethru::probe
