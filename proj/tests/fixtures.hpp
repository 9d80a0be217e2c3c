#pragma once

#include "avs/device/session.hpp"
#include "avs/transfer/transfer.hpp"

namespace avs::testing {

/// Runs a device session and uploads its disk into `store`.
inline core::SessionManifest populate(transfer::ObjectStore& store, std::vector<device::ChannelConfig> channels,
                                      double duration_s, std::uint64_t seed, const std::string& subject = "S001",
                                      std::vector<device::ButtonEvent> events = {}) {
    device::SessionSpec spec;
    spec.device.channels = std::move(channels);
    spec.subject_id = subject;
    spec.disk_id = "disk-" + subject + "-" + std::to_string(seed);
    const auto r = device::run_session(spec, duration_s, std::move(events), seed);
    transfer::upload_network(r.disk, store, 1e8);
    return r.manifest;
}

}  // namespace avs::testing
