#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avs/core/crypto.hpp"
#include "avs/device/device.hpp"

namespace avs::device {

struct ButtonEvent {
    enum class Kind { privacy, power };
    double at_s = 0;  // seconds after power-on
    Kind kind = Kind::privacy;
};

struct SessionSpec {
    DeviceConfig device;
    std::string subject_id = "S001";
    std::string ward_id = "W1";
    std::string device_id = "D1";
    std::string session_id = "sess-01";
    std::string disk_id = "disk-1";
    std::uint64_t disk_capacity_bytes = 2'000'000'000'000ULL;
    double tick_s = 1.0;
    double battery_hours = 24.0;
};

struct SessionResult {
    core::SessionManifest manifest;
    EncryptedDisk disk;  // sealed
    core::Keyring keyring;
};

/// Disk key for `disk_id` under `seed`.
core::SecretKey disk_key(const std::string& disk_id, std::uint64_t seed);

/// Powers on, applies `scenario` at its timestamps while ticking in steps of
/// `spec.tick_s`, powers off after `duration_s` (or at a power event) and
/// returns the finalized manifest and the removed disk. `seed` overrides
/// `spec.device.seed`.
SessionResult run_session(const SessionSpec& spec, double duration_s, std::vector<ButtonEvent> scenario,
                          std::uint64_t seed);

}  // namespace avs::device
