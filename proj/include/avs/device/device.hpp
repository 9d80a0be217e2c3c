#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avs/core/manifest.hpp"
#include "avs/device/channel.hpp"
#include "avs/device/disk.hpp"

namespace avs::device {

enum class DeviceState { Off, Configured, Collecting, PrivacyPaused, Finalizing };
std::string_view to_string(DeviceState s);

/// `materialize` renders, encrypts and stores every payload. `census` only
/// accounts item counts and modeled bytes; its manifests carry no checksums.
enum class CaptureMode { materialize, census };

struct DeviceConfig {
    std::string study_id = "study";
    std::string site_id = "site";
    std::vector<ChannelConfig> channels = default_channels();
    std::uint64_t seed = 0;
    CaptureMode mode = CaptureMode::materialize;
    /// Simulated wall-clock origin, UTC ms.
    core::TimestampMs epoch = 0;

    void validate() const;
};

/// Battery charge in whole milliseconds of collection time.
class BatteryModel {
public:
    explicit BatteryModel(double capacity_hours = 24.0);
    double capacity_hours() const { return capacity_ms_ / 3.6e6; }
    double remaining_hours() const { return remaining_ms_ / 3.6e6; }
    std::int64_t remaining_ms() const { return remaining_ms_; }
    void drain(std::int64_t ms);

private:
    std::int64_t capacity_ms_;
    std::int64_t remaining_ms_;
};

/// Two-button collection device driven by a virtual clock. Single owner.
class Device {
public:
    Device(DeviceConfig cfg, EncryptedDisk disk, BatteryModel battery = BatteryModel{});

    DeviceState state() const { return state_; }
    /// Virtual time, UTC ms.
    core::TimestampMs now() const { return now_; }

    void configure(const std::string& subject_id, const std::string& ward_id, const std::string& device_id,
                   const std::string& session_id = "sess-01");
    /// Configured -> Collecting; Collecting/PrivacyPaused/Finalizing -> finalize.
    /// Finalize writes the manifest, verifies every item on disk, then goes Off.
    /// Throws FinalizeError (state stays Finalizing) on checksum mismatch.
    void press_power();
    void press_privacy();
    /// Advances the clock by `dt_seconds`, rounded to whole ms. Returns the
    /// materialized items (empty in census mode).
    std::vector<core::DataItem> tick(double dt_seconds);

    EncryptedDisk swap_disk(EncryptedDisk fresh);
    BatteryModel swap_battery(BatteryModel fresh);

    const EncryptedDisk& disk() const { return disk_; }
    EncryptedDisk& disk() { return disk_; }
    const BatteryModel& battery() const { return battery_; }
    const DeviceConfig& config() const { return cfg_; }
    /// Manifest of the most recent successfully finalized session.
    const std::optional<core::SessionManifest>& last_manifest() const { return last_manifest_; }
    /// Items recorded so far in the current session, per configured channel.
    std::uint64_t emitted(core::Channel c) const;

private:
    struct ChannelState {
        std::int64_t collected_ms = 0;
        std::uint64_t emitted = 0;
    };
    struct Pending {
        std::size_t channel_index;
        std::uint64_t sequence;
        core::TimestampMs timestamp;
        core::Bytes payload;
    };

    void require(std::initializer_list<DeviceState> allowed, std::string_view op) const;
    void begin_finalize();
    void finish_finalize();
    std::vector<core::DataItem> advance(std::int64_t ms);
    core::ObjectKey key_for(core::Channel c, std::uint64_t seq) const;

    DeviceConfig cfg_;
    EncryptedDisk disk_;
    BatteryModel battery_;
    DeviceState state_ = DeviceState::Off;
    core::TimestampMs now_;
    std::vector<ChannelState> channels_;
    std::vector<std::uint64_t> seeds_;
    core::SessionManifest manifest_;
    std::optional<core::TimestampMs> open_gap_;
    std::optional<core::SessionManifest> last_manifest_;
};

}  // namespace avs::device
