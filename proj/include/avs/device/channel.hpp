#pragma once

#include <cstdint>
#include <vector>

#include "avs/core/types.hpp"

namespace avs::device {

/// Capture parameters of one sensor channel. `sensor_*` is the physical
/// sensor geometry; `bytes_per_item` is its encoded-size model. Stored
/// synthetic payloads are rendered at the smaller `payload_*` geometry.
struct ChannelConfig {
    core::Channel channel = core::Channel::wide;
    double frame_rate = 25.0;            // items per second
    std::uint32_t sensor_width = 1280;   // audio: sensor sample rate in Hz
    std::uint32_t sensor_height = 720;
    std::uint32_t payload_width = 64;    // audio: payload sample rate in Hz
    std::uint32_t payload_height = 36;
    std::uint8_t samples_per_pixel = 3;
    std::uint8_t bits_per_sample = 8;
    std::uint64_t bytes_per_item = 28'000;  // encoded-size model
    bool pauses_with_privacy = true;

    core::MediaFormat raw_format() const;
    void validate() const;
};

/// Per-item size model: wide 28000, narrow 28000, depth 19000, ir 23000,
/// audio 16000 bytes. Sum at default rates: 2,075,000 B/s (6.96 GiB/h).
ChannelConfig default_channel(core::Channel c);

/// wide, narrow, depth, ir, audio. The vitals monitor is a separate device and
/// is not part of the default set.
std::vector<ChannelConfig> default_channels();

/// Bedside vitals monitor: HR/RR rows at `rate_hz`. Not paused by the privacy button.
ChannelConfig vitals_channel(double rate_hz = 2.0);

}  // namespace avs::device
