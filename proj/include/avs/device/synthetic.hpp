#pragma once

#include <cstdint>

#include "avs/core/records.hpp"
#include "avs/core/types.hpp"
#include "avs/device/channel.hpp"
#include "avs/media/codecs.hpp"

namespace avs::device {

std::uint64_t mix64(std::uint64_t x);

/// Pixel values planted into synthetic frames. Background samples are drawn
/// uniformly from [0, background_limit); bed and person pixels are constant.
struct Markers {
    std::uint16_t background_limit;
    std::uint16_t bed;
    std::uint16_t person;
};
Markers markers_for(std::uint8_t bits_per_sample);

/// Planted rectangles of one frame. `person` lies strictly inside `bed` and
/// moves with the sequence number.
struct SceneTruth {
    core::Box bed;
    core::Box person;
};
SceneTruth scene_truth(std::uint64_t seed, std::uint32_t width, std::uint32_t height, std::uint64_t sequence);

/// Planted sinusoid of one audio chunk: sample = round(amplitude * 32768 *
/// sin(2*pi*frequency*i/rate + phase)). Frequencies are whole Hz.
struct ToneTruth {
    double amplitude;
    std::uint32_t frequency_hz;
    double phase;
};
ToneTruth tone_truth(std::uint64_t seed, std::uint64_t sequence);

/// Seed of one channel's generator.
std::uint64_t channel_seed(std::uint64_t session_seed, core::Channel c);

media::Image render_frame(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t sequence);
media::Audio render_tone(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t sequence);
core::VitalsRecord synth_vitals(std::uint64_t seed, std::uint64_t sequence, core::TimestampMs timestamp);

/// Encoded raw payload (TIFF, WAV or vitals CSV) for one item.
core::Bytes render_payload(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t sequence,
                           core::TimestampMs timestamp);

}  // namespace avs::device
