#include "avs/device/channel.hpp"

#include <cmath>

#include "avs/core/errors.hpp"

namespace avs::device {

using core::Channel;

core::MediaFormat ChannelConfig::raw_format() const {
    switch (core::modality_of(channel)) {
        case core::Modality::image: return core::MediaFormat::tiff;
        case core::Modality::audio: return core::MediaFormat::wav;
        case core::Modality::vitals: return core::MediaFormat::vitals_csv;
    }
    return core::MediaFormat::tiff;
}

void ChannelConfig::validate() const {
    if (!(frame_rate > 0) || !std::isfinite(frame_rate)) throw ValidationError("frame_rate", "must be positive");
    if (bytes_per_item == 0) throw ValidationError("bytes_per_item", "must be positive");
    if (core::is_image_channel(channel)) {
        if (payload_width < 16 || payload_height < 12)
            throw ValidationError("payload_width", "image payloads must be at least 16x12");
        if (samples_per_pixel != 1 && samples_per_pixel != 3)
            throw ValidationError("samples_per_pixel", "must be 1 or 3");
        if (bits_per_sample != 8 && bits_per_sample != 16)
            throw ValidationError("bits_per_sample", "must be 8 or 16");
    } else if (channel == Channel::audio) {
        const double per_chunk = payload_width / frame_rate;
        if (payload_width == 0 || per_chunk < 1 || per_chunk != std::floor(per_chunk))
            throw ValidationError("payload_width", "audio sample rate must be a positive multiple of the chunk rate");
    }
}

ChannelConfig default_channel(Channel c) {
    ChannelConfig cfg;
    cfg.channel = c;
    switch (c) {
        case Channel::wide:
        case Channel::narrow: break;
        case Channel::depth:
            cfg.samples_per_pixel = 1;
            cfg.bits_per_sample = 16;
            cfg.bytes_per_item = 19'000;
            break;
        case Channel::ir:
            cfg.frame_rate = 8.0;
            cfg.sensor_width = 160;
            cfg.sensor_height = 120;
            cfg.payload_width = 40;
            cfg.payload_height = 30;
            cfg.samples_per_pixel = 1;
            cfg.bits_per_sample = 16;
            cfg.bytes_per_item = 23'000;
            break;
        case Channel::audio:
            cfg.frame_rate = 1.0;
            cfg.sensor_width = 16'000;
            cfg.sensor_height = 1;
            cfg.payload_width = 16'000;
            cfg.payload_height = 1;
            cfg.samples_per_pixel = 1;
            cfg.bits_per_sample = 16;
            cfg.bytes_per_item = 16'000;
            break;
        case Channel::vitals: return vitals_channel();
    }
    return cfg;
}

std::vector<ChannelConfig> default_channels() {
    return {default_channel(Channel::wide), default_channel(Channel::narrow), default_channel(Channel::depth),
            default_channel(Channel::ir), default_channel(Channel::audio)};
}

ChannelConfig vitals_channel(double rate_hz) {
    ChannelConfig cfg;
    cfg.channel = Channel::vitals;
    cfg.frame_rate = rate_hz;
    cfg.sensor_width = cfg.sensor_height = 0;
    cfg.payload_width = cfg.payload_height = 0;
    cfg.samples_per_pixel = 0;
    cfg.bits_per_sample = 0;
    cfg.bytes_per_item = 64;
    cfg.pauses_with_privacy = false;
    return cfg;
}

}  // namespace avs::device
