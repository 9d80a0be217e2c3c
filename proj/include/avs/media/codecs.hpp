#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avs/core/digest.hpp"
#include "avs/core/types.hpp"

namespace avs::media {

using core::Bytes;
using core::ByteSpan;

/// Interleaved, row-major raster. 8-bit images keep values in [0, 255].
struct Image {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint8_t samples_per_pixel = 1;  // 1 (gray) or 3 (RGB)
    std::uint8_t bits_per_sample = 8;    // 8 or 16
    std::vector<std::uint16_t> samples;

    std::size_t sample_count() const {
        return static_cast<std::size_t>(width) * height * samples_per_pixel;
    }
    std::uint16_t max_value() const { return bits_per_sample == 8 ? 255 : 65535; }
    std::uint16_t at(std::uint32_t x, std::uint32_t y, std::uint32_t c = 0) const {
        return samples[(static_cast<std::size_t>(y) * width + x) * samples_per_pixel + c];
    }
    void validate() const;

    friend bool operator==(const Image&, const Image&) = default;
};

/// Interleaved PCM-16.
struct Audio {
    std::uint32_t sample_rate = 16000;
    std::uint16_t channels = 1;
    std::vector<std::int16_t> samples;

    std::size_t frames() const { return channels == 0 ? 0 : samples.size() / channels; }
    friend bool operator==(const Audio&, const Audio&) = default;
};

// Baseline TIFF: uncompressed, chunky planar configuration, 8/16-bit gray or
// RGB. The writer emits little-endian single-strip files; the reader also
// accepts big-endian and multi-strip layouts.
Bytes encode_tiff(const Image& img);
Image decode_tiff(ByteSpan data);

// PNG through libpng with fixed encoder parameters and no time chunks.
Bytes encode_png(const Image& img);
Image decode_png(ByteSpan data);

// RIFF/WAVE PCM-16.
Bytes encode_wav(const Audio& audio);
Audio decode_wav(ByteSpan data);

// FLAC bitstream: STREAMINFO plus frames of CONSTANT, VERBATIM or FIXED
// subframes with Rice-coded residuals. The decoder additionally understands
// LPC subframes and wasted-bits headers. 16 bits per sample only.
Bytes encode_flac(const Audio& audio, std::uint32_t block_size = 4096);
Audio decode_flac(ByteSpan data);

/// Identifies a payload by its magic bytes.
std::optional<core::MediaFormat> sniff_format(ByteSpan data);

}  // namespace avs::media
