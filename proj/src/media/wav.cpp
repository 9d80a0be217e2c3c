#include <cstring>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"

namespace avs::media {
namespace {

void put_u16(Bytes& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_tag(Bytes& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint16_t get_u16(ByteSpan d, std::size_t off) {
    if (off + 2 > d.size()) throw CodecError("wav: truncated data");
    return static_cast<std::uint16_t>(d[off] | d[off + 1] << 8);
}

std::uint32_t get_u32(ByteSpan d, std::size_t off) {
    if (off + 4 > d.size()) throw CodecError("wav: truncated data");
    return static_cast<std::uint32_t>(d[off]) | static_cast<std::uint32_t>(d[off + 1]) << 8 |
           static_cast<std::uint32_t>(d[off + 2]) << 16 | static_cast<std::uint32_t>(d[off + 3]) << 24;
}

bool tag_is(ByteSpan d, std::size_t off, const char* tag) {
    return off + 4 <= d.size() && std::memcmp(d.data() + off, tag, 4) == 0;
}

}  // namespace

Bytes encode_wav(const Audio& audio) {
    if (audio.channels == 0 || audio.samples.size() % audio.channels != 0)
        throw CodecError("wav: sample count is not a multiple of the channel count");
    const std::uint32_t data_len = static_cast<std::uint32_t>(audio.samples.size() * 2);
    Bytes out;
    out.reserve(44 + data_len);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1);  // PCM
    put_u16(out, audio.channels);
    put_u32(out, audio.sample_rate);
    put_u32(out, audio.sample_rate * audio.channels * 2);
    put_u16(out, static_cast<std::uint16_t>(audio.channels * 2));
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_len);
    for (std::int16_t s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
    return out;
}

Audio decode_wav(ByteSpan d) {
    if (!tag_is(d, 0, "RIFF") || !tag_is(d, 8, "WAVE")) throw CodecError("wav: not a RIFF/WAVE file");
    Audio audio;
    bool have_fmt = false;
    std::size_t off = 12;
    while (off + 8 <= d.size()) {
        const std::uint32_t len = get_u32(d, off + 4);
        const std::size_t body = off + 8;
        if (tag_is(d, off, "fmt ")) {
            if (len < 16) throw CodecError("wav: short fmt chunk");
            if (get_u16(d, body) != 1) throw CodecError("wav: only PCM is supported");
            audio.channels = get_u16(d, body + 2);
            audio.sample_rate = get_u32(d, body + 4);
            if (get_u16(d, body + 14) != 16) throw CodecError("wav: only 16-bit samples are supported");
            if (audio.channels == 0) throw CodecError("wav: zero channels");
            have_fmt = true;
        } else if (tag_is(d, off, "data")) {
            if (!have_fmt) throw CodecError("wav: data chunk before fmt chunk");
            if (len > d.size() - body) throw CodecError("wav: truncated data chunk");
            if (len % (2u * audio.channels) != 0) throw CodecError("wav: partial sample frame");
            audio.samples.resize(len / 2);
            for (std::size_t i = 0; i < audio.samples.size(); ++i)
                audio.samples[i] = static_cast<std::int16_t>(get_u16(d, body + 2 * i));
            return audio;
        }
        off = body + len + (len & 1);
    }
    throw CodecError("wav: no data chunk");
}

std::optional<core::MediaFormat> sniff_format(ByteSpan d) {
    using core::MediaFormat;
    static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (d.size() >= 8 && std::memcmp(d.data(), kPng, 8) == 0) return MediaFormat::png;
    if (d.size() >= 4 && ((d[0] == 'I' && d[1] == 'I' && d[2] == 42 && d[3] == 0) ||
                          (d[0] == 'M' && d[1] == 'M' && d[2] == 0 && d[3] == 42)))
        return MediaFormat::tiff;
    if (tag_is(d, 0, "RIFF") && tag_is(d, 8, "WAVE")) return MediaFormat::wav;
    if (tag_is(d, 0, "fLaC")) return MediaFormat::flac;
    if (d.size() >= 12 && std::memcmp(d.data(), "timestamp_ms", 12) == 0) return MediaFormat::vitals_csv;
    return std::nullopt;
}

}  // namespace avs::media
