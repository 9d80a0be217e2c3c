#include <cstring>
#include <map>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"

namespace avs::media {
namespace {

enum Tag : std::uint16_t {
    kImageWidth = 256,
    kImageLength = 257,
    kBitsPerSample = 258,
    kCompression = 259,
    kPhotometric = 262,
    kStripOffsets = 273,
    kSamplesPerPixel = 277,
    kRowsPerStrip = 278,
    kStripByteCounts = 279,
    kPlanarConfig = 284,
};

enum FieldType : std::uint16_t { kByte = 1, kAscii = 2, kShort = 3, kLong = 4 };

class LeWriter {
public:
    void u16(std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes out;
};

class Reader {
public:
    Reader(ByteSpan data, bool big_endian) : data_(data), be_(big_endian) {}

    std::uint16_t u16(std::size_t off) const {
        need(off, 2);
        return be_ ? static_cast<std::uint16_t>(data_[off] << 8 | data_[off + 1])
                   : static_cast<std::uint16_t>(data_[off] | data_[off + 1] << 8);
    }
    std::uint32_t u32(std::size_t off) const {
        need(off, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const std::uint32_t b = data_[off + i];
            v |= be_ ? b << (8 * (3 - i)) : b << (8 * i);
        }
        return v;
    }
    void need(std::size_t off, std::size_t n) const {
        if (off > data_.size() || n > data_.size() - off) throw CodecError("tiff: truncated data");
    }
    bool big_endian() const { return be_; }
    ByteSpan data() const { return data_; }

private:
    ByteSpan data_;
    bool be_;
};

struct Entry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_offset = 0;  // absolute offset of the value bytes
};

std::uint32_t entry_value(const Reader& r, const Entry& e, std::uint32_t index) {
    if (index >= e.count) throw CodecError("tiff: field index out of range");
    switch (e.type) {
        case kByte: r.need(e.value_offset + index, 1); return r.data()[e.value_offset + index];
        case kShort: return r.u16(e.value_offset + 2 * index);
        case kLong: return r.u32(e.value_offset + 4 * index);
        default: throw CodecError("tiff: unsupported field type " + std::to_string(e.type));
    }
}

std::size_t type_size(std::uint16_t type) {
    switch (type) {
        case kByte:
        case kAscii: return 1;
        case kShort: return 2;
        case kLong: return 4;
        default: return 0;
    }
}

}  // namespace

void Image::validate() const {
    if (width == 0 || height == 0) throw CodecError("image: zero dimension");
    if (samples_per_pixel != 1 && samples_per_pixel != 3) throw CodecError("image: samples_per_pixel must be 1 or 3");
    if (bits_per_sample != 8 && bits_per_sample != 16) throw CodecError("image: bits_per_sample must be 8 or 16");
    if (samples.size() != sample_count()) throw CodecError("image: sample buffer size mismatch");
    if (bits_per_sample == 8)
        for (auto s : samples)
            if (s > 255) throw CodecError("image: 8-bit sample out of range");
}

Bytes encode_tiff(const Image& img) {
    img.validate();
    const std::uint32_t bytes_per_sample = img.bits_per_sample / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(img.sample_count() * bytes_per_sample);
    constexpr std::uint16_t kEntries = 10;
    const std::uint32_t ifd_offset = 8;
    const std::uint32_t ifd_size = 2 + kEntries * 12 + 4;
    const std::uint32_t bps_offset = ifd_offset + ifd_size;  // only used when spp == 3
    const std::uint32_t data_offset = bps_offset + (img.samples_per_pixel == 3 ? 6 : 0);

    LeWriter w;
    w.out.reserve(data_offset + data_len);
    w.out.push_back('I');
    w.out.push_back('I');
    w.u16(42);
    w.u32(ifd_offset);

    w.u16(kEntries);
    auto entry = [&](std::uint16_t tag, std::uint16_t type, std::uint32_t count, std::uint32_t value) {
        w.u16(tag);
        w.u16(type);
        w.u32(count);
        if (type == kShort && count == 1) {
            w.u16(static_cast<std::uint16_t>(value));
            w.u16(0);
        } else {
            w.u32(value);
        }
    };
    entry(kImageWidth, kLong, 1, img.width);
    entry(kImageLength, kLong, 1, img.height);
    if (img.samples_per_pixel == 1)
        entry(kBitsPerSample, kShort, 1, img.bits_per_sample);
    else
        entry(kBitsPerSample, kShort, 3, bps_offset);
    entry(kCompression, kShort, 1, 1);
    entry(kPhotometric, kShort, 1, img.samples_per_pixel == 3 ? 2 : 1);
    entry(kStripOffsets, kLong, 1, data_offset);
    entry(kSamplesPerPixel, kShort, 1, img.samples_per_pixel);
    entry(kRowsPerStrip, kLong, 1, img.height);
    entry(kStripByteCounts, kLong, 1, data_len);
    entry(kPlanarConfig, kShort, 1, 1);
    w.u32(0);  // no further IFDs

    if (img.samples_per_pixel == 3)
        for (int i = 0; i < 3; ++i) w.u16(img.bits_per_sample);

    if (bytes_per_sample == 1) {
        for (auto s : img.samples) w.out.push_back(static_cast<std::uint8_t>(s));
    } else {
        for (auto s : img.samples) w.u16(s);
    }
    return std::move(w.out);
}

Image decode_tiff(ByteSpan data) {
    if (data.size() < 8) throw CodecError("tiff: truncated header");
    bool be = false;
    if (data[0] == 'I' && data[1] == 'I')
        be = false;
    else if (data[0] == 'M' && data[1] == 'M')
        be = true;
    else
        throw CodecError("tiff: bad byte-order mark");
    const Reader r(data, be);
    if (r.u16(2) != 42) throw CodecError("tiff: bad magic");
    const std::uint32_t ifd = r.u32(4);
    const std::uint16_t n = r.u16(ifd);

    std::map<std::uint16_t, Entry> entries;
    for (std::uint16_t i = 0; i < n; ++i) {
        const std::size_t off = ifd + 2 + static_cast<std::size_t>(i) * 12;
        Entry e;
        const std::uint16_t tag = r.u16(off);
        e.type = r.u16(off + 2);
        e.count = r.u32(off + 4);
        const std::size_t sz = type_size(e.type);
        if (sz == 0) continue;  // ignore tags with types outside the minimal profile
        e.value_offset = sz * e.count <= 4 ? off + 8 : r.u32(off + 8);
        entries[tag] = e;
    }
    auto get = [&](std::uint16_t tag, std::uint32_t index = 0) -> std::uint32_t {
        const auto it = entries.find(tag);
        if (it == entries.end()) throw CodecError("tiff: missing required tag " + std::to_string(tag));
        return entry_value(r, it->second, index);
    };
    auto get_or = [&](std::uint16_t tag, std::uint32_t dflt) {
        return entries.contains(tag) ? get(tag) : dflt;
    };

    Image img;
    img.width = get(kImageWidth);
    img.height = get(kImageLength);
    const std::uint32_t spp = get_or(kSamplesPerPixel, 1);
    if (spp != 1 && spp != 3) throw CodecError("tiff: unsupported samples per pixel " + std::to_string(spp));
    img.samples_per_pixel = static_cast<std::uint8_t>(spp);
    const std::uint32_t bps = get_or(kBitsPerSample, 1);
    if (bps != 8 && bps != 16) throw CodecError("tiff: unsupported bits per sample " + std::to_string(bps));
    for (std::uint32_t i = 1; i < spp && entries.at(kBitsPerSample).count > 1; ++i)
        if (get(kBitsPerSample, i) != bps) throw CodecError("tiff: mixed bits per sample");
    img.bits_per_sample = static_cast<std::uint8_t>(bps);
    if (get_or(kCompression, 1) != 1) throw CodecError("tiff: compressed data is outside the minimal profile");
    if (get_or(kPlanarConfig, 1) != 1) throw CodecError("tiff: planar configuration 2 is unsupported");
    const std::uint32_t photometric = get(kPhotometric);
    if ((spp == 1 && photometric > 1) || (spp == 3 && photometric != 2))
        throw CodecError("tiff: unsupported photometric interpretation");
    if (img.width == 0 || img.height == 0) throw CodecError("tiff: zero dimension");

    const std::size_t bytes_per_sample = bps / 8;
    const std::size_t total = img.sample_count() * bytes_per_sample;
    const Entry& offsets = entries.at(kStripOffsets);
    const Entry& counts = entries.at(kStripByteCounts);
    if (offsets.count != counts.count || offsets.count == 0) throw CodecError("tiff: inconsistent strip tables");

    Bytes raw;
    raw.reserve(total);
    for (std::uint32_t s = 0; s < offsets.count; ++s) {
        const std::uint32_t off = entry_value(r, offsets, s);
        const std::uint32_t len = entry_value(r, counts, s);
        r.need(off, len);
        raw.insert(raw.end(), data.begin() + off, data.begin() + off + len);
    }
    if (raw.size() < total) throw CodecError("tiff: truncated pixel data");

    img.samples.resize(img.sample_count());
    for (std::size_t i = 0; i < img.samples.size(); ++i) {
        if (bytes_per_sample == 1) {
            img.samples[i] = raw[i];
        } else {
            const std::uint8_t a = raw[2 * i], b = raw[2 * i + 1];
            img.samples[i] = be ? static_cast<std::uint16_t>(a << 8 | b) : static_cast<std::uint16_t>(b << 8 | a);
        }
    }
    if (photometric == 0) {  // WhiteIsZero
        const std::uint16_t mx = img.max_value();
        for (auto& s : img.samples) s = static_cast<std::uint16_t>(mx - s);
    }
    return img;
}

}  // namespace avs::media
