#include <algorithm>
#include <array>
#include <cstdlib>
#include <cstring>
#include <limits>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"

namespace avs::media {
namespace {

constexpr std::uint32_t kBitsPerSample = 16;
constexpr int kMaxFixedOrder = 4;
constexpr int kMaxPartitionOrder = 6;
constexpr std::uint32_t kMaxRiceParam = 14;  // 15 is the escape code
constexpr std::uint32_t kRiceEscape = 15;

std::uint8_t crc8(const std::uint8_t* p, std::size_t n) {
    std::uint8_t crc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= p[i];
        for (int b = 0; b < 8; ++b) crc = static_cast<std::uint8_t>(crc & 0x80 ? (crc << 1) ^ 0x07 : crc << 1);
    }
    return crc;
}

std::uint16_t crc16(const std::uint8_t* p, std::size_t n) {
    std::uint16_t crc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= static_cast<std::uint16_t>(p[i] << 8);
        for (int b = 0; b < 8; ++b) crc = static_cast<std::uint16_t>(crc & 0x8000 ? (crc << 1) ^ 0x8005 : crc << 1);
    }
    return crc;
}

class BitWriter {
public:
    void bits(std::uint64_t value, unsigned n) {
        for (unsigned i = n; i-- > 0;) bit((value >> i) & 1u);
    }
    void signed_bits(std::int64_t value, unsigned n) {
        bits(static_cast<std::uint64_t>(value) & ((n == 64) ? ~0ull : ((1ull << n) - 1)), n);
    }
    void unary(std::uint64_t zeros) {
        for (std::uint64_t i = 0; i < zeros; ++i) bit(0);
        bit(1);
    }
    void bit(unsigned b) {
        acc_ = static_cast<std::uint8_t>(acc_ << 1 | (b & 1u));
        if (++nacc_ == 8) {
            out_.push_back(acc_);
            acc_ = 0;
            nacc_ = 0;
        }
    }
    void align() {
        while (nacc_ != 0) bit(0);
    }
    void byte(std::uint8_t b) { bits(b, 8); }
    const Bytes& bytes() const { return out_; }
    Bytes& bytes() { return out_; }

private:
    Bytes out_;
    std::uint8_t acc_ = 0;
    unsigned nacc_ = 0;
};

class BitReader {
public:
    explicit BitReader(ByteSpan d) : d_(d) {}

    std::uint64_t bits(unsigned n) {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < n; ++i) v = v << 1 | bit();
        return v;
    }
    std::int64_t signed_bits(unsigned n) {
        if (n == 0) return 0;
        const std::uint64_t v = bits(n);
        const std::uint64_t sign = 1ull << (n - 1);
        return static_cast<std::int64_t>((v ^ sign)) - static_cast<std::int64_t>(sign);
    }
    std::uint64_t unary() {
        std::uint64_t zeros = 0;
        while (bit() == 0) ++zeros;
        return zeros;
    }
    unsigned bit() {
        if (pos_ >= d_.size() * 8) throw CodecError("flac: truncated stream");
        const unsigned b = (d_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1u;
        ++pos_;
        return b;
    }
    void align() { pos_ = (pos_ + 7) & ~std::size_t{7}; }
    std::size_t byte_pos() const { return pos_ >> 3; }
    bool at_end() const { return pos_ >= d_.size() * 8; }

private:
    ByteSpan d_;
    std::size_t pos_ = 0;
};

std::uint64_t zigzag(std::int64_t r) {
    return r >= 0 ? static_cast<std::uint64_t>(r) << 1 : (static_cast<std::uint64_t>(-(r + 1)) << 1) | 1u;
}

std::int64_t unzigzag(std::uint64_t u) {
    return (u & 1u) ? -static_cast<std::int64_t>(u >> 1) - 1 : static_cast<std::int64_t>(u >> 1);
}

void fixed_residual(const std::int32_t* s, std::size_t n, int order, std::vector<std::int64_t>& res) {
    res.resize(n - order);
    for (std::size_t i = order; i < n; ++i) {
        std::int64_t pred = 0;
        switch (order) {
            case 0: pred = 0; break;
            case 1: pred = s[i - 1]; break;
            case 2: pred = 2ll * s[i - 1] - s[i - 2]; break;
            case 3: pred = 3ll * s[i - 1] - 3ll * s[i - 2] + s[i - 3]; break;
            case 4: pred = 4ll * s[i - 1] - 6ll * s[i - 2] + 4ll * s[i - 3] - s[i - 4]; break;
        }
        res[i - order] = s[i] - pred;
    }
}

unsigned signed_width(std::int64_t v) {
    unsigned n = 1;
    while (v < -(1ll << (n - 1)) || v > (1ll << (n - 1)) - 1) ++n;
    return n;
}

struct PartitionChoice {
    std::uint32_t param = 0;  // kRiceEscape means raw
    unsigned raw_bits = 0;
    std::uint64_t bits = 0;
};

PartitionChoice choose_partition(const std::int64_t* r, std::size_t count) {
    PartitionChoice best;
    best.bits = std::numeric_limits<std::uint64_t>::max();
    if (count == 0) return {0, 0, 4};
    std::uint64_t sum = 0;
    unsigned width = 1;
    for (std::size_t i = 0; i < count; ++i) {
        sum += zigzag(r[i]);
        width = std::max(width, signed_width(r[i]));
    }
    const std::uint64_t mean = sum / count;
    std::uint32_t guess = 0;
    while (guess < kMaxRiceParam && (2ull << guess) <= mean) ++guess;
    for (std::uint32_t k = guess == 0 ? 0 : guess - 1; k <= std::min(guess + 1, kMaxRiceParam); ++k) {
        std::uint64_t bits = 4 + count * (k + 1ull);
        for (std::size_t i = 0; i < count; ++i) bits += zigzag(r[i]) >> k;
        if (bits < best.bits) best = {k, 0, bits};
    }
    const std::uint64_t escape_bits = 4 + 5 + count * static_cast<std::uint64_t>(width);
    if (width <= 31 && escape_bits < best.bits) best = {kRiceEscape, width, escape_bits};
    return best;
}

struct ResidualPlan {
    int partition_order = 0;
    std::vector<PartitionChoice> partitions;
    std::uint64_t bits = std::numeric_limits<std::uint64_t>::max();
};

ResidualPlan plan_residual(const std::vector<std::int64_t>& res, std::size_t block, int pred_order) {
    ResidualPlan best;
    for (int p = 0; p <= kMaxPartitionOrder; ++p) {
        if (block % (std::size_t{1} << p) != 0) break;
        const std::size_t part = block >> p;
        if (part < static_cast<std::size_t>(pred_order)) break;
        ResidualPlan plan;
        plan.partition_order = p;
        plan.bits = 2 + 4;
        std::size_t off = 0;
        for (std::size_t i = 0; i < (std::size_t{1} << p); ++i) {
            const std::size_t count = i == 0 ? part - pred_order : part;
            plan.partitions.push_back(choose_partition(res.data() + off, count));
            plan.bits += plan.partitions.back().bits;
            off += count;
        }
        if (plan.bits < best.bits) best = std::move(plan);
    }
    return best;
}

void write_residual(BitWriter& w, const std::vector<std::int64_t>& res, const ResidualPlan& plan, std::size_t block,
                    int pred_order) {
    w.bits(0, 2);  // 4-bit Rice parameters
    w.bits(static_cast<unsigned>(plan.partition_order), 4);
    const std::size_t part = block >> plan.partition_order;
    std::size_t off = 0;
    for (std::size_t i = 0; i < plan.partitions.size(); ++i) {
        const std::size_t count = i == 0 ? part - pred_order : part;
        const PartitionChoice& pc = plan.partitions[i];
        w.bits(pc.param, 4);
        if (pc.param == kRiceEscape) {
            w.bits(pc.raw_bits, 5);
            for (std::size_t j = 0; j < count; ++j) w.signed_bits(res[off + j], pc.raw_bits);
        } else {
            for (std::size_t j = 0; j < count; ++j) {
                const std::uint64_t u = zigzag(res[off + j]);
                w.unary(u >> pc.param);
                w.bits(u & ((1ull << pc.param) - 1), pc.param);
            }
        }
        off += count;
    }
}

void encode_subframe(BitWriter& w, const std::int32_t* s, std::size_t n) {
    if (std::all_of(s, s + n, [&](std::int32_t v) { return v == s[0]; })) {
        w.bits(0, 1);
        w.bits(0b000000, 6);
        w.bits(0, 1);
        w.signed_bits(s[0], kBitsPerSample);
        return;
    }
    // Pick the fixed predictor with the smallest absolute residual sum, then
    // the cheapest Rice partitioning for it.
    int best_order = 0;
    std::uint64_t best_abs = std::numeric_limits<std::uint64_t>::max();
    std::vector<std::int64_t> res;
    for (int order = 0; order <= std::min<int>(kMaxFixedOrder, static_cast<int>(n) - 1); ++order) {
        fixed_residual(s, n, order, res);
        std::uint64_t total = 0;
        for (auto r : res) total += static_cast<std::uint64_t>(r < 0 ? -r : r);
        if (total < best_abs) {
            best_abs = total;
            best_order = order;
        }
    }
    fixed_residual(s, n, best_order, res);
    const ResidualPlan plan = plan_residual(res, n, best_order);
    const std::uint64_t fixed_bits = 8 + best_order * kBitsPerSample + plan.bits;
    const std::uint64_t verbatim_bits = 8 + n * kBitsPerSample;
    if (plan.partitions.empty() || fixed_bits >= verbatim_bits) {
        w.bits(0, 1);
        w.bits(0b000001, 6);
        w.bits(0, 1);
        for (std::size_t i = 0; i < n; ++i) w.signed_bits(s[i], kBitsPerSample);
        return;
    }
    w.bits(0, 1);
    w.bits(0b001000 | static_cast<unsigned>(best_order), 6);
    w.bits(0, 1);
    for (int i = 0; i < best_order; ++i) w.signed_bits(s[i], kBitsPerSample);
    write_residual(w, res, plan, n, best_order);
}

void write_utf8_number(BitWriter& w, std::uint64_t v) {
    if (v < 0x80) {
        w.byte(static_cast<std::uint8_t>(v));
        return;
    }
    int extra = 1;
    while (extra < 6 && v >= (1ull << (6 + 5 * extra))) ++extra;
    // Lead byte: (extra+1) ones, a zero, then the top payload bits.
    const unsigned lead_payload_bits = 6 - extra;
    const std::uint8_t lead_mask = static_cast<std::uint8_t>(0xFF << (7 - extra));
    w.byte(static_cast<std::uint8_t>(lead_mask | ((v >> (6 * extra)) & ((1u << lead_payload_bits) - 1))));
    for (int i = extra - 1; i >= 0; --i) w.byte(static_cast<std::uint8_t>(0x80 | ((v >> (6 * i)) & 0x3F)));
}

std::uint64_t read_utf8_number(BitReader& r) {
    const auto lead = static_cast<std::uint8_t>(r.bits(8));
    if (!(lead & 0x80)) return lead;
    int extra = 0;
    while (extra < 7 && (lead & (0x40 >> extra))) ++extra;
    if (extra == 0 || extra > 6) throw CodecError("flac: bad frame number encoding");
    std::uint64_t v = lead & ((1u << (6 - extra)) - 1);
    for (int i = 0; i < extra; ++i) {
        const auto b = static_cast<std::uint8_t>(r.bits(8));
        if ((b & 0xC0) != 0x80) throw CodecError("flac: bad frame number continuation");
        v = v << 6 | (b & 0x3F);
    }
    return v;
}

void decode_residual(BitReader& r, std::size_t block, int order, std::vector<std::int64_t>& out) {
    const unsigned method = static_cast<unsigned>(r.bits(2));
    if (method > 1) throw CodecError("flac: reserved residual coding method");
    const unsigned param_bits = method == 0 ? 4 : 5;
    const std::uint32_t escape = method == 0 ? 15 : 31;
    const unsigned porder = static_cast<unsigned>(r.bits(4));
    const std::size_t parts = std::size_t{1} << porder;
    if (block % parts != 0 || (block >> porder) < static_cast<std::size_t>(order))
        throw CodecError("flac: invalid partition order");
    const std::size_t part = block >> porder;
    for (std::size_t i = 0; i < parts; ++i) {
        const std::size_t count = i == 0 ? part - order : part;
        const auto param = static_cast<std::uint32_t>(r.bits(param_bits));
        if (param == escape) {
            const unsigned raw = static_cast<unsigned>(r.bits(5));
            for (std::size_t j = 0; j < count; ++j) out.push_back(r.signed_bits(raw));
        } else {
            for (std::size_t j = 0; j < count; ++j) {
                const std::uint64_t q = r.unary();
                out.push_back(unzigzag(q << param | r.bits(param)));
            }
        }
    }
}

std::vector<std::int64_t> decode_subframe(BitReader& r, std::size_t block, unsigned bps) {
    if (r.bit() != 0) throw CodecError("flac: subframe padding bit set");
    const unsigned type = static_cast<unsigned>(r.bits(6));
    unsigned wasted = 0;
    if (r.bit()) wasted = static_cast<unsigned>(r.unary()) + 1;
    if (wasted >= bps) throw CodecError("flac: wasted bits exceed sample size");
    bps -= wasted;

    std::vector<std::int64_t> s;
    s.reserve(block);
    if (type == 0) {
        s.assign(block, r.signed_bits(bps));
    } else if (type == 1) {
        for (std::size_t i = 0; i < block; ++i) s.push_back(r.signed_bits(bps));
    } else if (type >= 8 && type <= 12) {
        const int order = static_cast<int>(type - 8);
        if (static_cast<std::size_t>(order) > block) throw CodecError("flac: predictor order exceeds block");
        for (int i = 0; i < order; ++i) s.push_back(r.signed_bits(bps));
        std::vector<std::int64_t> res;
        decode_residual(r, block, order, res);
        for (std::size_t i = order; i < block; ++i) {
            std::int64_t pred = 0;
            switch (order) {
                case 1: pred = s[i - 1]; break;
                case 2: pred = 2 * s[i - 1] - s[i - 2]; break;
                case 3: pred = 3 * s[i - 1] - 3 * s[i - 2] + s[i - 3]; break;
                case 4: pred = 4 * s[i - 1] - 6 * s[i - 2] + 4 * s[i - 3] - s[i - 4]; break;
                default: break;
            }
            s.push_back(pred + res[i - order]);
        }
    } else if (type >= 32) {
        const int order = static_cast<int>(type - 31);
        if (static_cast<std::size_t>(order) > block) throw CodecError("flac: predictor order exceeds block");
        for (int i = 0; i < order; ++i) s.push_back(r.signed_bits(bps));
        const unsigned precision = static_cast<unsigned>(r.bits(4)) + 1;
        if (precision == 16) throw CodecError("flac: invalid LPC precision");
        const auto shift = r.signed_bits(5);
        if (shift < 0) throw CodecError("flac: negative LPC shift");
        std::vector<std::int64_t> coefs;
        for (int i = 0; i < order; ++i) coefs.push_back(r.signed_bits(precision));
        std::vector<std::int64_t> res;
        decode_residual(r, block, order, res);
        for (std::size_t i = order; i < block; ++i) {
            std::int64_t acc = 0;
            for (int j = 0; j < order; ++j) acc += coefs[j] * s[i - 1 - j];
            s.push_back((acc >> shift) + res[i - order]);
        }
    } else {
        throw CodecError("flac: reserved subframe type " + std::to_string(type));
    }
    if (wasted)
        for (auto& v : s) v *= (std::int64_t{1} << wasted);
    return s;
}

}  // namespace

Bytes encode_flac(const Audio& audio, std::uint32_t block_size) {
    if (audio.channels == 0 || audio.channels > 8) throw CodecError("flac: 1 to 8 channels supported");
    if (audio.samples.size() % audio.channels != 0) throw CodecError("flac: partial sample frame");
    if (block_size < 16 || block_size > 65535) throw CodecError("flac: block size must be within [16, 65535]");
    if (audio.sample_rate == 0 || audio.sample_rate >= (1u << 20)) throw CodecError("flac: invalid sample rate");
    const std::size_t frames = audio.frames();
    const unsigned ch = audio.channels;

    BitWriter w;
    for (char c : {'f', 'L', 'a', 'C'}) w.byte(static_cast<std::uint8_t>(c));
    w.bits(1, 1);  // last metadata block
    w.bits(0, 7);  // STREAMINFO
    w.bits(34, 24);
    w.bits(block_size, 16);
    w.bits(block_size, 16);
    w.bits(0, 24);
    w.bits(0, 24);
    w.bits(audio.sample_rate, 20);
    w.bits(ch - 1, 3);
    w.bits(kBitsPerSample - 1, 5);
    w.bits(frames, 36);
    for (int i = 0; i < 16; ++i) w.byte(0);  // MD5 unknown

    std::vector<std::int32_t> chan(block_size);
    std::uint64_t frame_no = 0;
    for (std::size_t start = 0; start < frames; start += block_size, ++frame_no) {
        const std::size_t n = std::min<std::size_t>(block_size, frames - start);
        BitWriter f;
        f.bits(0x3FFE, 14);
        f.bits(0, 1);
        f.bits(0, 1);   // fixed block size stream
        f.bits(7, 4);   // block size in 16 bits after the frame number
        f.bits(0, 4);   // sample rate from STREAMINFO
        f.bits(ch - 1, 4);
        f.bits(4, 3);   // 16 bits per sample
        f.bits(0, 1);
        write_utf8_number(f, frame_no);
        f.bits(n - 1, 16);
        f.byte(crc8(f.bytes().data(), f.bytes().size()));
        for (unsigned c = 0; c < ch; ++c) {
            for (std::size_t i = 0; i < n; ++i) chan[i] = audio.samples[(start + i) * ch + c];
            encode_subframe(f, chan.data(), n);
        }
        f.align();
        const std::uint16_t crc = crc16(f.bytes().data(), f.bytes().size());
        f.bits(crc, 16);
        Bytes& out = w.bytes();
        out.insert(out.end(), f.bytes().begin(), f.bytes().end());
    }
    return std::move(w.bytes());
}

Audio decode_flac(ByteSpan data) {
    if (data.size() < 4 || std::memcmp(data.data(), "fLaC", 4) != 0) throw CodecError("flac: missing stream marker");
    BitReader r(data.subspan(4));
    Audio audio;
    std::uint64_t total = 0;
    bool have_info = false;
    unsigned bps = 0;
    for (bool last = false; !last;) {
        last = r.bit() != 0;
        const unsigned type = static_cast<unsigned>(r.bits(7));
        const std::size_t len = static_cast<std::size_t>(r.bits(24));
        if (type == 0) {
            if (len != 34) throw CodecError("flac: bad STREAMINFO length");
            r.bits(16);
            r.bits(16);
            r.bits(24);
            r.bits(24);
            audio.sample_rate = static_cast<std::uint32_t>(r.bits(20));
            audio.channels = static_cast<std::uint16_t>(r.bits(3) + 1);
            bps = static_cast<unsigned>(r.bits(5) + 1);
            total = r.bits(36);
            for (int i = 0; i < 16; ++i) r.bits(8);
            have_info = true;
        } else {
            for (std::size_t i = 0; i < len; ++i) r.bits(8);
        }
    }
    if (!have_info) throw CodecError("flac: missing STREAMINFO");
    if (bps != kBitsPerSample) throw CodecError("flac: only 16-bit streams are supported");
    audio.samples.reserve(total * audio.channels);

    const ByteSpan frames = data.subspan(4);
    while (!r.at_end() && audio.frames() < total) {
        const std::size_t frame_start = r.byte_pos();
        if (r.bits(14) != 0x3FFE) throw CodecError("flac: lost frame sync");
        if (r.bit() != 0) throw CodecError("flac: reserved header bit set");
        r.bit();  // blocking strategy
        const unsigned bs_code = static_cast<unsigned>(r.bits(4));
        const unsigned sr_code = static_cast<unsigned>(r.bits(4));
        const unsigned assignment = static_cast<unsigned>(r.bits(4));
        const unsigned ss_code = static_cast<unsigned>(r.bits(3));
        if (r.bit() != 0) throw CodecError("flac: reserved header bit set");
        read_utf8_number(r);
        std::size_t block = 0;
        if (bs_code == 1) block = 192;
        else if (bs_code >= 2 && bs_code <= 5) block = 576u << (bs_code - 2);
        else if (bs_code == 6) block = r.bits(8) + 1;
        else if (bs_code == 7) block = r.bits(16) + 1;
        else if (bs_code >= 8) block = 256u << (bs_code - 8);
        else throw CodecError("flac: reserved block size code");
        if (sr_code == 12) r.bits(8);
        else if (sr_code == 13 || sr_code == 14) r.bits(16);
        else if (sr_code == 15) throw CodecError("flac: invalid sample rate code");
        if (ss_code != 0 && ss_code != 4) throw CodecError("flac: only 16-bit frames are supported");
        const std::size_t header_len = r.byte_pos() - frame_start;
        const auto expected_crc8 = static_cast<std::uint8_t>(r.bits(8));
        if (crc8(frames.data() + frame_start, header_len) != expected_crc8) throw CodecError("flac: header CRC mismatch");

        unsigned channels = 0;
        if (assignment < 8) channels = assignment + 1;
        else if (assignment <= 10) channels = 2;
        else throw CodecError("flac: reserved channel assignment");
        if (channels != audio.channels) throw CodecError("flac: channel count changed mid-stream");

        std::vector<std::vector<std::int64_t>> sub(channels);
        for (unsigned c = 0; c < channels; ++c) {
            const bool side = (assignment == 8 && c == 1) || (assignment == 9 && c == 0) || (assignment == 10 && c == 1);
            sub[c] = decode_subframe(r, block, bps + (side ? 1 : 0));
        }
        r.align();
        const std::size_t frame_len = r.byte_pos() - frame_start;
        const auto expected_crc16 = static_cast<std::uint16_t>(r.bits(16));
        if (crc16(frames.data() + frame_start, frame_len) != expected_crc16) throw CodecError("flac: frame CRC mismatch");

        for (std::size_t i = 0; i < block; ++i) {
            if (assignment == 8) {
                sub[1][i] = sub[0][i] - sub[1][i];
            } else if (assignment == 9) {
                sub[0][i] = sub[0][i] + sub[1][i];
            } else if (assignment == 10) {
                std::int64_t mid = sub[0][i] * 2 | (sub[1][i] & 1);
                sub[0][i] = (mid + sub[1][i]) >> 1;
                sub[1][i] = (mid - sub[1][i]) >> 1;
            }
            for (unsigned c = 0; c < channels; ++c) {
                const std::int64_t v = sub[c][i];
                if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max())
                    throw CodecError("flac: decoded sample out of range");
                audio.samples.push_back(static_cast<std::int16_t>(v));
            }
        }
    }
    if (audio.frames() != total) throw CodecError("flac: stream ended before all samples were decoded");
    return audio;
}

}  // namespace avs::media
