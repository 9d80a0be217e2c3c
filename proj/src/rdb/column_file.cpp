#include "avs/rdb/column_file.hpp"

#include <cstring>

#include <zlib.h>

#include "avs/core/errors.hpp"

namespace avs::rdb {

using core::Bytes;
using core::ByteSpan;

namespace {

constexpr char kMagic[4] = {'R', 'D', 'B', 'C'};
constexpr std::uint16_t kVersion = 1;
enum Codec : std::uint8_t { kRaw = 0, kZlib = 1 };

class Writer {
public:
    Bytes out;
    void u8(std::uint8_t v) { out.push_back(v); }
    void u16(std::uint16_t v) { le(v, 2); }
    void u32(std::uint32_t v) { le(v, 4); }
    void u64(std::uint64_t v) { le(v, 8); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void blob(ByteSpan b) {
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b.data(), b.size());
    }

private:
    void le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
};

class Reader {
public:
    Reader(ByteSpan d, std::size_t pos = 0) : d_(d), pos_(pos) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
    std::uint64_t u64() { return le(8); }
    ByteSpan take(std::size_t n) {
        need(n);
        ByteSpan s = d_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    ByteSpan blob() { return take(u32()); }
    std::size_t pos() const { return pos_; }
    bool done() const { return pos_ == d_.size(); }

private:
    void need(std::size_t n) const {
        if (n > d_.size() - pos_) throw CodecError("column file: truncated");
    }
    std::uint64_t le(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(d_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    ByteSpan d_;
    std::size_t pos_;
};

bool has_minmax(ColumnType t) { return t != ColumnType::bytes && t != ColumnType::box4; }

void put_value(Writer& w, ColumnType t, const Value& v) {
    switch (t) {
        case ColumnType::int64:
        case ColumnType::timestamp: w.u64(static_cast<std::uint64_t>(std::get<std::int64_t>(v))); break;
        case ColumnType::float64: {
            std::uint64_t bits;
            const double d = std::get<double>(v);
            std::memcpy(&bits, &d, 8);
            w.u64(bits);
            break;
        }
        case ColumnType::string: w.blob(core::as_bytes(std::get<std::string>(v))); break;
        case ColumnType::bytes: w.blob(std::get<Bytes>(v)); break;
        case ColumnType::box4: {
            const auto& b = std::get<core::Box>(v);
            for (std::int32_t x : {b.x, b.y, b.w, b.h}) w.u32(static_cast<std::uint32_t>(x));
            break;
        }
        case ColumnType::boolean: w.u8(std::get<bool>(v) ? 1 : 0); break;
    }
}

Value get_value(Reader& r, ColumnType t) {
    switch (t) {
        case ColumnType::int64:
        case ColumnType::timestamp: return static_cast<std::int64_t>(r.u64());
        case ColumnType::float64: {
            const std::uint64_t bits = r.u64();
            double d;
            std::memcpy(&d, &bits, 8);
            return d;
        }
        case ColumnType::string: {
            ByteSpan s = r.blob();
            return std::string(s.begin(), s.end());
        }
        case ColumnType::bytes: {
            ByteSpan s = r.blob();
            return Bytes(s.begin(), s.end());
        }
        case ColumnType::box4: {
            core::Box b;
            b.x = static_cast<std::int32_t>(r.u32());
            b.y = static_cast<std::int32_t>(r.u32());
            b.w = static_cast<std::int32_t>(r.u32());
            b.h = static_cast<std::int32_t>(r.u32());
            return b;
        }
        case ColumnType::boolean: {
            const std::uint8_t b = r.u8();
            if (b > 1) throw CodecError("column file: bad bool");
            return b == 1;
        }
    }
    return std::monostate{};
}

Bytes zlib_compress(ByteSpan in) {
    uLongf len = compressBound(static_cast<uLong>(in.size()));
    Bytes out(len);
    if (compress2(out.data(), &len, in.data(), static_cast<uLong>(in.size()), 6) != Z_OK)
        throw CodecError("column file: zlib compression failed");
    out.resize(len);
    return out;
}

Bytes zlib_decompress(ByteSpan in, std::size_t raw_len) {
    Bytes out(raw_len);
    uLongf len = static_cast<uLongf>(raw_len);
    if (uncompress(out.data(), &len, in.data(), static_cast<uLong>(in.size())) != Z_OK || len != raw_len)
        throw CodecError("column file: corrupt zlib chunk");
    return out;
}

void put_stats(Writer& w, ColumnType t, const ColumnStats& s) {
    w.u64(s.null_count);
    w.u8(s.min ? 1 : 0);
    if (s.min) {
        put_value(w, t, *s.min);
        put_value(w, t, *s.max);
    }
}

ColumnStats get_stats(Reader& r, ColumnType t) {
    ColumnStats s;
    s.null_count = r.u64();
    const std::uint8_t has = r.u8();
    if (has > 1) throw CodecError("column file: bad stats flag");
    if (has) {
        s.min = get_value(r, t);
        s.max = get_value(r, t);
    }
    return s;
}

struct Footer {
    Schema schema;
    std::uint64_t rows = 0;
    struct Col {
        std::uint8_t codec;
        std::uint64_t offset, stored_len, raw_len;
        ColumnStats stats;
    };
    std::vector<Col> cols;
};

Footer read_footer(ByteSpan d) {
    if (d.size() < 14 || std::memcmp(d.data(), kMagic, 4) != 0 || std::memcmp(d.data() + d.size() - 4, kMagic, 4) != 0)
        throw CodecError("column file: bad magic");
    Reader head(d, 4);
    if (head.u16() != kVersion) throw CodecError("column file: unsupported version");
    Footer f;
    ByteSpan schema_json = head.blob();
    try {
        f.schema = Schema::from_json(std::string(schema_json.begin(), schema_json.end()));
    } catch (const Error& e) {
        throw CodecError(std::string("column file: ") + e.what());
    }
    f.rows = head.u64();
    const std::size_t chunks_start = head.pos();

    Reader tail(d, d.size() - 8);
    const std::uint32_t footer_len = tail.u32();
    if (footer_len > d.size() - 8 - chunks_start) throw CodecError("column file: bad footer length");
    Reader r(d.subspan(0, d.size() - 8), d.size() - 8 - footer_len);
    const std::uint16_t n = r.u16();
    if (n != f.schema.size()) throw CodecError("column file: column count mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        Footer::Col c;
        c.codec = r.u8();
        c.offset = r.u64();
        c.stored_len = r.u64();
        c.raw_len = r.u64();
        c.stats = get_stats(r, f.schema.at(i).type);
        if (c.codec > kZlib || c.offset < chunks_start || c.offset > d.size() - 8 - footer_len ||
            c.stored_len > d.size() - 8 - footer_len - c.offset)
            throw CodecError("column file: bad chunk descriptor");
        f.cols.push_back(std::move(c));
    }
    if (!r.done()) throw CodecError("column file: trailing footer bytes");
    return f;
}

}  // namespace

ColumnStats compute_stats(ColumnType t, const std::vector<Value>& values) {
    ColumnStats s;
    for (const auto& v : values) {
        if (is_null(v)) {
            ++s.null_count;
            continue;
        }
        if (!has_minmax(t)) continue;
        if (!s.min || compare_values(v, *s.min) < 0) s.min = v;
        if (!s.max || compare_values(v, *s.max) > 0) s.max = v;
    }
    return s;
}

Bytes encode_group(const Schema& schema, const std::vector<Row>& rows, bool compress) {
    Writer w;
    w.raw(kMagic, 4);
    w.u16(kVersion);
    w.blob(core::as_bytes(schema.to_json()));
    w.u64(rows.size());

    Writer footer;
    footer.u16(static_cast<std::uint16_t>(schema.size()));
    for (std::size_t c = 0; c < schema.size(); ++c) {
        const ColumnType t = schema.at(c).type;
        Writer chunk;
        std::vector<std::uint8_t> bitmap((rows.size() + 7) / 8, 0);
        std::vector<Value> column;
        column.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            column.push_back(rows[i].at(c));
            if (!is_null(rows[i][c])) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        }
        chunk.raw(bitmap.data(), bitmap.size());
        for (const auto& v : column)
            if (!is_null(v)) put_value(chunk, t, v);
        std::uint8_t codec = kRaw;
        Bytes stored = std::move(chunk.out);
        const std::uint64_t raw_len = stored.size();
        if (compress && stored.size() > 64) {
            Bytes z = zlib_compress(stored);
            if (z.size() < stored.size()) {
                stored = std::move(z);
                codec = kZlib;
            }
        }
        footer.u8(codec);
        footer.u64(w.out.size());
        footer.u64(stored.size());
        footer.u64(raw_len);
        put_stats(footer, t, compute_stats(t, column));
        w.raw(stored.data(), stored.size());
    }
    w.raw(footer.out.data(), footer.out.size());
    w.u32(static_cast<std::uint32_t>(footer.out.size()));
    w.raw(kMagic, 4);
    return std::move(w.out);
}

std::vector<ColumnStats> read_group_stats(ByteSpan file) {
    std::vector<ColumnStats> out;
    for (auto& c : read_footer(file).cols) out.push_back(std::move(c.stats));
    return out;
}

GroupData decode_group(ByteSpan file, const std::vector<bool>& wanted) {
    Footer f = read_footer(file);
    GroupData g;
    g.schema = f.schema;
    g.row_count = f.rows;
    g.columns.resize(f.cols.size());
    for (std::size_t c = 0; c < f.cols.size(); ++c) {
        g.stats.push_back(f.cols[c].stats);
        if (!wanted.empty() && !wanted.at(c)) continue;
        const auto& desc = f.cols[c];
        ByteSpan stored = file.subspan(desc.offset, desc.stored_len);
        Bytes inflated;
        if (desc.codec == kZlib) {
            inflated = zlib_decompress(stored, desc.raw_len);
            stored = inflated;
        } else if (desc.raw_len != desc.stored_len) {
            throw CodecError("column file: raw chunk length mismatch");
        }
        Reader r(stored);
        ByteSpan bitmap = r.take((f.rows + 7) / 8);
        const ColumnType t = f.schema.at(c).type;
        auto& col = g.columns[c];
        col.reserve(f.rows);
        for (std::uint64_t i = 0; i < f.rows; ++i) {
            if (bitmap[i / 8] & (1u << (i % 8))) col.push_back(get_value(r, t));
            else col.emplace_back(std::monostate{});
        }
        if (!r.done()) throw CodecError("column file: trailing chunk bytes");
    }
    return g;
}

}  // namespace avs::rdb
