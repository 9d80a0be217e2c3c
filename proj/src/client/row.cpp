#include "avs/client/row.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "avs/core/errors.hpp"
#include "avs/core/records.hpp"
#include "avs/media/codecs.hpp"

namespace avs::client {

static_assert(std::endian::native == std::endian::little, "unit encoding assumes a little-endian host");

std::string_view to_string(DType t) {
    switch (t) {
        case DType::u8: return "uint8";
        case DType::u16: return "uint16";
        case DType::i16: return "int16";
        case DType::f32: return "float32";
    }
    return "?";
}

std::size_t Tensor::elements() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::size_t Tensor::nbytes() const {
    const std::size_t w = dtype == DType::u8 ? 1 : dtype == DType::f32 ? 4 : 2;
    return elements() * w;
}

float Tensor::at(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape.size()) throw Error("tensor: index rank mismatch");
    std::size_t off = 0, i = 0;
    for (auto v : index) {
        if (v >= shape[i]) throw Error("tensor: index out of range");
        off = off * shape[i++] + v;
    }
    return data[off];
}

Tensor decode_payload(core::ByteSpan payload) {
    Tensor t;
    const auto fmt = media::sniff_format(payload);
    using core::MediaFormat;
    if (fmt == MediaFormat::tiff || fmt == MediaFormat::png) {
        const media::Image img = fmt == MediaFormat::tiff ? media::decode_tiff(payload) : media::decode_png(payload);
        t.dtype = img.bits_per_sample == 8 ? DType::u8 : DType::u16;
        t.shape = {img.height, img.width, img.samples_per_pixel};
        t.data.assign(img.samples.begin(), img.samples.end());
    } else if (fmt == MediaFormat::wav || fmt == MediaFormat::flac) {
        const media::Audio a = fmt == MediaFormat::wav ? media::decode_wav(payload) : media::decode_flac(payload);
        t.dtype = DType::i16;
        t.shape = a.channels == 1 ? std::vector<std::size_t>{a.frames()}
                                  : std::vector<std::size_t>{a.frames(), a.channels};
        t.data.assign(a.samples.begin(), a.samples.end());
    } else if (fmt == MediaFormat::vitals_csv) {
        const auto v = core::VitalsRecord::from_csv(std::string_view(reinterpret_cast<const char*>(payload.data()),
                                                                     payload.size()));
        const float nan = std::numeric_limits<float>::quiet_NaN();
        auto opt = [&](const std::optional<double>& o) { return o ? static_cast<float>(*o) : nan; };
        t.dtype = DType::f32;
        t.shape = {5};
        t.data = {static_cast<float>(v.hr), static_cast<float>(v.rr), opt(v.spo2), opt(v.bp_systolic),
                  opt(v.bp_diastolic)};
    } else {
        t.dtype = DType::u8;
        t.shape = {payload.size()};
        t.data.assign(payload.begin(), payload.end());
    }
    return t;
}

namespace {

template <class F>
auto find_named(const std::vector<std::string>& names, std::string_view name, F&& get) -> decltype(get(0)) {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return get(i);
    throw QueryError("row has no column '" + std::string(name) + "'");
}

}  // namespace

const rdb::Value& DecodedRow::value(std::string_view name) const {
    return find_named(names, name, [&](std::size_t i) -> const rdb::Value& { return values[i]; });
}

const Tensor& DecodedRow::tensor(std::string_view name) const {
    return find_named(tensor_names, name, [&](std::size_t i) -> const Tensor& { return tensors[i]; });
}

bool DecodedRow::has_tensor(std::string_view name) const {
    for (const auto& n : tensor_names)
        if (n == name) return true;
    return false;
}

// ---- serialization ---------------------------------------------------------

namespace {

class Out {
public:
    explicit Out(core::Bytes* b) : b_(b) {}
    void u8(std::uint8_t v) { add(&v, 1); }
    void u32(std::uint32_t v) { add(&v, 4); }
    void u64(std::uint64_t v) { add(&v, 8); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        add(s.data(), s.size());
    }
    void add(const void* p, std::size_t n) {
        if (b_) {
            const auto* c = static_cast<const std::uint8_t*>(p);
            b_->insert(b_->end(), c, c + n);
        }
        size += n;
    }
    std::size_t size = 0;

private:
    core::Bytes* b_;
};

class In {
public:
    explicit In(core::ByteSpan d) : d_(d) {}
    void get(void* p, std::size_t n) {
        if (n > d_.size() - pos_) throw CodecError("unit: truncated");
        std::memcpy(p, d_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() { std::uint8_t v; get(&v, 1); return v; }
    std::uint32_t u32() { std::uint32_t v; get(&v, 4); return v; }
    std::uint64_t u64() { std::uint64_t v; get(&v, 8); return v; }
    std::string str() {
        std::string s(u32(), '\0');
        get(s.data(), s.size());
        return s;
    }
    bool done() const { return pos_ == d_.size(); }

private:
    core::ByteSpan d_;
    std::size_t pos_ = 0;
};

void put_value(Out& o, const rdb::Value& v) {
    o.u8(static_cast<std::uint8_t>(v.index()));
    switch (v.index()) {
        case 0: break;
        case 1: o.u64(static_cast<std::uint64_t>(std::get<std::int64_t>(v))); break;
        case 2: o.add(&std::get<double>(v), 8); break;
        case 3: o.str(std::get<std::string>(v)); break;
        case 4: {
            const auto& b = std::get<core::Bytes>(v);
            o.u32(static_cast<std::uint32_t>(b.size()));
            o.add(b.data(), b.size());
            break;
        }
        case 5: {
            const auto& b = std::get<core::Box>(v);
            for (std::int32_t x : {b.x, b.y, b.w, b.h}) o.u32(static_cast<std::uint32_t>(x));
            break;
        }
        case 6: o.u8(std::get<bool>(v) ? 1 : 0); break;
    }
}

rdb::Value get_value(In& in) {
    switch (in.u8()) {
        case 0: return std::monostate{};
        case 1: return static_cast<std::int64_t>(in.u64());
        case 2: {
            double d;
            in.get(&d, 8);
            return d;
        }
        case 3: return in.str();
        case 4: {
            core::Bytes b(in.u32());
            in.get(b.data(), b.size());
            return b;
        }
        case 5: {
            core::Box b;
            b.x = static_cast<std::int32_t>(in.u32());
            b.y = static_cast<std::int32_t>(in.u32());
            b.w = static_cast<std::int32_t>(in.u32());
            b.h = static_cast<std::int32_t>(in.u32());
            return b;
        }
        case 6: return in.u8() != 0;
    }
    throw CodecError("unit: bad value tag");
}

void encode(Out& o, const Unit& u) {
    o.u32(static_cast<std::uint32_t>(u.rows.size()));
    for (const auto& r : u.rows) {
        o.u32(static_cast<std::uint32_t>(r.names.size()));
        for (std::size_t i = 0; i < r.names.size(); ++i) {
            o.str(r.names[i]);
            put_value(o, r.values[i]);
        }
        o.u32(static_cast<std::uint32_t>(r.tensors.size()));
        for (std::size_t i = 0; i < r.tensors.size(); ++i) {
            const Tensor& t = r.tensors[i];
            o.str(r.tensor_names[i]);
            o.u8(static_cast<std::uint8_t>(t.dtype));
            o.u32(static_cast<std::uint32_t>(t.shape.size()));
            for (auto d : t.shape) o.u64(d);
            o.u64(t.data.size());
            o.add(t.data.data(), t.data.size() * sizeof(float));
        }
    }
}

}  // namespace

core::Bytes serialize_unit(const Unit& u) {
    core::Bytes out;
    out.reserve(serialized_size(u));
    Out o(&out);
    encode(o, u);
    return out;
}

std::size_t serialized_size(const Unit& u) {
    Out o(nullptr);
    encode(o, u);
    return o.size;
}

Unit deserialize_unit(core::ByteSpan data) {
    In in(data);
    Unit u;
    u.rows.resize(in.u32());
    for (auto& r : u.rows) {
        const std::uint32_t nv = in.u32();
        for (std::uint32_t i = 0; i < nv; ++i) {
            r.names.push_back(in.str());
            r.values.push_back(get_value(in));
        }
        const std::uint32_t nt = in.u32();
        for (std::uint32_t i = 0; i < nt; ++i) {
            r.tensor_names.push_back(in.str());
            Tensor t;
            const std::uint8_t dt = in.u8();
            if (dt > static_cast<std::uint8_t>(DType::f32)) throw CodecError("unit: bad dtype");
            t.dtype = static_cast<DType>(dt);
            t.shape.resize(in.u32());
            for (auto& d : t.shape) d = in.u64();
            const std::uint64_t n = in.u64();
            if (n != t.elements() || n > data.size()) throw CodecError("unit: tensor size mismatch");
            t.data.resize(n);
            in.get(t.data.data(), n * sizeof(float));
            r.tensors.push_back(std::move(t));
        }
    }
    if (!in.done()) throw CodecError("unit: trailing bytes");
    return u;
}

}  // namespace avs::client
