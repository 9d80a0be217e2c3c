#include "avs/client/transforms.hpp"

#include <algorithm>

#include "avs/core/errors.hpp"

namespace avs::client {

using nlohmann::json;

namespace {

template <class F>
DecodedRow for_tensors(DecodedRow row, const json& args, bool images_only, F&& f) {
    const std::string only = args.value("column", std::string());
    for (std::size_t i = 0; i < row.tensors.size(); ++i) {
        if (!only.empty() && row.tensor_names[i] != only) continue;
        if (images_only && row.tensors[i].shape.size() != 3) continue;
        row.tensors[i] = f(std::move(row.tensors[i]));
    }
    return row;
}

std::int64_t int_arg(const json& args, const char* key) {
    if (!args.contains(key) || !args.at(key).is_number_integer())
        throw ValidationError(key, "integer transform argument required");
    return args.at(key).get<std::int64_t>();
}

Tensor crop(Tensor t, const json& args) {
    const std::int64_t H = static_cast<std::int64_t>(t.shape[0]), W = static_cast<std::int64_t>(t.shape[1]);
    const std::size_t C = t.shape[2];
    const std::int64_t x0 = std::clamp<std::int64_t>(int_arg(args, "x"), 0, W);
    const std::int64_t y0 = std::clamp<std::int64_t>(int_arg(args, "y"), 0, H);
    const std::int64_t x1 = std::clamp<std::int64_t>(int_arg(args, "x") + int_arg(args, "w"), 0, W);
    const std::int64_t y1 = std::clamp<std::int64_t>(int_arg(args, "y") + int_arg(args, "h"), 0, H);
    if (x1 <= x0 || y1 <= y0) throw Error("crop: window does not intersect the frame");
    Tensor out;
    out.dtype = t.dtype;
    out.shape = {static_cast<std::size_t>(y1 - y0), static_cast<std::size_t>(x1 - x0), C};
    out.data.reserve(out.elements());
    for (std::int64_t y = y0; y < y1; ++y) {
        const auto row = t.data.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(y) * W + x0) * C);
        out.data.insert(out.data.end(), row, row + static_cast<std::ptrdiff_t>((x1 - x0) * static_cast<std::int64_t>(C)));
    }
    return out;
}

Tensor resize(Tensor t, const json& args) {
    const std::int64_t w = int_arg(args, "w"), h = int_arg(args, "h");
    if (w <= 0 || h <= 0) throw ValidationError("resize", "w and h must be positive");
    const std::size_t H = t.shape[0], W = t.shape[1], C = t.shape[2];
    Tensor out;
    out.dtype = t.dtype;
    out.shape = {static_cast<std::size_t>(h), static_cast<std::size_t>(w), C};
    out.data.resize(out.elements());
    for (std::size_t y = 0; y < out.shape[0]; ++y) {
        const std::size_t sy = y * H / out.shape[0];
        for (std::size_t x = 0; x < out.shape[1]; ++x) {
            const std::size_t sx = x * W / out.shape[1];
            for (std::size_t c = 0; c < C; ++c) out.data[(y * out.shape[1] + x) * C + c] = t.data[(sy * W + sx) * C + c];
        }
    }
    return out;
}

Tensor normalize(Tensor t, const json&) {
    float offset = 0, scale = 1;
    switch (t.dtype) {
        case DType::u8: scale = 255.0f; break;
        case DType::u16: scale = 65535.0f; break;
        case DType::i16: offset = 32768.0f; scale = 65535.0f; break;
        case DType::f32: return t;
    }
    for (auto& v : t.data) v = (v + offset) / scale;
    t.dtype = DType::f32;
    return t;
}

}  // namespace

TransformRegistry TransformRegistry::builtin() {
    TransformRegistry r;
    r.add("crop", [](DecodedRow row, const json& a) { return for_tensors(std::move(row), a, true, [&](Tensor t) { return crop(std::move(t), a); }); });
    r.add("resize", [](DecodedRow row, const json& a) { return for_tensors(std::move(row), a, true, [&](Tensor t) { return resize(std::move(t), a); }); });
    r.add("normalize", [](DecodedRow row, const json& a) { return for_tensors(std::move(row), a, false, [&](Tensor t) { return normalize(std::move(t), a); }); });
    r.add("drop_payload", [](DecodedRow row, const json&) {
        row.tensor_names.clear();
        row.tensors.clear();
        return row;
    });
    return r;
}

void TransformRegistry::add(std::string name, TransformFn fn) { fns_[std::move(name)] = std::move(fn); }

void TransformRegistry::validate(const std::vector<TransformStep>& chain) const {
    for (const auto& s : chain) {
        if (!has(s.name)) throw ValidationError("transforms", "unknown transform '" + s.name + "'");
        if (!s.args.is_object() && !s.args.is_null()) throw ValidationError("transforms", "arguments of '" + s.name + "' must be an object");
    }
}

DecodedRow TransformRegistry::apply(DecodedRow row, const std::vector<TransformStep>& chain,
                                    std::uint64_t* invocations) const {
    for (const auto& s : chain) {
        auto it = fns_.find(s.name);
        if (it == fns_.end()) throw ValidationError("transforms", "unknown transform '" + s.name + "'");
        static const json kNoArgs = json::object();
        row = it->second(std::move(row), s.args.is_null() ? kNoArgs : s.args);
        if (invocations) ++*invocations;
    }
    return row;
}

}  // namespace avs::client
