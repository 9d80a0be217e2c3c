#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avs/client/row.hpp"

namespace avs::client {

struct TransformStep {
    std::string name;
    nlohmann::json args = nlohmann::json::object();

    friend bool operator==(const TransformStep&, const TransformStep&) = default;
};

/// Pure row-to-row function. `args` comes from the stream spec.
using TransformFn = std::function<DecodedRow(DecodedRow, const nlohmann::json& args)>;

/// Name -> pure transform. Built-ins (image tensors are H x W x C; an optional
/// "column" argument restricts a step to one tensor):
///   crop {x, y, w, h}   window clipped to the frame; empty result is an error
///   resize {w, h}       nearest neighbour, src = floor(dst * src_size / dst_size)
///   normalize {}        u8: v/255, u16: v/65535, i16: (v+32768)/65535; dtype f32
///   drop_payload {}     removes all tensors
class TransformRegistry {
public:
    static TransformRegistry builtin();

    void add(std::string name, TransformFn fn);
    bool has(const std::string& name) const { return fns_.count(name) != 0; }
    /// Throws ValidationError naming the first unknown step.
    void validate(const std::vector<TransformStep>& chain) const;
    /// Left-to-right composition. Adds one to `invocations` per applied step.
    DecodedRow apply(DecodedRow row, const std::vector<TransformStep>& chain, std::uint64_t* invocations = nullptr) const;

private:
    std::map<std::string, TransformFn> fns_;
};

}  // namespace avs::client
