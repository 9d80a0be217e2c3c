#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "avs/core/digest.hpp"
#include "avs/rdb/value.hpp"

namespace avs::client {

enum class DType : std::uint8_t { u8, u16, i16, f32 };
std::string_view to_string(DType t);

/// Dense row-major numeric array. Integer dtypes hold exact integral values.
struct Tensor {
    DType dtype = DType::u8;
    std::vector<std::size_t> shape;
    std::vector<float> data;

    std::size_t elements() const;
    /// Bytes of the logical dtype (u8: 1, u16/i16: 2, f32: 4) per element.
    std::size_t nbytes() const;
    float at(std::initializer_list<std::size_t> index) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Decodes a payload by its magic bytes: images to H x W x C, mono audio to
/// N (N x C otherwise), vitals CSV to [hr, rr, spo2, bp_systolic,
/// bp_diastolic] with NaN for absent readings. Unrecognised bytes become a
/// u8 vector of length N.
Tensor decode_payload(core::ByteSpan payload);

/// Metadata values plus decoded payload tensors of one dataset row.
struct DecodedRow {
    std::vector<std::string> names;
    std::vector<rdb::Value> values;
    std::vector<std::string> tensor_names;
    std::vector<Tensor> tensors;

    /// Throws QueryError for a missing name.
    const rdb::Value& value(std::string_view name) const;
    const Tensor& tensor(std::string_view name) const;
    bool has_tensor(std::string_view name) const;

    friend bool operator==(const DecodedRow&, const DecodedRow&) = default;
};

/// Streaming unit: one row, or n rows when NGrams are enabled.
struct Unit {
    std::vector<DecodedRow> rows;

    friend bool operator==(const Unit&, const Unit&) = default;
};

/// Deterministic little-endian encoding. Equal units encode to equal bytes.
core::Bytes serialize_unit(const Unit& u);
Unit deserialize_unit(core::ByteSpan data);
std::size_t serialized_size(const Unit& u);

}  // namespace avs::client
