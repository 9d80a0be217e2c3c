#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "avs/rdb/value.hpp"

namespace avs::rdb {

/// Exact statistics of one column chunk. min/max cover non-null values and
/// are absent for bytes and box4 columns and for all-null chunks.
struct ColumnStats {
    std::uint64_t null_count = 0;
    std::optional<Value> min;
    std::optional<Value> max;

    friend bool operator==(const ColumnStats&, const ColumnStats&) = default;
};

ColumnStats compute_stats(ColumnType t, const std::vector<Value>& values);

/// Decoded row group: one value vector per requested column (others empty).
struct GroupData {
    Schema schema;
    std::uint64_t row_count = 0;
    std::vector<std::vector<Value>> columns;
    std::vector<ColumnStats> stats;
};

/// Serializes one row group (layout in docs/column-format.md). Chunks are
/// zlib-compressed when `compress` is set and that makes them smaller.
core::Bytes encode_group(const Schema& schema, const std::vector<Row>& rows, bool compress = true);

/// Decodes the columns flagged in `wanted` (all when empty). Throws
/// CodecError on malformed input.
GroupData decode_group(core::ByteSpan file, const std::vector<bool>& wanted = {});

/// Reads only the footer statistics.
std::vector<ColumnStats> read_group_stats(core::ByteSpan file);

}  // namespace avs::rdb
