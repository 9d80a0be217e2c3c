#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avs/core/digest.hpp"
#include "avs/core/types.hpp"

namespace avs::rdb {

enum class ColumnType : std::uint8_t { int64, float64, string, bytes, timestamp, box4, boolean };
std::string_view to_string(ColumnType t);
ColumnType parse_column_type(std::string_view s);

/// Cell value. monostate is SQL NULL; timestamps use the int64 alternative.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, core::Bytes, core::Box, bool>;

bool is_null(const Value& v);
/// Type check of a non-null value against a column type.
bool value_matches(ColumnType t, const Value& v);
std::string to_display(const Value& v);
nlohmann::json value_to_json(const Value& v);
/// Inverse of value_to_json for stats-capable types.
Value value_from_json(ColumnType t, const nlohmann::json& j);
/// Total order used for statistics and grouping (numeric for int/float).
int compare_values(const Value& a, const Value& b);

struct ColumnDef {
    std::string name;
    ColumnType type = ColumnType::int64;
    bool nullable = true;

    friend bool operator==(const ColumnDef&, const ColumnDef&) = default;
};

/// Ordered column list. Names are unique identifiers outside the PII namespace.
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<ColumnDef> columns);

    const std::vector<ColumnDef>& columns() const { return columns_; }
    std::size_t size() const { return columns_.size(); }
    const ColumnDef& at(std::size_t i) const { return columns_.at(i); }
    /// Throws QueryError for an unknown column.
    std::size_t index_of(std::string_view name) const;
    bool has(std::string_view name) const;

    std::string to_json() const;
    static Schema from_json(std::string_view text);

    friend bool operator==(const Schema&, const Schema&) = default;

private:
    std::vector<ColumnDef> columns_;
};

using Row = std::vector<Value>;

/// Throws ValidationError naming the first offending column.
void check_row(const Schema& schema, const Row& row);

}  // namespace avs::rdb
