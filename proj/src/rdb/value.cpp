#include "avs/rdb/value.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/records.hpp"

namespace avs::rdb {

using nlohmann::json;

std::string_view to_string(ColumnType t) {
    switch (t) {
        case ColumnType::int64: return "int64";
        case ColumnType::float64: return "float64";
        case ColumnType::string: return "string";
        case ColumnType::bytes: return "bytes";
        case ColumnType::timestamp: return "timestamp";
        case ColumnType::box4: return "box4";
        case ColumnType::boolean: return "bool";
    }
    return "?";
}

ColumnType parse_column_type(std::string_view s) {
    for (auto t : {ColumnType::int64, ColumnType::float64, ColumnType::string, ColumnType::bytes, ColumnType::timestamp,
                   ColumnType::box4, ColumnType::boolean})
        if (to_string(t) == s) return t;
    throw ParseError("unknown column type: " + std::string(s));
}

bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

bool value_matches(ColumnType t, const Value& v) {
    switch (t) {
        case ColumnType::int64:
        case ColumnType::timestamp: return std::holds_alternative<std::int64_t>(v);
        case ColumnType::float64: return std::holds_alternative<double>(v) && !std::isnan(std::get<double>(v));
        case ColumnType::string: return std::holds_alternative<std::string>(v);
        case ColumnType::bytes: return std::holds_alternative<core::Bytes>(v);
        case ColumnType::box4: return std::holds_alternative<core::Box>(v);
        case ColumnType::boolean: return std::holds_alternative<bool>(v);
    }
    return false;
}

std::string to_display(const Value& v) {
    struct V {
        std::string operator()(std::monostate) const { return "null"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return json(d).dump(); }
        std::string operator()(const std::string& s) const { return s; }
        std::string operator()(const core::Bytes& b) const { return "<" + std::to_string(b.size()) + " bytes>"; }
        std::string operator()(const core::Box& b) const {
            return "(" + std::to_string(b.x) + "," + std::to_string(b.y) + "," + std::to_string(b.w) + "," +
                   std::to_string(b.h) + ")";
        }
        std::string operator()(bool b) const { return b ? "true" : "false"; }
    };
    return std::visit(V{}, v);
}

json value_to_json(const Value& v) {
    struct V {
        json operator()(std::monostate) const { return nullptr; }
        json operator()(std::int64_t i) const { return i; }
        json operator()(double d) const { return d; }
        json operator()(const std::string& s) const { return s; }
        json operator()(const core::Bytes& b) const { return core::to_hex(b); }
        json operator()(const core::Box& b) const { return json::array({b.x, b.y, b.w, b.h}); }
        json operator()(bool b) const { return b; }
    };
    return std::visit(V{}, v);
}

Value value_from_json(ColumnType t, const json& j) {
    if (j.is_null()) return std::monostate{};
    switch (t) {
        case ColumnType::int64:
        case ColumnType::timestamp: return j.get<std::int64_t>();
        case ColumnType::float64: return j.get<double>();
        case ColumnType::string: return j.get<std::string>();
        case ColumnType::boolean: return j.get<bool>();
        case ColumnType::bytes: return core::from_hex(j.get<std::string>());
        case ColumnType::box4: return core::Box{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
    }
    return std::monostate{};
}

int compare_values(const Value& a, const Value& b) {
    auto num = [](const Value& v, double& out) {
        if (auto* i = std::get_if<std::int64_t>(&v)) {
            out = static_cast<double>(*i);
            return true;
        }
        if (auto* d = std::get_if<double>(&v)) {
            out = *d;
            return true;
        }
        return false;
    };
    if (std::holds_alternative<std::int64_t>(a) && std::holds_alternative<std::int64_t>(b)) {
        const auto x = std::get<std::int64_t>(a), y = std::get<std::int64_t>(b);
        return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = 0, y = 0;
    if (num(a, x) && num(b, y)) return x < y ? -1 : x > y ? 1 : 0;
    if (a < b) return -1;
    if (b < a) return 1;
    return 0;
}

namespace {

bool valid_column_name(std::string_view s) {
    if (s.empty() || s.size() > 128) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return s != "and" && s != "or" && s != "not" && s != "true" && s != "false" && s != "null";
}

}  // namespace

Schema::Schema(std::vector<ColumnDef> columns) : columns_(std::move(columns)) {
    std::set<std::string> seen;
    for (const auto& c : columns_) {
        if (!valid_column_name(c.name)) throw ValidationError(c.name, "invalid column name");
        if (core::is_pii_name(c.name)) throw ValidationError(c.name, "column name is in the PII namespace");
        if (!seen.insert(c.name).second) throw ValidationError(c.name, "duplicate column name");
    }
}

std::size_t Schema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i].name == name) return i;
    throw QueryError("unknown column: " + std::string(name));
}

bool Schema::has(std::string_view name) const {
    for (const auto& c : columns_)
        if (c.name == name) return true;
    return false;
}

std::string Schema::to_json() const {
    json cols = json::array();
    for (const auto& c : columns_) cols.push_back({{"name", c.name}, {"type", to_string(c.type)}, {"nullable", c.nullable}});
    return json{{"columns", cols}}.dump();
}

Schema Schema::from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        std::vector<ColumnDef> cols;
        for (const auto& c : j.at("columns"))
            cols.push_back({c.at("name").get<std::string>(), parse_column_type(c.at("type").get<std::string>()),
                            c.value("nullable", true)});
        return Schema(std::move(cols));
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema: ") + e.what());
    }
}

void check_row(const Schema& schema, const Row& row) {
    if (row.size() != schema.size())
        throw ValidationError("row", "expected " + std::to_string(schema.size()) + " values, got " +
                                         std::to_string(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) {
        const ColumnDef& c = schema.at(i);
        if (is_null(row[i])) {
            if (!c.nullable) throw ValidationError(c.name, "null in non-nullable column");
            continue;
        }
        if (!value_matches(c.type, row[i]))
            throw ValidationError(c.name, "value does not match column type " + std::string(to_string(c.type)));
    }
}

}  // namespace avs::rdb
