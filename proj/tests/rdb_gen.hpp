#pragma once

#include <algorithm>
#include <optional>
#include <random>

#include "avs/rdb/dataset.hpp"

namespace avs::testing {

/// Wide synthetic table sorted by subject_id then ts.
inline rdb::Schema synthetic_schema() {
    using rdb::ColumnType;
    return rdb::Schema({{"subject_id", ColumnType::string, false},
                        {"channel", ColumnType::string, false},
                        {"ts", ColumnType::timestamp, false},
                        {"seq", ColumnType::int64, false},
                        {"score", ColumnType::float64, true},
                        {"flag", ColumnType::boolean, true},
                        {"region", ColumnType::box4, true},
                        {"payload", ColumnType::bytes, true}});
}

inline std::string subject_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03d", i);
    return buf;
}

inline std::vector<rdb::Row> synthetic_rows(std::size_t n, std::uint64_t seed, int subjects = 40) {
    std::mt19937_64 rng(seed);
    static const char* channels[] = {"wide", "narrow", "depth", "ir", "audio", "vitals"};
    std::vector<rdb::Row> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        rdb::Row r;
        r.emplace_back(subject_name(static_cast<int>(rng() % subjects) + 1));
        r.emplace_back(std::string(channels[rng() % 6]));
        r.emplace_back(static_cast<std::int64_t>(rng() % 100'000));
        r.emplace_back(static_cast<std::int64_t>(rng() % 2001) - 1000);
        if (rng() % 10 == 0) r.emplace_back(std::monostate{});
        else r.emplace_back(static_cast<double>(rng() % 10'000) / 100.0 - 20.0);
        if (rng() % 7 == 0) r.emplace_back(std::monostate{});
        else r.emplace_back(rng() % 2 == 0);
        r.emplace_back(core::Box{static_cast<int>(rng() % 64), static_cast<int>(rng() % 36), 4, 4});
        core::Bytes payload(rng() % 24);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        r.emplace_back(std::move(payload));
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const rdb::Row& a, const rdb::Row& b) {
        const int c = rdb::compare_values(a[0], b[0]);
        return c != 0 ? c < 0 : rdb::compare_values(a[2], b[2]) < 0;
    });
    return rows;
}

/// Random filter over the comparable columns of synthetic_schema().
inline rdb::Predicate random_predicate(std::mt19937_64& rng, int depth = 3) {
    using rdb::CmpOp;
    using rdb::Predicate;
    if (depth > 0 && rng() % 3 != 0) {
        switch (rng() % 3) {
            case 0: return random_predicate(rng, depth - 1) && random_predicate(rng, depth - 1);
            case 1: return random_predicate(rng, depth - 1) || random_predicate(rng, depth - 1);
            default: return !random_predicate(rng, depth - 1);
        }
    }
    const auto op = static_cast<CmpOp>(rng() % 6);
    switch (rng() % 6) {
        case 0: return Predicate::cmp("subject_id", op, subject_name(static_cast<int>(rng() % 42)));
        case 1: {
            static const char* ch[] = {"wide", "ir", "vitals", "zzz"};
            return Predicate::cmp("channel", op, std::string(ch[rng() % 4]));
        }
        case 2: return Predicate::cmp("ts", op, static_cast<std::int64_t>(rng() % 110'000) - 5000);
        case 3: return Predicate::cmp("seq", op, static_cast<std::int64_t>(rng() % 2200) - 1100);
        case 4: return Predicate::cmp("score", op, static_cast<double>(rng() % 12'000) / 100.0 - 30.0);
        default: return Predicate::cmp("flag", op, rng() % 2 == 0);
    }
}

/// Independent reference evaluator: SQL three-valued logic, written directly
/// against the Predicate tree. nullopt means unknown.
inline std::optional<bool> oracle_eval(const rdb::Schema& schema, const rdb::Row& row, const rdb::Predicate& p) {
    using K = rdb::Predicate::Kind;
    switch (p.kind) {
        case K::always: return true;
        case K::negate: {
            auto v = oracle_eval(schema, row, p.children[0]);
            if (!v) return std::nullopt;
            return !*v;
        }
        case K::conj: {
            auto a = oracle_eval(schema, row, p.children[0]), b = oracle_eval(schema, row, p.children[1]);
            if ((a && !*a) || (b && !*b)) return false;
            if (!a || !b) return std::nullopt;
            return true;
        }
        case K::disj: {
            auto a = oracle_eval(schema, row, p.children[0]), b = oracle_eval(schema, row, p.children[1]);
            if ((a && *a) || (b && *b)) return true;
            if (!a || !b) return std::nullopt;
            return false;
        }
        case K::compare: break;
    }
    const rdb::Value& cell = row.at(schema.index_of(p.column));
    if (std::holds_alternative<std::monostate>(cell)) return std::nullopt;
    int c = 0;
    if (const auto* s = std::get_if<std::string>(&cell)) {
        const auto& l = std::get<std::string>(p.literal);
        c = *s < l ? -1 : *s > l ? 1 : 0;
    } else if (const auto* b = std::get_if<bool>(&cell)) {
        const bool l = std::get<bool>(p.literal);
        c = static_cast<int>(*b) - static_cast<int>(l);
    } else {
        const long double x = std::holds_alternative<double>(cell) ? std::get<double>(cell)
                                                                   : static_cast<long double>(std::get<std::int64_t>(cell));
        const long double y = std::holds_alternative<double>(p.literal)
                                  ? std::get<double>(p.literal)
                                  : static_cast<long double>(std::get<std::int64_t>(p.literal));
        c = x < y ? -1 : x > y ? 1 : 0;
    }
    switch (p.op) {
        case rdb::CmpOp::eq: return c == 0;
        case rdb::CmpOp::ne: return c != 0;
        case rdb::CmpOp::lt: return c < 0;
        case rdb::CmpOp::le: return c <= 0;
        case rdb::CmpOp::gt: return c > 0;
        case rdb::CmpOp::ge: return c >= 0;
    }
    return std::nullopt;
}

/// Brute-force full scan.
inline std::vector<rdb::Row> oracle_scan(const rdb::Schema& schema, const std::vector<rdb::Row>& rows,
                                         const rdb::Predicate& p) {
    std::vector<rdb::Row> out;
    for (const auto& r : rows)
        if (oracle_eval(schema, r, p) == std::optional<bool>(true)) out.push_back(r);
    return out;
}

}  // namespace avs::testing
