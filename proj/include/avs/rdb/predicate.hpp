#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "avs/rdb/column_file.hpp"
#include "avs/rdb/value.hpp"

namespace avs::rdb {

enum class CmpOp : std::uint8_t { eq, ne, lt, le, gt, ge };
std::string_view to_string(CmpOp op);

/// Filter expression: comparisons of a column against a literal combined with
/// and/or/not. Comparisons against NULL cells are unknown (three-valued logic);
/// a row qualifies only when the whole expression is true.
struct Predicate {
    enum class Kind : std::uint8_t { always, compare, conj, disj, negate };

    Kind kind = Kind::always;
    std::string column;
    CmpOp op = CmpOp::eq;
    Value literal;
    std::vector<Predicate> children;

    static Predicate all() { return {}; }
    static Predicate cmp(std::string column, CmpOp op, Value literal);
    friend Predicate operator&&(Predicate a, Predicate b);
    friend Predicate operator||(Predicate a, Predicate b);
    friend Predicate operator!(Predicate a);

    /// Canonical text in the filter grammar; parse(to_string()) is equivalent.
    std::string to_string() const;

    friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Grammar:
///   expr := term | expr ('and'|'or') expr | 'not' expr | '(' expr ')'
///   term := column op literal
/// Precedence not > and > or. Literals: integers, decimals, 'single' or
/// "double" quoted strings, true, false. Blank input is the always-true filter.
/// Throws ParseError.
Predicate parse_predicate(std::string_view text);

/// A predicate resolved against a schema. Throws QueryError for unknown
/// columns, bytes/box4 columns and literal type mismatches.
class BoundPredicate {
public:
    BoundPredicate(const Schema& schema, const Predicate& p);

    /// `row` is a full-width row in schema order.
    bool matches(const Row& row) const;
    /// Evaluates against column vectors (unrequested columns may be empty).
    bool matches(const std::vector<std::vector<Value>>& columns, std::size_t i) const;
    /// False only when no row of a chunk with these stats can satisfy the predicate.
    bool may_match(const std::vector<ColumnStats>& stats, std::uint64_t rows) const;
    /// Schema indices referenced by the predicate.
    const std::vector<std::size_t>& columns() const { return referenced_; }

private:
    struct Node {
        Predicate::Kind kind = Predicate::Kind::always;
        std::size_t column = 0;
        CmpOp op = CmpOp::eq;
        Value literal;
        std::vector<Node> children;
    };
    Node bind(const Schema& schema, const Predicate& p);

    std::vector<std::size_t> referenced_;  // must precede root_
    Node root_;
};

}  // namespace avs::rdb
