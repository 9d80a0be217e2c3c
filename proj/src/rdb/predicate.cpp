#include "avs/rdb/predicate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "avs/core/errors.hpp"

namespace avs::rdb {

std::string_view to_string(CmpOp op) {
    switch (op) {
        case CmpOp::eq: return "=";
        case CmpOp::ne: return "!=";
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
    }
    return "?";
}

Predicate Predicate::cmp(std::string column, CmpOp op, Value literal) {
    Predicate p;
    p.kind = Kind::compare;
    p.column = std::move(column);
    p.op = op;
    p.literal = std::move(literal);
    return p;
}

Predicate operator&&(Predicate a, Predicate b) {
    Predicate p;
    p.kind = Predicate::Kind::conj;
    p.children = {std::move(a), std::move(b)};
    return p;
}

Predicate operator||(Predicate a, Predicate b) {
    Predicate p;
    p.kind = Predicate::Kind::disj;
    p.children = {std::move(a), std::move(b)};
    return p;
}

Predicate operator!(Predicate a) {
    Predicate p;
    p.kind = Predicate::Kind::negate;
    p.children = {std::move(a)};
    return p;
}

namespace {

std::string literal_text(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        std::string out = "\"";
        for (char c : *s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out + "\"";
    }
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *d);
        std::string s(buf, end);
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        return s;
    }
    return to_display(v);
}

}  // namespace

std::string Predicate::to_string() const {
    switch (kind) {
        case Kind::always: return "";
        case Kind::compare: return column + " " + std::string(rdb::to_string(op)) + " " + literal_text(literal);
        case Kind::conj: return "(" + children[0].to_string() + " and " + children[1].to_string() + ")";
        case Kind::disj: return "(" + children[0].to_string() + " or " + children[1].to_string() + ")";
        case Kind::negate: return "(not " + children[0].to_string() + ")";
    }
    return "";
}

// ---- parser ---------------------------------------------------------------

namespace {

struct Token {
    enum Type { ident, number, string, op, lparen, rparen, end } type;
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(' || c == ')') {
            out.push_back({c == '(' ? Token::lparen : Token::rparen, std::string(1, c), i});
            ++i;
        } else if (c == '=' || c == '!' || c == '<' || c == '>') {
            std::string op(1, c);
            if (i + 1 < s.size() && s[i + 1] == '=') op += '=';
            else if (c == '<' && i + 1 < s.size() && s[i + 1] == '>') op = "<>";
            if (op == "!") throw ParseError("filter: expected '!=' at offset " + std::to_string(i));
            out.push_back({Token::op, op, i});
            i += op.size();
        } else if (c == '"' || c == '\'') {
            const std::size_t start = i++;
            std::string text;
            for (;;) {
                if (i >= s.size()) throw ParseError("filter: unterminated string at offset " + std::to_string(start));
                if (s[i] == '\\' && i + 1 < s.size()) {
                    text += s[i + 1];
                    i += 2;
                } else if (s[i] == c) {
                    ++i;
                    break;
                } else {
                    text += s[i++];
                }
            }
            out.push_back({Token::string, std::move(text), start});
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
            const std::size_t start = i++;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '.' ||
                                    ((s[i] == '-' || s[i] == '+') && (s[i - 1] == 'e' || s[i - 1] == 'E'))))
                ++i;
            out.push_back({Token::number, std::string(s.substr(start, i - start)), start});
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = i;
            while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
            out.push_back({Token::ident, std::string(s.substr(start, i - start)), start});
        } else {
            throw ParseError("filter: unexpected character '" + std::string(1, c) + "' at offset " +
                             std::to_string(i));
        }
    }
    out.push_back({Token::end, "", s.size()});
    return out;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

class Parser {
public:
    explicit Parser(std::vector<Token> t) : t_(std::move(t)) {}

    Predicate parse() {
        Predicate p = disjunction();
        if (peek().type != Token::end) fail("unexpected '" + peek().text + "'");
        return p;
    }

private:
    const Token& peek() const { return t_[i_]; }
    bool keyword(const char* kw) const { return peek().type == Token::ident && lower(peek().text) == kw; }
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("filter: " + what + " at offset " + std::to_string(peek().pos));
    }

    Predicate disjunction() {
        Predicate p = conjunction();
        while (keyword("or")) {
            ++i_;
            p = std::move(p) || conjunction();
        }
        return p;
    }

    Predicate conjunction() {
        Predicate p = unary();
        while (keyword("and")) {
            ++i_;
            p = std::move(p) && unary();
        }
        return p;
    }

    Predicate unary() {
        if (keyword("not")) {
            ++i_;
            return !unary();
        }
        if (peek().type == Token::lparen) {
            ++i_;
            Predicate p = disjunction();
            if (peek().type != Token::rparen) fail("expected ')'");
            ++i_;
            return p;
        }
        return term();
    }

    Predicate term() {
        if (peek().type != Token::ident || keyword("and") || keyword("or") || keyword("true") || keyword("false"))
            fail("expected column name");
        std::string column = t_[i_++].text;
        if (peek().type != Token::op) fail("expected comparison operator");
        const std::string o = t_[i_++].text;
        CmpOp op = o == "=" || o == "==" ? CmpOp::eq
                   : o == "!=" || o == "<>" ? CmpOp::ne
                   : o == "<"               ? CmpOp::lt
                   : o == "<="              ? CmpOp::le
                   : o == ">"               ? CmpOp::gt
                                            : CmpOp::ge;
        return Predicate::cmp(std::move(column), op, literal());
    }

    Value literal() {
        const Token& t = peek();
        if (t.type == Token::string) {
            ++i_;
            return t.text;
        }
        if (keyword("true") || keyword("false")) {
            ++i_;
            return lower(t.text) == "true";
        }
        if (t.type == Token::number) {
            ++i_;
            const char* b = t.text.data();
            const char* e = b + t.text.size();
            if (*b == '+') ++b;
            if (t.text.find_first_of(".eE") == std::string::npos) {
                std::int64_t v = 0;
                auto [p, ec] = std::from_chars(b, e, v);
                if (ec == std::errc() && p == e) return v;
            } else {
                double v = 0;
                auto [p, ec] = std::from_chars(b, e, v);
                if (ec == std::errc() && p == e && std::isfinite(v)) return v;
            }
            throw ParseError("filter: bad number '" + t.text + "' at offset " + std::to_string(t.pos));
        }
        fail("expected literal");
    }

    std::vector<Token> t_;
    std::size_t i_ = 0;
};

}  // namespace

Predicate parse_predicate(std::string_view text) {
    auto tokens = tokenize(text);
    if (tokens.size() == 1) return Predicate::all();
    return Parser(std::move(tokens)).parse();
}

// ---- binding and evaluation ----------------------------------------------

BoundPredicate::BoundPredicate(const Schema& schema, const Predicate& p) : root_(bind(schema, p)) {
    std::sort(referenced_.begin(), referenced_.end());
    referenced_.erase(std::unique(referenced_.begin(), referenced_.end()), referenced_.end());
}

BoundPredicate::Node BoundPredicate::bind(const Schema& schema, const Predicate& p) {
    Node n;
    n.kind = p.kind;
    if (p.kind == Predicate::Kind::compare) {
        n.column = schema.index_of(p.column);
        n.op = p.op;
        const ColumnType t = schema.at(n.column).type;
        if (t == ColumnType::bytes || t == ColumnType::box4)
            throw QueryError("filter: column '" + p.column + "' of type " + std::string(rdb::to_string(t)) +
                             " is not comparable");
        Value lit = p.literal;
        if (t == ColumnType::float64)
            if (const auto* i = std::get_if<std::int64_t>(&lit)) lit = static_cast<double>(*i);
        const bool ok = (t == ColumnType::float64 && std::holds_alternative<double>(lit)) ||
                        ((t == ColumnType::int64 || t == ColumnType::timestamp) &&
                         (std::holds_alternative<std::int64_t>(lit) || std::holds_alternative<double>(lit))) ||
                        (t == ColumnType::string && std::holds_alternative<std::string>(lit)) ||
                        (t == ColumnType::boolean && std::holds_alternative<bool>(lit));
        if (!ok)
            throw QueryError("filter: literal " + to_display(p.literal) + " does not match column '" + p.column +
                             "' of type " + std::string(rdb::to_string(t)));
        n.literal = std::move(lit);
        referenced_.push_back(n.column);
    }
    for (const auto& c : p.children) n.children.push_back(bind(schema, c));
    return n;
}

namespace {

// Three-valued truth. Outcome sets are bitmasks over {T, F, U}.
enum Truth : std::uint8_t { T = 1, F = 2, U = 4 };

bool holds(CmpOp op, int c) {
    switch (op) {
        case CmpOp::eq: return c == 0;
        case CmpOp::ne: return c != 0;
        case CmpOp::lt: return c < 0;
        case CmpOp::le: return c <= 0;
        case CmpOp::gt: return c > 0;
        case CmpOp::ge: return c >= 0;
    }
    return false;
}

Truth kleene_and(Truth a, Truth b) {
    if (a == F || b == F) return F;
    if (a == U || b == U) return U;
    return T;
}

Truth kleene_or(Truth a, Truth b) {
    if (a == T || b == T) return T;
    if (a == U || b == U) return U;
    return F;
}

Truth kleene_not(Truth a) { return a == T ? F : a == F ? T : U; }

template <class Cell>
Truth eval(const auto& n, const Cell& cell) {
    using K = Predicate::Kind;
    switch (n.kind) {
        case K::always: return T;
        case K::compare: {
            const Value& v = cell(n.column);
            if (is_null(v)) return U;
            return holds(n.op, compare_values(v, n.literal)) ? T : F;
        }
        case K::conj: return kleene_and(eval(n.children[0], cell), eval(n.children[1], cell));
        case K::disj: return kleene_or(eval(n.children[0], cell), eval(n.children[1], cell));
        case K::negate: return kleene_not(eval(n.children[0], cell));
    }
    return U;
}

std::uint8_t combine(std::uint8_t a, std::uint8_t b, Truth (*f)(Truth, Truth)) {
    std::uint8_t out = 0;
    for (Truth x : {T, F, U})
        for (Truth y : {T, F, U})
            if ((a & x) && (b & y)) out |= f(x, y);
    return out;
}

std::uint8_t possible(const auto& n, const std::vector<ColumnStats>& stats, std::uint64_t rows) {
    using K = Predicate::Kind;
    switch (n.kind) {
        case K::always: return T;
        case K::compare: {
            const ColumnStats& s = stats.at(n.column);
            std::uint8_t out = s.null_count > 0 ? U : 0;
            if (s.null_count >= rows) return out;
            if (!s.min || !s.max) return out | T | F;
            const int lo = compare_values(*s.min, n.literal);
            const int hi = compare_values(*s.max, n.literal);
            bool t = true, f = true;
            switch (n.op) {
                case CmpOp::eq: t = lo <= 0 && hi >= 0; f = !(lo == 0 && hi == 0); break;
                case CmpOp::ne: t = !(lo == 0 && hi == 0); f = lo <= 0 && hi >= 0; break;
                case CmpOp::lt: t = lo < 0; f = hi >= 0; break;
                case CmpOp::le: t = lo <= 0; f = hi > 0; break;
                case CmpOp::gt: t = hi > 0; f = lo <= 0; break;
                case CmpOp::ge: t = hi >= 0; f = lo < 0; break;
            }
            return out | (t ? T : 0) | (f ? F : 0);
        }
        case K::conj:
            return combine(possible(n.children[0], stats, rows), possible(n.children[1], stats, rows), kleene_and);
        case K::disj:
            return combine(possible(n.children[0], stats, rows), possible(n.children[1], stats, rows), kleene_or);
        case K::negate: {
            const std::uint8_t c = possible(n.children[0], stats, rows);
            return static_cast<std::uint8_t>((c & T ? F : 0) | (c & F ? T : 0) | (c & U));
        }
    }
    return T | F | U;
}

}  // namespace

bool BoundPredicate::matches(const Row& row) const {
    return eval(root_, [&](std::size_t c) -> const Value& { return row.at(c); }) == T;
}

bool BoundPredicate::matches(const std::vector<std::vector<Value>>& columns, std::size_t i) const {
    return eval(root_, [&](std::size_t c) -> const Value& { return columns.at(c).at(i); }) == T;
}

bool BoundPredicate::may_match(const std::vector<ColumnStats>& stats, std::uint64_t rows) const {
    if (rows == 0) return false;
    return (possible(root_, stats, rows) & T) != 0;
}

}  // namespace avs::rdb
