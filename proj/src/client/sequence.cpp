#include "avs/client/sequence.hpp"

#include <algorithm>
#include <numeric>

#include "avs/core/errors.hpp"

namespace avs::client {

namespace {

double as_number(const rdb::Value& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw QueryError("ngram: order column must be numeric or timestamp");
}

}  // namespace

std::vector<std::vector<std::size_t>> ngram_windows(const std::vector<rdb::Value>& group,
                                                    const std::vector<rdb::Value>& order, std::size_t n,
                                                    std::optional<double> max_gap) {
    if (n == 0) throw ValidationError("ngram.n", "must be at least 1");
    if (group.size() != order.size()) throw Error("ngram: column length mismatch");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < group.size(); ++i)
        if (!rdb::is_null(group[i]) && !rdb::is_null(order[i])) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const int g = rdb::compare_values(group[a], group[b]);
        return g != 0 ? g < 0 : rdb::compare_values(order[a], order[b]) < 0;
    });

    std::vector<std::vector<std::size_t>> windows;
    std::size_t run_start = 0;
    for (std::size_t k = 0; k <= idx.size(); ++k) {
        const bool breaks =
            k == idx.size() || (k > run_start && (rdb::compare_values(group[idx[k]], group[idx[k - 1]]) != 0 ||
                                                  (max_gap && as_number(order[idx[k]]) -
                                                                      as_number(order[idx[k - 1]]) >
                                                                  *max_gap)));
        if (!breaks) continue;
        for (std::size_t s = run_start; s + n <= k; ++s)
            windows.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s),
                                 idx.begin() + static_cast<std::ptrdiff_t>(s + n));
        run_start = k;
    }
    return windows;
}

std::vector<Unit> make_ngrams(const std::vector<DecodedRow>& rows, std::size_t n, const std::string& group_column,
                              const std::string& order_column, std::optional<double> max_gap) {
    std::vector<rdb::Value> g, o;
    for (const auto& r : rows) {
        g.push_back(r.value(group_column));
        o.push_back(r.value(order_column));
    }
    std::vector<Unit> out;
    for (const auto& w : ngram_windows(g, o, n, max_gap)) {
        Unit u;
        for (auto i : w) u.rows.push_back(rows[i]);
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace avs::client
