#pragma once

#include <optional>
#include <random>
#include <vector>

#include "avs/client/row.hpp"

namespace avs::client {

/// Sliding windows of `n` rows, stride 1. Rows are grouped by `group`, groups
/// ordered by value, and rows ordered by `order` within a group (ties keep
/// input order). A window never spans two groups or an order step larger than
/// `max_gap`. Rows with a NULL group or order value are ignored.
/// Returns windows as input indices.
std::vector<std::vector<std::size_t>> ngram_windows(const std::vector<rdb::Value>& group,
                                                    const std::vector<rdb::Value>& order, std::size_t n,
                                                    std::optional<double> max_gap = std::nullopt);

/// ngram_windows over decoded rows, looking columns up by name.
std::vector<Unit> make_ngrams(const std::vector<DecodedRow>& rows, std::size_t n, const std::string& group_column,
                              const std::string& order_column, std::optional<double> max_gap = std::nullopt);

/// Buffered shuffle over mt19937_64(seed). Units are pushed until the buffer
/// holds `capacity`; each pop takes index `rng() % size`, moves the last
/// element into the hole and shrinks the buffer. With capacity >= input size
/// the output is the full permutation produced by repeating that step.
template <class T>
class ShuffleBuffer {
public:
    ShuffleBuffer(std::uint64_t seed, std::size_t capacity) : rng_(seed), capacity_(capacity == 0 ? 1 : capacity) {}

    bool full() const { return items_.size() >= capacity_; }
    bool empty() const { return items_.empty(); }
    void push(T item) { items_.push_back(std::move(item)); }
    T pop() {
        const std::size_t j = static_cast<std::size_t>(rng_() % items_.size());
        T out = std::move(items_[j]);
        if (j + 1 != items_.size()) items_[j] = std::move(items_.back());
        items_.pop_back();
        return out;
    }

private:
    std::mt19937_64 rng_;
    std::size_t capacity_;
    std::vector<T> items_;
};

}  // namespace avs::client
