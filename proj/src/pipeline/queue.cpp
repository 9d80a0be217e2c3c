#include "avs/pipeline/queue.hpp"

#include <charconv>

#include "avs/core/errors.hpp"

namespace avs::pipeline {

DurableQueue::DurableQueue(std::string name, double visibility_timeout_s, std::uint32_t max_deliveries)
    : name_(std::move(name)), timeout_(visibility_timeout_s), max_deliveries_(max_deliveries) {
    if (!(visibility_timeout_s > 0)) throw ValidationError("visibility_timeout", "must be positive");
    if (max_deliveries == 0) throw ValidationError("max_deliveries", "must be positive");
}

std::string DurableQueue::receipt_of(std::uint64_t id, std::uint32_t count) {
    return std::to_string(id) + ":" + std::to_string(count);
}

bool DurableQueue::send(const std::string& dedup_key, const std::string& body, double now) {
    std::lock_guard lk(mu_);
    if (!seen_.insert(dedup_key).second) return false;
    const std::uint64_t id = next_id_++;
    live_.emplace(id, Entry{dedup_key, body, now, 0, {}});
    schedule_.push({now, id});
    return true;
}

std::optional<QueueMessage> DurableQueue::receive(double now) {
    std::lock_guard lk(mu_);
    while (!schedule_.empty() && schedule_.top().first <= now) {
        const auto [at, id] = schedule_.top();
        schedule_.pop();
        auto it = live_.find(id);
        if (it == live_.end() || it->second.visible_at != at) continue;
        Entry& e = it->second;
        if (e.delivery_count >= max_deliveries_) {
            dead_.push_back({e.dedup_key, e.body, e.delivery_count,
                             e.last_error.empty() ? "exceeded max deliveries" : e.last_error});
            live_.erase(it);
            continue;
        }
        if (e.delivery_count > 0) ++redeliveries_;
        ++e.delivery_count;
        e.visible_at = now + timeout_;
        schedule_.push({e.visible_at, id});
        return QueueMessage{id, e.dedup_key, e.body, receipt_of(id, e.delivery_count), e.visible_at, e.delivery_count};
    }
    return std::nullopt;
}

std::optional<std::uint64_t> DurableQueue::in_flight(const std::string& receipt) const {
    const auto colon = receipt.find(':');
    if (colon == std::string::npos) return std::nullopt;
    std::uint64_t id = 0;
    std::uint32_t count = 0;
    std::from_chars(receipt.data(), receipt.data() + colon, id);
    std::from_chars(receipt.data() + colon + 1, receipt.data() + receipt.size(), count);
    auto it = live_.find(id);
    if (it == live_.end() || it->second.delivery_count != count) return std::nullopt;
    return id;
}

bool DurableQueue::remove(const std::string& receipt) {
    std::lock_guard lk(mu_);
    const auto id = in_flight(receipt);
    if (!id) return false;
    live_.erase(*id);
    return true;
}

bool DurableQueue::fail(const std::string& receipt, const std::string& reason) {
    std::lock_guard lk(mu_);
    const auto id = in_flight(receipt);
    if (!id) return false;
    live_.at(*id).last_error = reason;
    return true;
}

std::size_t DurableQueue::depth() const {
    std::lock_guard lk(mu_);
    return live_.size();
}

std::size_t DurableQueue::visible(double now) const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& [_, e] : live_)
        if (e.visible_at <= now) ++n;
    return n;
}

std::optional<double> DurableQueue::next_visible_at() const {
    std::lock_guard lk(mu_);
    std::optional<double> best;
    for (const auto& [_, e] : live_)
        if (!best || e.visible_at < *best) best = e.visible_at;
    return best;
}

std::uint64_t DurableQueue::redeliveries() const {
    std::lock_guard lk(mu_);
    return redeliveries_;
}

std::vector<DeadLetter> DurableQueue::dead_letters() const {
    std::lock_guard lk(mu_);
    return dead_;
}

std::size_t DurableQueue::replay_dead_letters(double now) {
    std::lock_guard lk(mu_);
    const std::size_t n = dead_.size();
    for (auto& d : dead_) {
        const std::uint64_t id = next_id_++;
        live_.emplace(id, Entry{d.dedup_key, d.body, now, 0, {}});
        schedule_.push({now, id});
    }
    dead_.clear();
    return n;
}

}  // namespace avs::pipeline
