#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace avs::pipeline {

/// One delivery of a queued message.
struct QueueMessage {
    std::uint64_t id = 0;
    std::string dedup_key;
    std::string body;
    std::string receipt;
    double visible_at = 0;  // virtual seconds
    std::uint32_t delivery_count = 0;
};

struct DeadLetter {
    std::string dedup_key;
    std::string body;
    std::uint32_t delivery_count = 0;
    std::string reason;
};

/// At-least-once queue on a virtual clock. A received message stays invisible
/// for `visibility_timeout_s`; unless removed it then becomes deliverable
/// again. A message already delivered `max_deliveries` times moves to the
/// dead-letter list instead of being delivered again. Sends are idempotent by
/// dedup key for the queue's lifetime. Thread-safe.
class DurableQueue {
public:
    explicit DurableQueue(std::string name, double visibility_timeout_s = 30.0, std::uint32_t max_deliveries = 5);

    const std::string& name() const { return name_; }
    double visibility_timeout_s() const { return timeout_; }
    std::uint32_t max_deliveries() const { return max_deliveries_; }

    /// Returns false when `dedup_key` was sent before.
    bool send(const std::string& dedup_key, const std::string& body, double now = 0);
    std::optional<QueueMessage> receive(double now);
    /// Deletes an in-flight message. Returns false for a stale receipt.
    bool remove(const std::string& receipt);
    /// Records a processing failure; the message stays invisible until its
    /// timeout and carries `reason` if it is later dead-lettered.
    bool fail(const std::string& receipt, const std::string& reason);

    /// Messages not yet deleted or dead-lettered.
    std::size_t depth() const;
    std::size_t visible(double now) const;
    bool empty() const { return depth() == 0; }
    std::optional<double> next_visible_at() const;
    std::uint64_t redeliveries() const;
    std::vector<DeadLetter> dead_letters() const;
    /// Moves dead letters back into the queue with fresh delivery counts.
    std::size_t replay_dead_letters(double now);

private:
    struct Entry {
        std::string dedup_key;
        std::string body;
        double visible_at = 0;
        std::uint32_t delivery_count = 0;
        std::string last_error;
    };
    using Slot = std::pair<double, std::uint64_t>;

    static std::string receipt_of(std::uint64_t id, std::uint32_t count);
    std::optional<std::uint64_t> in_flight(const std::string& receipt) const;

    std::string name_;
    double timeout_;
    std::uint32_t max_deliveries_;
    mutable std::mutex mu_;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, Entry> live_;
    std::priority_queue<Slot, std::vector<Slot>, std::greater<>> schedule_;
    std::set<std::string> seen_;
    std::vector<DeadLetter> dead_;
    std::uint64_t redeliveries_ = 0;
};

}  // namespace avs::pipeline
