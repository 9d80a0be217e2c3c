#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "avs/core/digest.hpp"
#include "avs/core/types.hpp"

namespace avs::transfer {

/// Prefix under which corrupt items are parked for review.
inline constexpr std::string_view kQuarantinePrefix = "quarantine/";

enum class PutOutcome { created, identical, replaced };

/// Filesystem-backed object store. Each object is a file at root/<path>.
/// Raw-zone objects are write-once. Safe for concurrent use; operations on one
/// path are linearizable.
class ObjectStore {
public:
    explicit ObjectStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Throws WriteOnceViolation when a raw key already holds different bytes.
    PutOutcome put(const std::string& path, core::ByteSpan data);
    core::Bytes get(const std::string& path) const;
    std::optional<core::Bytes> try_get(const std::string& path) const;
    bool exists(const std::string& path) const;
    std::uint64_t size_of(const std::string& path) const;
    /// Administrative delete. Bypasses write-once.
    void remove(const std::string& path);
    /// Sorted object paths under `prefix` (all objects when empty).
    std::vector<std::string> list(const std::string& prefix = "") const;
    /// Keys of zone `z`, sorted, excluding quarantine.
    std::vector<core::ObjectKey> list_zone(core::Zone z) const;

    /// Called after a put creates a new object.
    void set_on_created(std::function<void(const std::string&)> fn);

    static bool is_raw_path(const std::string& path);

private:
    std::filesystem::path file_for(const std::string& path) const;
    std::mutex& lock_for(const std::string& path) const;

    std::filesystem::path root_;
    mutable std::array<std::mutex, 64> stripes_;
    std::mutex hook_mu_;
    std::function<void(const std::string&)> on_created_;
};

/// Append-only archive tier. Retrieval is charged a fixed virtual delay.
class ColdStore {
public:
    explicit ColdStore(std::filesystem::path root, double retrieval_delay_s = 4 * 3600.0);

    /// Returns true when a new copy was written. Existing different bytes
    /// throw WriteOnceViolation.
    bool put(const std::string& path, core::ByteSpan data);
    bool contains(const std::string& path) const;
    /// Returns the bytes and adds the retrieval delay to `elapsed_s`.
    core::Bytes retrieve(const std::string& path, double& elapsed_s) const;
    std::vector<std::string> list() const;
    double retrieval_delay_s() const { return delay_; }

private:
    std::filesystem::path root_;
    double delay_;
    mutable std::mutex mu_;
};

/// Copies every raw object without a cold copy to its archive-zone key.
/// Returns the number copied.
std::size_t archive(const ObjectStore& store, ColdStore& cold);

}  // namespace avs::transfer
