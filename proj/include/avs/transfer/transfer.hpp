#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avs/core/crypto.hpp"
#include "avs/core/manifest.hpp"
#include "avs/device/disk.hpp"
#include "avs/transfer/object_store.hpp"

namespace avs::transfer {

enum class ItemStatus { stored, quarantined, skipped };
std::string_view to_string(ItemStatus s);

struct ItemReport {
    std::string key;
    ItemStatus status = ItemStatus::stored;
    std::uint64_t bytes = 0;
    std::string reason;
};

struct TransferReport {
    std::string source;
    std::vector<ItemReport> items;
    std::uint64_t stored = 0;
    std::uint64_t quarantined = 0;
    std::uint64_t skipped = 0;       // already verified by an earlier run
    std::uint64_t transfers = 0;     // items sent in this run
    std::uint64_t bytes_sent = 0;
    double elapsed_s = 0;            // virtual
    bool complete = true;

    std::string to_json() const;
};

/// Injected faults for one transfer run.
struct FailurePlan {
    /// Stop after this many transfers; the report is marked incomplete.
    std::optional<std::uint64_t> interrupt_after;
    /// Keys whose bytes get one bit flipped in flight.
    std::set<std::string> corrupt_in_flight;
};

/// Append-only record of verified keys for one disk. Survives interruption.
class TransferLog {
public:
    explicit TransferLog(std::filesystem::path file);
    bool done(const std::string& key) const { return done_.contains(key); }
    void record(const std::string& key, ItemStatus status);
    std::size_t size() const { return done_.size(); }
    std::size_t lines() const { return lines_; }
    /// Keys whose latest record is quarantined.
    std::vector<std::string> quarantined() const;

private:
    std::filesystem::path file_;
    std::map<std::string, ItemStatus> done_;
    std::size_t lines_ = 0;
};

/// Default log location: <store root>/.transfer/<disk id>.log
std::filesystem::path default_log_path(const ObjectStore& store, const std::string& disk_id);

/// Store path of a session manifest.
std::string manifest_path(const core::SessionManifest& m);

/// Decrypts and uploads every manifest item of a sealed disk. Items already
/// in the log are skipped. Checksum mismatches go under the quarantine prefix.
TransferReport upload_network(const device::EncryptedDisk& disk, ObjectStore& store, double bandwidth_bytes_per_s,
                              const FailurePlan& plan = {}, std::optional<std::filesystem::path> log_file = {});

/// Operator-triggered second attempt for keys the log holds as quarantined
/// and the raw zone lacks. Each retried key gets a fresh log record.
TransferReport retry_quarantined(const device::EncryptedDisk& disk, ObjectStore& store, double bandwidth_bytes_per_s,
                                 std::optional<std::filesystem::path> log_file = {});

enum class CourierState { OnSite, InTransit, Arrived, Lost };
std::string_view to_string(CourierState s);

/// Bulk-transfer appliance. Holds ciphertexts and manifests of loaded disks.
class CourierDevice {
public:
    explicit CourierDevice(std::string id, std::uint64_t capacity_bytes = 100'000'000'000'000ULL);

    const std::string& id() const { return id_; }
    CourierState state() const { return state_; }
    std::uint64_t capacity_bytes() const { return capacity_; }
    std::uint64_t loaded_bytes() const { return loaded_; }
    bool fits(std::uint64_t bytes) const { return bytes <= capacity_ - loaded_; }

    struct Entry {
        std::string key_id;
        core::Bytes ciphertext;
        core::Digest checksum;
    };
    const std::map<std::string, Entry>& entries() const { return entries_; }
    const std::vector<core::SessionManifest>& manifests() const { return manifests_; }

private:
    friend void load_courier(const device::EncryptedDisk&, CourierDevice&);
    friend void ship_courier(CourierDevice&, CourierState);

    std::string id_;
    std::uint64_t capacity_;
    std::uint64_t loaded_ = 0;
    CourierState state_ = CourierState::OnSite;
    std::map<std::string, Entry> entries_;
    std::vector<core::SessionManifest> manifests_;
};

/// Copies a sealed disk onto an OnSite courier. Throws CapacityError when the
/// disk (stored plus census bytes) does not fit; nothing is loaded then.
void load_courier(const device::EncryptedDisk& disk, CourierDevice& courier);
/// OnSite -> InTransit -> `outcome` (Arrived or Lost).
void ship_courier(CourierDevice& courier, CourierState outcome);

struct DataLossEvent {
    std::vector<std::string> lost_keys;
    std::vector<std::string> couriers;
    bool empty() const { return lost_keys.empty(); }
};

struct IngestResult {
    TransferReport report;
    DataLossEvent loss;
};

/// Ingests every key held by any of `couriers` from an Arrived holder. Keys
/// held only by Lost couriers are reported as lost.
IngestResult ingest_couriers(const std::vector<const CourierDevice*>& couriers, ObjectStore& store,
                             const core::Keyring& keyring, double bandwidth_bytes_per_s = 0);
IngestResult ingest_courier(const CourierDevice& courier, ObjectStore& store, const core::Keyring& keyring);

struct VerificationReport {
    std::vector<std::string> missing;
    std::vector<std::string> extra;
    std::vector<std::string> mismatched;
    std::uint64_t checked = 0;
    bool ok() const { return missing.empty() && extra.empty() && mismatched.empty(); }
    std::string to_json() const;
};

/// Compares a manifest with the raw zone of its session.
VerificationReport verify(const core::SessionManifest& manifest, const ObjectStore& store);

}  // namespace avs::transfer
