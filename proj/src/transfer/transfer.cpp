#include <algorithm>
#include "avs/transfer/transfer.hpp"

#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"

namespace avs::transfer {

namespace fs = std::filesystem;
using core::Bytes;
using nlohmann::json;

std::string_view to_string(ItemStatus s) {
    switch (s) {
        case ItemStatus::stored: return "stored";
        case ItemStatus::quarantined: return "quarantined";
        case ItemStatus::skipped: return "skipped";
    }
    return "?";
}

std::string_view to_string(CourierState s) {
    switch (s) {
        case CourierState::OnSite: return "OnSite";
        case CourierState::InTransit: return "InTransit";
        case CourierState::Arrived: return "Arrived";
        case CourierState::Lost: return "Lost";
    }
    return "?";
}

std::string TransferReport::to_json() const {
    json items_j = json::array();
    for (const auto& it : items) {
        json j = {{"key", it.key}, {"status", to_string(it.status)}, {"bytes", it.bytes}};
        if (!it.reason.empty()) j["reason"] = it.reason;
        items_j.push_back(std::move(j));
    }
    return json{{"source", source},       {"stored", stored},         {"quarantined", quarantined},
                {"skipped", skipped},     {"transfers", transfers},   {"bytes_sent", bytes_sent},
                {"elapsed_s", elapsed_s}, {"complete", complete},     {"items", items_j}}
        .dump(2);
}

std::string VerificationReport::to_json() const {
    return json{{"checked", checked}, {"missing", missing}, {"extra", extra}, {"mismatched", mismatched},
                {"ok", ok()}}
        .dump(2);
}

TransferLog::TransferLog(fs::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    std::string status, key;
    while (in >> status >> key) {
        ++lines_;
        done_[key] = status == "quarantined" ? ItemStatus::quarantined : ItemStatus::stored;
    }
}

void TransferLog::record(const std::string& key, ItemStatus status) {
    fs::create_directories(file_.parent_path());
    std::FILE* f = std::fopen(file_.c_str(), "ab");
    if (!f) throw IoError("cannot open transfer log " + file_.string());
    const std::string line = std::string(to_string(status)) + " " + key + "\n";
    const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() && std::fflush(f) == 0;
    std::fclose(f);
    if (!ok) throw IoError("cannot append to transfer log " + file_.string());
    done_[key] = status;
    ++lines_;
}

std::vector<std::string> TransferLog::quarantined() const {
    std::vector<std::string> out;
    for (const auto& [k, st] : done_)
        if (st == ItemStatus::quarantined) out.push_back(k);
    return out;
}

fs::path default_log_path(const ObjectStore& store, const std::string& disk_id) {
    return store.root() / ".transfer" / (disk_id + ".log");
}

std::string manifest_path(const core::SessionManifest& m) {
    return "manifests/" + m.study_id + "/" + m.site_id + "/" + m.subject_id + "/" + m.session_id + ".json";
}

namespace {

/// Stores verified bytes or quarantines them. Returns the resulting status.
ItemStatus deliver(const std::string& key, const Bytes& data, const core::Digest& expected, std::string reason,
                   ObjectStore& store, TransferReport& report) {
    ItemReport item{key, ItemStatus::stored, data.size(), {}};
    if (reason.empty() && core::digest(data) != expected) reason = "checksum mismatch";
    if (reason.empty()) {
        try {
            store.put(key, data);
        } catch (const WriteOnceViolation&) {
            reason = "conflicts with existing raw object";
        }
    }
    if (!reason.empty()) {
        store.put(std::string(kQuarantinePrefix) + key, data);
        item.status = ItemStatus::quarantined;
        item.reason = std::move(reason);
        ++report.quarantined;
    } else {
        ++report.stored;
    }
    report.items.push_back(std::move(item));
    return report.items.back().status;
}

void charge(TransferReport& r, std::size_t bytes, double bandwidth) {
    ++r.transfers;
    r.bytes_sent += bytes;
    if (bandwidth > 0) r.elapsed_s += static_cast<double>(bytes) / bandwidth;
}

}  // namespace

TransferReport upload_network(const device::EncryptedDisk& disk, ObjectStore& store, double bandwidth,
                              const FailurePlan& plan, std::optional<fs::path> log_file) {
    if (!disk.sealed()) throw ValidationError("disk", "must be sealed before upload");
    if (disk.manifests().empty()) throw ValidationError("disk", "has no manifest");
    if (!(bandwidth > 0)) throw ValidationError("bandwidth", "must be positive");
    TransferLog log(log_file.value_or(default_log_path(store, disk.disk_id())));
    TransferReport report;
    report.source = "disk:" + disk.disk_id();
    for (const auto& m : disk.manifests()) {
        store.put(manifest_path(m), core::as_bytes(m.to_json()));
        for (const auto& e : m.item_checksums) {
            if (log.done(e.key)) {
                ++report.skipped;
                report.items.push_back({e.key, ItemStatus::skipped, e.bytes, {}});
                continue;
            }
            if (plan.interrupt_after && report.transfers >= *plan.interrupt_after) {
                report.complete = false;
                return report;
            }
            Bytes data;
            std::string reason;
            try {
                data = disk.read(e.key);
            } catch (const CodecError&) {
                data = disk.ciphertext(e.key);
                reason = "decryption failed";
            }
            if (plan.corrupt_in_flight.contains(e.key) && !data.empty()) data[data.size() / 2] ^= 0x01;
            charge(report, data.size(), bandwidth);
            log.record(e.key, deliver(e.key, data, e.checksum, std::move(reason), store, report));
        }
    }
    return report;
}

TransferReport retry_quarantined(const device::EncryptedDisk& disk, ObjectStore& store, double bandwidth,
                                 std::optional<fs::path> log_file) {
    if (!(bandwidth > 0)) throw ValidationError("bandwidth", "must be positive");
    TransferLog log(log_file.value_or(default_log_path(store, disk.disk_id())));
    TransferReport report;
    report.source = "retry:" + disk.disk_id();
    const auto pending = log.quarantined();
    for (const auto& m : disk.manifests()) {
        for (const auto& e : m.item_checksums) {
            if (!std::binary_search(pending.begin(), pending.end(), e.key) || store.exists(e.key)) continue;
            Bytes data;
            std::string reason;
            try {
                data = disk.read(e.key);
            } catch (const CodecError&) {
                data = disk.ciphertext(e.key);
                reason = "decryption failed";
            }
            charge(report, data.size(), bandwidth);
            log.record(e.key, deliver(e.key, data, e.checksum, std::move(reason), store, report));
        }
    }
    return report;
}

CourierDevice::CourierDevice(std::string id, std::uint64_t capacity_bytes) : id_(std::move(id)), capacity_(capacity_bytes) {
    core::require_identifier("courier_id", id_);
}

void load_courier(const device::EncryptedDisk& disk, CourierDevice& courier) {
    if (courier.state_ != CourierState::OnSite)
        throw StateError("courier " + courier.id_ + " is " + std::string(to_string(courier.state_)));
    if (!disk.sealed()) throw ValidationError("disk", "must be sealed before loading");
    const std::uint64_t need = disk.used_bytes() + disk.census_bytes();
    if (!courier.fits(need))
        throw CapacityError("courier " + courier.id_ + " cannot hold " + std::to_string(need) + " more bytes");
    for (const auto& m : disk.manifests()) {
        for (const auto& e : m.item_checksums)
            courier.entries_[e.key] = {disk.key_id(), disk.ciphertext(e.key), e.checksum};
        courier.manifests_.push_back(m);
    }
    courier.loaded_ += need;
}

void ship_courier(CourierDevice& courier, CourierState outcome) {
    if (courier.state_ != CourierState::OnSite)
        throw StateError("courier " + courier.id_ + " already shipped");
    if (outcome != CourierState::Arrived && outcome != CourierState::Lost)
        throw ValidationError("outcome", "must be Arrived or Lost");
    courier.state_ = CourierState::InTransit;
    courier.state_ = outcome;
}

IngestResult ingest_couriers(const std::vector<const CourierDevice*>& couriers, ObjectStore& store,
                             const core::Keyring& keyring, double bandwidth) {
    IngestResult r;
    std::map<std::string, std::vector<const CourierDevice*>> holders;
    for (const CourierDevice* c : couriers) {
        if (c->state() != CourierState::Arrived && c->state() != CourierState::Lost)
            throw StateError("courier " + c->id() + " has not completed shipping");
        r.report.source += (r.report.source.empty() ? "courier:" : ",") + c->id();
        if (c->state() == CourierState::Lost) r.loss.couriers.push_back(c->id());
        for (const auto& [key, _] : c->entries()) holders[key].push_back(c);
        if (c->state() == CourierState::Arrived)
            for (const auto& m : c->manifests()) store.put(manifest_path(m), core::as_bytes(m.to_json()));
    }
    for (const auto& [key, hs] : holders) {
        const CourierDevice* src = nullptr;
        for (const CourierDevice* c : hs)
            if (c->state() == CourierState::Arrived) {
                src = c;
                break;
            }
        if (!src) {
            r.loss.lost_keys.push_back(key);
            continue;
        }
        const auto& e = src->entries().at(key);
        Bytes data;
        std::string reason;
        try {
            data = core::open_sealed(keyring.get(e.key_id), e.ciphertext, key);
        } catch (const CodecError&) {
            data = e.ciphertext;
            reason = "decryption failed";
        }
        charge(r.report, data.size(), bandwidth);
        deliver(key, data, e.checksum, std::move(reason), store, r.report);
    }
    return r;
}

IngestResult ingest_courier(const CourierDevice& courier, ObjectStore& store, const core::Keyring& keyring) {
    return ingest_couriers({&courier}, store, keyring);
}

VerificationReport verify(const core::SessionManifest& manifest, const ObjectStore& store) {
    VerificationReport r;
    std::set<std::string> expected;
    for (const auto& e : manifest.item_checksums) {
        expected.insert(e.key);
        ++r.checked;
        const auto data = store.try_get(e.key);
        if (!data) {
            r.missing.push_back(e.key);
        } else if (core::digest(*data) != e.checksum) {
            r.mismatched.push_back(e.key);
        }
    }
    const std::string prefix = manifest.study_id + "/" + manifest.site_id + "/" + manifest.subject_id + "/" +
                               manifest.session_id;
    for (const auto& p : store.list(prefix))
        if (ObjectStore::is_raw_path(p) && !expected.contains(p)) r.extra.push_back(p);
    return r;
}

}  // namespace avs::transfer
