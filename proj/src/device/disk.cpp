#include "avs/device/disk.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"

namespace avs::device {

namespace fs = std::filesystem;
using core::Bytes;

EncryptedDisk::EncryptedDisk(std::string disk_id, std::uint64_t capacity_bytes, std::string key_id,
                             core::SecretKey key)
    : disk_id_(std::move(disk_id)), key_id_(std::move(key_id)), capacity_(capacity_bytes), key_(key) {
    core::require_identifier("disk_id", disk_id_);
    core::require_identifier("key_id", key_id_);
}

std::uint64_t EncryptedDisk::free_bytes() const {
    const std::uint64_t taken = used_ + census_;
    return taken >= capacity_ ? 0 : capacity_ - taken;
}

const core::SecretKey& EncryptedDisk::key() const {
    if (!key_) throw Error("disk " + disk_id_ + ": key " + key_id_ + " not attached");
    return *key_;
}

void EncryptedDisk::write(const std::string& key_path, core::ByteSpan plaintext) {
    if (sealed_) throw SealedError("disk " + disk_id_ + " is sealed");
    if (items_.contains(key_path)) throw Error("disk " + disk_id_ + ": duplicate key " + key_path);
    if (stored_size(plaintext.size()) > free_bytes()) throw DiskFullError("disk " + disk_id_ + " is full");
    Bytes ct = core::seal(key(), plaintext, key_path);
    used_ += ct.size();
    items_.emplace(key_path, std::move(ct));
}

void EncryptedDisk::reserve_census(std::uint64_t bytes) {
    if (sealed_) throw SealedError("disk " + disk_id_ + " is sealed");
    if (bytes > free_bytes()) throw DiskFullError("disk " + disk_id_ + " is full");
    census_ += bytes;
}

Bytes EncryptedDisk::read(const std::string& key_path) const {
    return core::open_sealed(key(), ciphertext(key_path), key_path);
}

const Bytes& EncryptedDisk::ciphertext(const std::string& key_path) const {
    auto it = items_.find(key_path);
    if (it == items_.end()) throw Error("disk " + disk_id_ + ": no item " + key_path);
    return it->second;
}

std::vector<std::string> EncryptedDisk::keys() const {
    std::vector<std::string> out;
    out.reserve(items_.size());
    for (const auto& [k, _] : items_) out.push_back(k);
    return out;
}

void EncryptedDisk::add_manifest(core::SessionManifest m) {
    if (sealed_) throw SealedError("disk " + disk_id_ + " is sealed");
    manifests_.push_back(std::move(m));
}

void EncryptedDisk::corrupt(const std::string& key_path, std::size_t byte_index) {
    auto it = items_.find(key_path);
    if (it == items_.end()) throw Error("disk " + disk_id_ + ": no item " + key_path);
    it->second.at(byte_index % it->second.size()) ^= 0x01;
}

void EncryptedDisk::save(const fs::path& dir) const {
    nlohmann::json meta = {{"disk_id", disk_id_},   {"key_id", key_id_}, {"capacity_bytes", capacity_},
                           {"used_bytes", used_},   {"census_bytes", census_}, {"sealed", sealed_},
                           {"item_count", items_.size()}};
    nlohmann::json sessions = nlohmann::json::array();
    for (const auto& m : manifests_) sessions.push_back(m.session_id);
    meta["manifests"] = sessions;
    for (const auto& [k, ct] : items_) core::write_file_atomic(dir / "objects" / k, ct);
    for (const auto& m : manifests_)
        core::write_file_atomic(dir / "manifests" / (m.subject_id + "." + m.session_id + ".json"), m.to_json());
    core::write_file_atomic(dir / "disk.json", meta.dump(2));
}

EncryptedDisk EncryptedDisk::load(const fs::path& dir) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(core::read_text(dir / "disk.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("disk.json: " + std::string(e.what()));
    }
    EncryptedDisk d;
    d.disk_id_ = meta.at("disk_id").get<std::string>();
    d.key_id_ = meta.at("key_id").get<std::string>();
    d.capacity_ = meta.at("capacity_bytes").get<std::uint64_t>();
    d.census_ = meta.value("census_bytes", std::uint64_t{0});
    d.sealed_ = meta.at("sealed").get<bool>();
    const fs::path objects = dir / "objects";
    if (fs::exists(objects)) {
        for (const auto& e : fs::recursive_directory_iterator(objects)) {
            if (!e.is_regular_file()) continue;
            const std::string rel = fs::relative(e.path(), objects).generic_string();
            if (rel.find(".tmp-") != std::string::npos) continue;
            Bytes ct = core::read_file(e.path());
            d.used_ += ct.size();
            d.items_.emplace(rel, std::move(ct));
        }
    }
    const fs::path mdir = dir / "manifests";
    if (fs::exists(mdir)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(mdir))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) d.manifests_.push_back(core::SessionManifest::from_json(core::read_text(f)));
    }
    return d;
}

core::Digest EncryptedDisk::content_digest() const {
    core::Hasher h;
    for (const auto& [k, ct] : items_) {
        h.update(k + "\n" + std::to_string(ct.size()) + "\n");
        h.update(core::ByteSpan(ct));
    }
    return h.finish();
}

}  // namespace avs::device
