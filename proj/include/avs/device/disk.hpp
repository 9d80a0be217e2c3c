#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "avs/core/crypto.hpp"
#include "avs/core/manifest.hpp"

namespace avs::device {

/// Removable disk. Every payload is stored sealed under the disk key with the
/// object key path as associated data. Once sealed the disk is read-only.
class EncryptedDisk {
public:
    EncryptedDisk() = default;
    EncryptedDisk(std::string disk_id, std::uint64_t capacity_bytes, std::string key_id, core::SecretKey key);

    const std::string& disk_id() const { return disk_id_; }
    const std::string& key_id() const { return key_id_; }
    std::uint64_t capacity_bytes() const { return capacity_; }
    /// Sum of stored ciphertext sizes.
    std::uint64_t used_bytes() const { return used_; }
    /// Bytes reserved by census-mode sessions, which account without storing.
    std::uint64_t census_bytes() const { return census_; }
    std::uint64_t free_bytes() const;
    bool sealed() const { return sealed_; }
    bool has_key() const { return key_.has_value(); }

    static std::uint64_t stored_size(std::uint64_t plaintext_bytes) { return plaintext_bytes + core::kSealOverhead; }

    /// Throws SealedError, DiskFullError, or Error for a duplicate key.
    void write(const std::string& key_path, core::ByteSpan plaintext);
    void reserve_census(std::uint64_t bytes);
    /// Decrypts one item. Throws CodecError when authentication fails.
    core::Bytes read(const std::string& key_path) const;
    const core::Bytes& ciphertext(const std::string& key_path) const;
    bool contains(const std::string& key_path) const { return items_.contains(key_path); }
    std::vector<std::string> keys() const;
    std::size_t item_count() const { return items_.size(); }

    void add_manifest(core::SessionManifest m);
    const std::vector<core::SessionManifest>& manifests() const { return manifests_; }

    void seal() { sealed_ = true; }
    void attach_key(const core::Keyring& ring) { key_ = ring.get(key_id_); }

    /// Fault injection: flips one bit of a stored ciphertext.
    void corrupt(const std::string& key_path, std::size_t byte_index = 0);

    /// Layout: disk.json, manifests/<session>.json, objects/<key path>. Key
    /// material is never written.
    void save(const std::filesystem::path& dir) const;
    static EncryptedDisk load(const std::filesystem::path& dir);

    /// Digest over every key and ciphertext in key order.
    core::Digest content_digest() const;

private:
    const core::SecretKey& key() const;

    std::string disk_id_;
    std::string key_id_;
    std::uint64_t capacity_ = 0;
    std::uint64_t used_ = 0;
    std::uint64_t census_ = 0;
    bool sealed_ = false;
    std::optional<core::SecretKey> key_;
    std::map<std::string, core::Bytes> items_;
    std::vector<core::SessionManifest> manifests_;
};

}  // namespace avs::device
