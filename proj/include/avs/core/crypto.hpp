#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "avs/core/digest.hpp"

namespace avs::core {

using SecretKey = std::array<std::uint8_t, 32>;

/// Key derived from a label and seed. Deterministic, for reproducible simulations.
SecretKey derive_key(std::string_view label, std::uint64_t seed);
SecretKey random_key();

/// Authenticated encryption (XChaCha20-Poly1305). The nonce is derived from
/// `associated` so that re-encrypting the same object under the same key is
/// byte-identical; callers must never reuse an associated string for two
/// different plaintexts under one key. Output layout: nonce(24) | ciphertext | tag(16).
Bytes seal(const SecretKey& key, ByteSpan plaintext, std::string_view associated);

/// Throws CodecError when authentication fails.
Bytes open_sealed(const SecretKey& key, ByteSpan sealed, std::string_view associated);

inline constexpr std::size_t kSealOverhead = 24 + 16;

/// key_id -> key, persisted as a JSON object of lowercase hex strings. Lives
/// apart from the data it protects.
class Keyring {
public:
    void add(const std::string& key_id, const SecretKey& key);
    const SecretKey& get(const std::string& key_id) const;
    bool contains(const std::string& key_id) const { return keys_.contains(key_id); }
    std::size_t size() const { return keys_.size(); }

    void save(const std::filesystem::path& file) const;
    static Keyring load(const std::filesystem::path& file);
    void merge(const Keyring& other);

private:
    std::map<std::string, SecretKey> keys_;
};

}  // namespace avs::core
