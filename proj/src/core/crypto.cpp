#include "avs/core/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"

namespace avs::core {

static_assert(crypto_aead_xchacha20poly1305_ietf_KEYBYTES == 32);
static_assert(crypto_aead_xchacha20poly1305_ietf_NPUBBYTES == 24);
static_assert(crypto_aead_xchacha20poly1305_ietf_ABYTES == 16);

SecretKey derive_key(std::string_view label, std::uint64_t seed) {
    Hasher h;
    h.update("avs-key-v1/").update(label).update("/").update(std::to_string(seed));
    return h.finish().bytes;
}

SecretKey random_key() {
    (void)digest(std::string_view{});  // ensures libsodium is initialised
    SecretKey k;
    crypto_aead_xchacha20poly1305_ietf_keygen(k.data());
    return k;
}

Bytes seal(const SecretKey& key, ByteSpan plaintext, std::string_view associated) {
    Hasher nonce_hash;
    nonce_hash.update(ByteSpan(key)).update("/nonce/").update(associated);
    const Digest nd = nonce_hash.finish();

    Bytes out(24 + plaintext.size() + 16);
    std::memcpy(out.data(), nd.bytes.data(), 24);
    unsigned long long clen = 0;
    crypto_aead_xchacha20poly1305_ietf_encrypt(
        out.data() + 24, &clen, plaintext.data(), plaintext.size(),
        reinterpret_cast<const unsigned char*>(associated.data()), associated.size(), nullptr, out.data(), key.data());
    out.resize(24 + clen);
    return out;
}

Bytes open_sealed(const SecretKey& key, ByteSpan sealed, std::string_view associated) {
    if (sealed.size() < kSealOverhead) throw CodecError("sealed blob too short");
    Bytes out(sealed.size() - kSealOverhead);
    unsigned long long mlen = 0;
    const int rc = crypto_aead_xchacha20poly1305_ietf_decrypt(
        out.data(), &mlen, nullptr, sealed.data() + 24, sealed.size() - 24,
        reinterpret_cast<const unsigned char*>(associated.data()), associated.size(), sealed.data(), key.data());
    if (rc != 0) throw CodecError("authentication failed for '" + std::string(associated) + "'");
    out.resize(mlen);
    return out;
}

void Keyring::add(const std::string& key_id, const SecretKey& key) { keys_[key_id] = key; }

const SecretKey& Keyring::get(const std::string& key_id) const {
    const auto it = keys_.find(key_id);
    if (it == keys_.end()) throw Error("keyring has no key '" + key_id + "'");
    return it->second;
}

void Keyring::merge(const Keyring& other) {
    for (const auto& [id, key] : other.keys_) keys_[id] = key;
}

void Keyring::save(const std::filesystem::path& file) const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [id, key] : keys_) j[id] = to_hex(key);
    write_file_atomic(file, j.dump(2) + "\n");
}

Keyring Keyring::load(const std::filesystem::path& file) {
    const auto j = nlohmann::json::parse(read_text(file));
    Keyring ring;
    for (const auto& [id, hex] : j.items()) {
        const Bytes raw = from_hex(hex.get<std::string>());
        if (raw.size() != 32) throw ParseError("keyring entry '" + id + "' is not a 256-bit key");
        SecretKey k;
        std::memcpy(k.data(), raw.data(), 32);
        ring.add(id, k);
    }
    return ring;
}

}  // namespace avs::core
