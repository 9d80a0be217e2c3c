#include "avs/core/digest.hpp"

#include <sodium.h>

#include <cstring>

#include "avs/core/errors.hpp"

namespace avs::core {
namespace {

struct SodiumInit {
    SodiumInit() {
        if (sodium_init() < 0) throw Error("libsodium initialisation failed");
    }
};

void ensure_sodium() { static const SodiumInit init; }

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

static_assert(sizeof(crypto_hash_sha256_state) <= 256);

std::string to_hex(ByteSpan data) {
    std::string out;
    out.resize(data.size() * 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        out[2 * i] = kHexDigits[data[i] >> 4];
        out[2 * i + 1] = kHexDigits[data[i] & 0x0f];
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) throw ParseError("hex string has odd length");
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw ParseError("invalid hex digit in '" + std::string(hex) + "'");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

std::string Digest::hex() const { return to_hex(bytes); }

Digest Digest::from_hex(std::string_view hex) {
    if (hex.size() != 64) throw ParseError("digest must be 64 hex characters");
    const Bytes raw = core::from_hex(hex);
    Digest d;
    std::memcpy(d.bytes.data(), raw.data(), d.bytes.size());
    return d;
}

Digest digest(ByteSpan payload) {
    ensure_sodium();
    Digest d;
    crypto_hash_sha256(d.bytes.data(), payload.data(), payload.size());
    return d;
}

Digest digest(std::string_view text) { return digest(as_bytes(text)); }

Hasher::Hasher() {
    ensure_sodium();
    crypto_hash_sha256_init(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()));
}

Hasher& Hasher::update(ByteSpan data) {
    if (finished_) throw Error("Hasher::update after finish");
    crypto_hash_sha256_update(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), data.data(),
                              data.size());
    return *this;
}

Hasher& Hasher::update(std::string_view text) { return update(as_bytes(text)); }

Digest Hasher::finish() {
    if (finished_) throw Error("Hasher::finish called twice");
    finished_ = true;
    Digest d;
    crypto_hash_sha256_final(reinterpret_cast<crypto_hash_sha256_state*>(state_.data()), d.bytes.data());
    return d;
}

}  // namespace avs::core
