#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avs::core {

using Bytes = std::vector<std::uint8_t>;
using ByteSpan = std::span<const std::uint8_t>;

/// SHA-256 digest value.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    std::string hex() const;
    static Digest from_hex(std::string_view hex);

    friend bool operator==(const Digest&, const Digest&) = default;
    friend auto operator<=>(const Digest&, const Digest&) = default;
};

Digest digest(ByteSpan payload);
Digest digest(std::string_view text);

/// Incremental hashing for multi-part inputs (cache fingerprints, dataset digests).
class Hasher {
public:
    Hasher();
    Hasher& update(ByteSpan data);
    Hasher& update(std::string_view text);
    Digest finish();

private:
    alignas(64) std::array<std::uint8_t, 256> state_{};
    bool finished_ = false;
};

std::string to_hex(ByteSpan data);
Bytes from_hex(std::string_view hex);

inline ByteSpan as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace avs::core
