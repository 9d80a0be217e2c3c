#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "avs/core/types.hpp"

namespace avs::core {

struct PrivacyGap {
    TimestampMs start = 0;  // inclusive
    TimestampMs end = 0;    // exclusive

    TimestampMs duration() const { return end - start; }
    bool contains(TimestampMs t) const { return t >= start && t < end; }
    friend bool operator==(const PrivacyGap&, const PrivacyGap&) = default;
};

struct ChannelSummary {
    std::uint64_t item_count = 0;
    std::uint64_t byte_total = 0;      // plaintext payload bytes actually stored
    std::uint64_t modeled_bytes = 0;   // item_count x encoded-size model
    std::uint64_t first_sequence = 0;
    std::uint64_t last_sequence = 0;
    std::uint32_t width = 0;           // payload geometry (image) or sample rate (audio)
    std::uint32_t height = 0;
    std::uint32_t samples_per_pixel = 0;
    std::uint32_t bits_per_sample = 0;

    friend bool operator==(const ChannelSummary&, const ChannelSummary&) = default;
};

struct ItemEntry {
    std::string key;
    Digest checksum;
    std::uint64_t bytes = 0;
    TimestampMs timestamp = 0;

    friend bool operator==(const ItemEntry&, const ItemEntry&) = default;
};

/// Authoritative record of one device session.
struct SessionManifest {
    std::string study_id;
    std::string site_id;
    std::string session_id;
    std::string subject_id;
    std::string device_id;
    std::string ward_id;
    std::string disk_id;
    TimestampMs start_timestamp = 0;
    TimestampMs end_timestamp = 0;
    /// Census sessions account items and bytes without storing payloads, so
    /// they carry no item checksums.
    bool census = false;
    std::map<Channel, ChannelSummary> channels;
    std::vector<PrivacyGap> privacy_gaps;
    std::vector<ItemEntry> item_checksums;

    std::uint64_t total_items() const;
    std::uint64_t total_bytes() const;
    std::uint64_t total_modeled_bytes() const;

    /// Throws ValidationError naming the first broken invariant.
    void validate() const;

    std::string to_json() const;
    static SessionManifest from_json(std::string_view text);

    friend bool operator==(const SessionManifest&, const SessionManifest&) = default;
};

}  // namespace avs::core
