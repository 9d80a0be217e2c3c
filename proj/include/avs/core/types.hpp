#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "avs/core/digest.hpp"

namespace avs::core {

enum class Channel : std::uint8_t { wide, narrow, depth, ir, audio, vitals };
enum class Zone : std::uint8_t { raw, converted, features, archive };
enum class MediaFormat : std::uint8_t { tiff, png, wav, flac, vitals_csv };
enum class Modality : std::uint8_t { image, audio, vitals };

inline constexpr std::array kAllChannels{Channel::wide, Channel::narrow, Channel::depth,
                                         Channel::ir,   Channel::audio,  Channel::vitals};

std::string_view to_string(Channel c);
std::string_view to_string(Zone z);
std::string_view to_string(MediaFormat f);
std::string_view to_string(Modality m);

Channel parse_channel(std::string_view s);
Zone parse_zone(std::string_view s);
MediaFormat parse_media_format(std::string_view s);

Modality modality_of(Channel c);
bool is_image_channel(Channel c);

/// Axis-aligned rectangle in pixel coordinates.
struct Box {
    std::int32_t x = 0;
    std::int32_t y = 0;
    std::int32_t w = 0;
    std::int32_t h = 0;

    friend bool operator==(const Box&, const Box&) = default;
    friend auto operator<=>(const Box&, const Box&) = default;
};

/// UTC milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;

/// Hierarchical object identifier:
/// study/site/subject/session/channel/zone/sequence, sequence zero-padded to
/// at least six digits.
struct ObjectKey {
    std::string study_id;
    std::string site_id;
    std::string subject_id;
    std::string session_id;
    Channel channel = Channel::wide;
    Zone zone = Zone::raw;
    std::uint64_t sequence = 0;

    std::string path() const;
    ObjectKey with_zone(Zone z) const;
    /// study/site/subject/session, shared by every item of one session.
    std::string session_prefix() const;

    friend bool operator==(const ObjectKey&, const ObjectKey&) = default;
    friend auto operator<=>(const ObjectKey&, const ObjectKey&) = default;
};

ObjectKey parse_key(std::string_view path);

/// Identifier components are non-empty and restricted to [A-Za-z0-9._-],
/// excluding "." and "..".
bool is_valid_identifier(std::string_view s);
void require_identifier(std::string_view field, std::string_view value);

/// One captured file.
struct DataItem {
    ObjectKey key;
    TimestampMs timestamp = 0;
    MediaFormat media_format = MediaFormat::tiff;
    Bytes payload;
    Digest checksum;

    static DataItem make(ObjectKey key, TimestampMs ts, MediaFormat fmt, Bytes payload);
    bool verify() const;
};

}  // namespace avs::core
