#include "avs/core/types.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

#include "avs/core/errors.hpp"

namespace avs::core {

std::string_view to_string(Channel c) {
    switch (c) {
        case Channel::wide: return "wide";
        case Channel::narrow: return "narrow";
        case Channel::depth: return "depth";
        case Channel::ir: return "ir";
        case Channel::audio: return "audio";
        case Channel::vitals: return "vitals";
    }
    return "?";
}

std::string_view to_string(Zone z) {
    switch (z) {
        case Zone::raw: return "raw";
        case Zone::converted: return "converted";
        case Zone::features: return "features";
        case Zone::archive: return "archive";
    }
    return "?";
}

std::string_view to_string(MediaFormat f) {
    switch (f) {
        case MediaFormat::tiff: return "tiff";
        case MediaFormat::png: return "png";
        case MediaFormat::wav: return "wav";
        case MediaFormat::flac: return "flac";
        case MediaFormat::vitals_csv: return "vitals_csv";
    }
    return "?";
}

std::string_view to_string(Modality m) {
    switch (m) {
        case Modality::image: return "image";
        case Modality::audio: return "audio";
        case Modality::vitals: return "vitals";
    }
    return "?";
}

Channel parse_channel(std::string_view s) {
    for (Channel c : kAllChannels)
        if (to_string(c) == s) return c;
    throw ParseError("unknown channel '" + std::string(s) + "'");
}

Zone parse_zone(std::string_view s) {
    for (Zone z : {Zone::raw, Zone::converted, Zone::features, Zone::archive})
        if (to_string(z) == s) return z;
    throw ParseError("unknown zone '" + std::string(s) + "'");
}

MediaFormat parse_media_format(std::string_view s) {
    for (MediaFormat f :
         {MediaFormat::tiff, MediaFormat::png, MediaFormat::wav, MediaFormat::flac, MediaFormat::vitals_csv})
        if (to_string(f) == s) return f;
    throw ParseError("unknown media format '" + std::string(s) + "'");
}

Modality modality_of(Channel c) {
    switch (c) {
        case Channel::audio: return Modality::audio;
        case Channel::vitals: return Modality::vitals;
        default: return Modality::image;
    }
}

bool is_image_channel(Channel c) { return modality_of(c) == Modality::image; }

bool is_valid_identifier(std::string_view s) {
    if (s.empty() || s == "." || s == "..") return false;
    for (char ch : s) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '-' || ch == '_' || ch == '.';
        if (!ok) return false;
    }
    return true;
}

void require_identifier(std::string_view field, std::string_view value) {
    if (!is_valid_identifier(value))
        throw ValidationError(std::string(field), "invalid identifier '" + std::string(value) + "'");
}

std::string ObjectKey::session_prefix() const {
    return study_id + "/" + site_id + "/" + subject_id + "/" + session_id;
}

std::string ObjectKey::path() const {
    char seq[32];
    std::snprintf(seq, sizeof(seq), "%06llu", static_cast<unsigned long long>(sequence));
    std::string out = session_prefix();
    out += '/';
    out += to_string(channel);
    out += '/';
    out += to_string(zone);
    out += '/';
    out += seq;
    return out;
}

ObjectKey ObjectKey::with_zone(Zone z) const {
    ObjectKey k = *this;
    k.zone = z;
    return k;
}

ObjectKey parse_key(std::string_view path) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t slash = path.find('/', start);
        parts.push_back(path.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    if (parts.size() != 7)
        throw ParseError("object key '" + std::string(path) + "' has " + std::to_string(parts.size()) +
                         " components, expected 7");

    static constexpr const char* kNames[] = {"study_id", "site_id", "subject_id", "session_id"};
    for (int i = 0; i < 4; ++i)
        if (!is_valid_identifier(parts[i]))
            throw ParseError("object key component " + std::string(kNames[i]) + " '" + std::string(parts[i]) +
                             "' is not a valid identifier");

    ObjectKey key;
    key.study_id = parts[0];
    key.site_id = parts[1];
    key.subject_id = parts[2];
    key.session_id = parts[3];
    try {
        key.channel = parse_channel(parts[4]);
    } catch (const ParseError&) {
        throw ParseError("object key component channel '" + std::string(parts[4]) + "' is unknown");
    }
    try {
        key.zone = parse_zone(parts[5]);
    } catch (const ParseError&) {
        throw ParseError("object key component zone '" + std::string(parts[5]) + "' is unknown");
    }

    const std::string_view seq = parts[6];
    const bool canonical = seq.size() >= 6 && (seq.size() == 6 || seq.front() != '0');
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(seq.data(), seq.data() + seq.size(), value);
    if (!canonical || ec != std::errc{} || ptr != seq.data() + seq.size())
        throw ParseError("object key component sequence '" + std::string(seq) +
                         "' is not a canonical zero-padded integer");
    key.sequence = value;
    return key;
}

DataItem DataItem::make(ObjectKey key, TimestampMs ts, MediaFormat fmt, Bytes payload) {
    if (payload.empty()) throw ValidationError("payload", "data item payload must be non-empty");
    DataItem item;
    item.key = std::move(key);
    item.timestamp = ts;
    item.media_format = fmt;
    item.checksum = digest(payload);
    item.payload = std::move(payload);
    return item;
}

bool DataItem::verify() const { return !payload.empty() && digest(payload) == checksum; }

}  // namespace avs::core
