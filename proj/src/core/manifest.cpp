#include "avs/core/manifest.hpp"

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"

namespace avs::core {

using nlohmann::json;

std::uint64_t SessionManifest::total_items() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : channels) n += s.item_count;
    return n;
}

std::uint64_t SessionManifest::total_bytes() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : channels) n += s.byte_total;
    return n;
}

std::uint64_t SessionManifest::total_modeled_bytes() const {
    std::uint64_t n = 0;
    for (const auto& [_, s] : channels) n += s.modeled_bytes;
    return n;
}

void SessionManifest::validate() const {
    if (end_timestamp < start_timestamp) throw ValidationError("end_timestamp", "precedes start_timestamp");

    TimestampMs prev_end = start_timestamp;
    for (const auto& g : privacy_gaps) {
        if (g.start < prev_end) throw ValidationError("privacy_gaps", "gaps overlap or are unsorted");
        if (g.end < g.start) throw ValidationError("privacy_gaps", "gap ends before it starts");
        if (g.end > end_timestamp) throw ValidationError("privacy_gaps", "gap extends past session end");
        prev_end = g.end;
    }

    if (census) {
        if (!item_checksums.empty()) throw ValidationError("item_checksums", "census manifest must not list items");
        return;
    }

    std::map<Channel, std::uint64_t> counts;
    std::map<Channel, std::uint64_t> bytes;
    std::map<Channel, std::uint64_t> last_seq;
    for (const auto& e : item_checksums) {
        const ObjectKey k = parse_key(e.key);
        if (k.session_id != session_id || k.subject_id != subject_id)
            throw ValidationError("item_checksums", "key " + e.key + " belongs to another session");
        auto [it, fresh] = last_seq.try_emplace(k.channel, k.sequence);
        if (!fresh) {
            if (k.sequence <= it->second)
                throw ValidationError("item_checksums", "sequence not strictly increasing at " + e.key);
            it->second = k.sequence;
        }
        ++counts[k.channel];
        bytes[k.channel] += e.bytes;
    }
    for (const auto& [ch, s] : channels) {
        if (s.item_count != counts[ch])
            throw ValidationError("channels." + std::string(to_string(ch)) + ".item_count",
                                  "does not match the number of checksum entries");
        if (s.byte_total != bytes[ch])
            throw ValidationError("channels." + std::string(to_string(ch)) + ".byte_total",
                                  "does not match the sum of item sizes");
    }
    for (const auto& [ch, n] : counts)
        if (!channels.contains(ch))
            throw ValidationError("channels", "missing summary for channel " + std::string(to_string(ch)));
}

std::string SessionManifest::to_json() const {
    json j;
    j["study_id"] = study_id;
    j["site_id"] = site_id;
    j["session_id"] = session_id;
    j["subject_id"] = subject_id;
    j["device_id"] = device_id;
    j["ward_id"] = ward_id;
    j["disk_id"] = disk_id;
    j["start_timestamp"] = start_timestamp;
    j["end_timestamp"] = end_timestamp;
    j["census"] = census;
    json chans = json::object();
    for (const auto& [ch, s] : channels) {
        chans[std::string(to_string(ch))] = {
            {"item_count", s.item_count},         {"byte_total", s.byte_total},
            {"modeled_bytes", s.modeled_bytes},   {"first_sequence", s.first_sequence},
            {"last_sequence", s.last_sequence},   {"width", s.width},
            {"height", s.height},                 {"samples_per_pixel", s.samples_per_pixel},
            {"bits_per_sample", s.bits_per_sample}};
    }
    j["channels"] = std::move(chans);
    json gaps = json::array();
    for (const auto& g : privacy_gaps) gaps.push_back(json::array({g.start, g.end}));
    j["privacy_gaps"] = std::move(gaps);
    json items = json::array();
    for (const auto& e : item_checksums)
        items.push_back({{"key", e.key}, {"checksum", e.checksum.hex()}, {"bytes", e.bytes}, {"timestamp", e.timestamp}});
    j["item_checksums"] = std::move(items);
    return j.dump(1) + "\n";
}

SessionManifest SessionManifest::from_json(std::string_view text) {
    SessionManifest m;
    try {
        const json j = json::parse(text);
        m.study_id = j.at("study_id").get<std::string>();
        m.site_id = j.at("site_id").get<std::string>();
        m.session_id = j.at("session_id").get<std::string>();
        m.subject_id = j.at("subject_id").get<std::string>();
        m.device_id = j.at("device_id").get<std::string>();
        m.ward_id = j.at("ward_id").get<std::string>();
        m.disk_id = j.at("disk_id").get<std::string>();
        m.start_timestamp = j.at("start_timestamp").get<TimestampMs>();
        m.end_timestamp = j.at("end_timestamp").get<TimestampMs>();
        m.census = j.value("census", false);
        for (const auto& [name, s] : j.at("channels").items()) {
            ChannelSummary cs;
            cs.item_count = s.at("item_count").get<std::uint64_t>();
            cs.byte_total = s.at("byte_total").get<std::uint64_t>();
            cs.modeled_bytes = s.value("modeled_bytes", std::uint64_t{0});
            cs.first_sequence = s.at("first_sequence").get<std::uint64_t>();
            cs.last_sequence = s.at("last_sequence").get<std::uint64_t>();
            cs.width = s.value("width", 0u);
            cs.height = s.value("height", 0u);
            cs.samples_per_pixel = s.value("samples_per_pixel", 0u);
            cs.bits_per_sample = s.value("bits_per_sample", 0u);
            m.channels[parse_channel(name)] = cs;
        }
        for (const auto& g : j.at("privacy_gaps"))
            m.privacy_gaps.push_back({g.at(0).get<TimestampMs>(), g.at(1).get<TimestampMs>()});
        for (const auto& e : j.at("item_checksums"))
            m.item_checksums.push_back({e.at("key").get<std::string>(),
                                        Digest::from_hex(e.at("checksum").get<std::string>()),
                                        e.at("bytes").get<std::uint64_t>(), e.at("timestamp").get<TimestampMs>()});
    } catch (const json::exception& ex) {
        throw ParseError(std::string("session manifest: ") + ex.what());
    }
    return m;
}

}  // namespace avs::core
