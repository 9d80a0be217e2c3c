#include "avs/study/config.hpp"

#include <cmath>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/device/synthetic.hpp"

namespace avs::study {

using nlohmann::json;

namespace {

constexpr core::TimestampMs kDayMs = 86'400'000;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* n : known) ok = ok || k == n;
        if (!ok) throw ValidationError(where.empty() ? k : where + "." + k, "unknown field");
    }
}

/// Reads `j[key]` into `out` when present, naming `field` on type errors.
template <class T>
void read(const json& j, const char* key, T& out, const std::string& field) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(field, "wrong type");
    }
}

std::string subject_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03zu", i);
    return buf;
}

std::vector<SubjectPlan> generated_roster(std::size_t count, std::uint64_t seed, const std::set<std::string>& withdrawn) {
    static const char* kConditions[] = {"COPD", "CHF", "pneumonia", "diabetes", "sepsis"};
    std::mt19937_64 rng(device::mix64(seed ^ 0x5eedULL));
    std::vector<SubjectPlan> out;
    for (std::size_t i = 1; i <= count; ++i) {
        SubjectPlan p;
        p.subject_id = subject_name(i);
        p.age = 20 + static_cast<double>(rng() % 700) / 10.0;
        p.gender = rng() % 2 ? core::Gender::female : core::Gender::male;
        p.weight_kg = 45 + static_cast<double>(rng() % 800) / 10.0;
        p.height_cm = 150 + static_cast<double>(rng() % 450) / 10.0;
        p.conditions = {kConditions[rng() % 5]};
        if (rng() % 3 == 0) p.conditions.push_back(kConditions[rng() % 5]);
        if (p.conditions.size() == 2 && p.conditions[0] == p.conditions[1]) p.conditions.pop_back();
        p.sessions = withdrawn.contains(p.subject_id) ? 0 : 1;
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

void StudyConfig::validate() const {
    core::require_identifier("study_id", study_id);
    core::require_identifier("site_id", site_id);
    if (subjects.empty()) throw ValidationError("subjects", "at least one subject is required");
    std::set<std::string> seen;
    for (const auto& s : subjects) {
        core::require_identifier("subjects.subject_id", s.subject_id);
        if (!seen.insert(s.subject_id).second) throw ValidationError("subjects.subject_id", "duplicate " + s.subject_id);
        (void)core::make_health_record(s.subject_id, s.age, s.gender, s.weight_kg, s.height_cm, s.conditions);
        if (s.sessions > 99) throw ValidationError("subjects.sessions", "at most 99 sessions per subject");
    }
    if (!(duration_s > 0) || !std::isfinite(duration_s)) throw ValidationError("session.duration_s", "must be positive");
    if (!(tick_s > 0) || !std::isfinite(tick_s)) throw ValidationError("session.tick_s", "must be positive");
    if (!(battery_hours > 0)) throw ValidationError("session.battery_hours", "must be positive");
    if (disk_capacity_bytes == 0) throw ValidationError("session.disk_capacity_bytes", "must be positive");
    for (const auto& e : scenario)
        if (!(e.at_s >= 0) || e.at_s > duration_s)
            throw ValidationError("session.scenario", "event at " + std::to_string(e.at_s) + " s is outside the session");
    if (channels.empty()) throw ValidationError("channels", "at least one channel must be enabled");
    for (const auto& c : channels) c.validate();
    pipeline.pool.validate();
    if (pipeline.max_deliveries == 0) throw ValidationError("pipeline.max_deliveries", "must be positive");
    if (!(pipeline.visibility_timeout_s > 0)) throw ValidationError("pipeline.visibility_timeout_s", "must be positive");
    if (!(bandwidth_bytes_per_s > 0)) throw ValidationError("transfer.bandwidth_bytes_per_s", "must be positive");
    if (group_rows == 0) throw ValidationError("rdb.group_rows", "must be positive");
}

std::string StudyConfig::to_json() const {
    json roster = json::array();
    for (const auto& s : subjects)
        roster.push_back({{"subject_id", s.subject_id},
                          {"age", s.age},
                          {"gender", core::to_string(s.gender)},
                          {"weight_kg", s.weight_kg},
                          {"height_cm", s.height_cm},
                          {"conditions", s.conditions},
                          {"sessions", s.sessions}});
    json scen = json::array();
    for (const auto& e : scenario)
        scen.push_back({{"at_s", e.at_s}, {"kind", e.kind == device::ButtonEvent::Kind::power ? "power" : "privacy"}});
    json chans = json::object();
    for (const auto& c : channels) {
        if (c.channel == core::Channel::vitals) {
            chans["vitals"] = {{"rate_hz", c.frame_rate}};
            continue;
        }
        chans[std::string(core::to_string(c.channel))] = {{"frame_rate", c.frame_rate},
                                                           {"payload_width", c.payload_width},
                                                           {"payload_height", c.payload_height},
                                                           {"bytes_per_item", c.bytes_per_item}};
    }
    for (auto c : core::kAllChannels)
        if (!chans.contains(std::string(core::to_string(c)))) chans[std::string(core::to_string(c))] = {{"enabled", false}};
    return json{{"study_id", study_id},
                {"site_id", site_id},
                {"seed", seed},
                {"epoch_ms", epoch_ms},
                {"subjects", {{"roster", roster}}},
                {"session",
                 {{"duration_s", duration_s},
                  {"tick_s", tick_s},
                  {"battery_hours", battery_hours},
                  {"disk_capacity_bytes", disk_capacity_bytes},
                  {"mode", mode == device::CaptureMode::census ? "census" : "materialize"},
                  {"scenario", scen}}},
                {"channels", chans},
                {"pipeline",
                 {{"accelerated", pipeline.accelerated},
                  {"visibility_timeout_s", pipeline.visibility_timeout_s},
                  {"max_deliveries", pipeline.max_deliveries},
                  {"min_workers", pipeline.pool.min_workers},
                  {"max_workers", pipeline.pool.max_workers},
                  {"target_backlog_per_worker", pipeline.pool.target_backlog_per_worker}}},
                {"transfer", {{"bandwidth_bytes_per_s", bandwidth_bytes_per_s}}},
                {"rdb", {{"group_rows", group_rows}}}}
        .dump(2);
}

StudyConfig StudyConfig::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config: top level must be an object");
    reject_unknown(j, "", {"study_id", "site_id", "seed", "epoch_ms", "subjects", "session", "channels", "pipeline",
                           "transfer", "rdb"});
    StudyConfig c;
    read(j, "study_id", c.study_id, "study_id");
    read(j, "site_id", c.site_id, "site_id");
    read(j, "seed", c.seed, "seed");
    read(j, "epoch_ms", c.epoch_ms, "epoch_ms");

    if (!j.contains("subjects")) throw ValidationError("subjects", "required");
    const json& subj = j.at("subjects");
    if (!subj.is_object()) throw ValidationError("subjects", "must be an object");
    reject_unknown(subj, "subjects", {"count", "withdrawn", "roster"});
    std::uint32_t sessions_per_subject = 1;
    if (j.contains("session") && j.at("session").is_object())
        read(j.at("session"), "sessions_per_subject", sessions_per_subject, "session.sessions_per_subject");
    if (subj.contains("roster")) {
        if (subj.contains("count")) throw ValidationError("subjects", "give either count or roster");
        for (const auto& r : subj.at("roster")) {
            reject_unknown(r, "subjects.roster", {"subject_id", "age", "gender", "weight_kg", "height_cm", "conditions",
                                                  "sessions"});
            SubjectPlan p;
            p.sessions = sessions_per_subject;
            read(r, "subject_id", p.subject_id, "subjects.roster.subject_id");
            read(r, "age", p.age, "subjects.roster.age");
            std::string g = "unknown";
            read(r, "gender", g, "subjects.roster.gender");
            try {
                p.gender = core::parse_gender(g);
            } catch (const Error&) {
                throw ValidationError("subjects.roster.gender", "unknown gender '" + g + "'");
            }
            read(r, "weight_kg", p.weight_kg, "subjects.roster.weight_kg");
            read(r, "height_cm", p.height_cm, "subjects.roster.height_cm");
            read(r, "conditions", p.conditions, "subjects.roster.conditions");
            read(r, "sessions", p.sessions, "subjects.roster.sessions");
            c.subjects.push_back(std::move(p));
        }
    } else {
        std::int64_t count = 0;
        read(subj, "count", count, "subjects.count");
        if (count <= 0 || count > 999) throw ValidationError("subjects.count", "must be in 1..999");
        std::vector<std::string> withdrawn;
        read(subj, "withdrawn", withdrawn, "subjects.withdrawn");
        c.subjects = generated_roster(static_cast<std::size_t>(count), c.seed, {withdrawn.begin(), withdrawn.end()});
        for (auto& p : c.subjects)
            if (p.sessions) p.sessions = sessions_per_subject;
    }

    if (j.contains("session")) {
        const json& s = j.at("session");
        reject_unknown(s, "session", {"duration_s", "tick_s", "sessions_per_subject", "battery_hours",
                                      "disk_capacity_bytes", "mode", "scenario"});
        read(s, "duration_s", c.duration_s, "session.duration_s");
        read(s, "tick_s", c.tick_s, "session.tick_s");
        read(s, "battery_hours", c.battery_hours, "session.battery_hours");
        read(s, "disk_capacity_bytes", c.disk_capacity_bytes, "session.disk_capacity_bytes");
        std::string mode = "materialize";
        read(s, "mode", mode, "session.mode");
        if (mode == "census") c.mode = device::CaptureMode::census;
        else if (mode != "materialize") throw ValidationError("session.mode", "must be materialize or census");
        if (s.contains("scenario")) {
            for (const auto& e : s.at("scenario")) {
                device::ButtonEvent ev;
                read(e, "at_s", ev.at_s, "session.scenario.at_s");
                std::string kind = "privacy";
                read(e, "kind", kind, "session.scenario.kind");
                if (kind == "power") ev.kind = device::ButtonEvent::Kind::power;
                else if (kind != "privacy") throw ValidationError("session.scenario.kind", "must be privacy or power");
                c.scenario.push_back(ev);
            }
        }
    }

    // Channels: defaults plus 2 Hz vitals, then overrides.
    c.channels = device::default_channels();
    c.channels.push_back(device::vitals_channel());
    if (j.contains("channels")) {
        const json& ch = j.at("channels");
        for (const auto& [name, o] : ch.items()) {
            core::Channel id;
            try {
                id = core::parse_channel(name);
            } catch (const Error&) {
                throw ValidationError("channels." + name, "unknown channel");
            }
            const std::string f = "channels." + name;
            auto it = std::find_if(c.channels.begin(), c.channels.end(),
                                   [&](const device::ChannelConfig& cc) { return cc.channel == id; });
            bool enabled = true;
            read(o, "enabled", enabled, f + ".enabled");
            if (!enabled) {
                if (it != c.channels.end()) c.channels.erase(it);
                continue;
            }
            if (it == c.channels.end()) {
                c.channels.push_back(id == core::Channel::vitals ? device::vitals_channel() : device::default_channel(id));
                it = c.channels.end() - 1;
            }
            if (id == core::Channel::vitals) {
                reject_unknown(o, f, {"rate_hz", "enabled"});
                read(o, "rate_hz", it->frame_rate, f + ".rate_hz");
            } else {
                reject_unknown(o, f, {"frame_rate", "payload_width", "payload_height", "bytes_per_item", "enabled"});
                read(o, "frame_rate", it->frame_rate, f + ".frame_rate");
                read(o, "payload_width", it->payload_width, f + ".payload_width");
                read(o, "payload_height", it->payload_height, f + ".payload_height");
                read(o, "bytes_per_item", it->bytes_per_item, f + ".bytes_per_item");
            }
            try {
                it->validate();
            } catch (const ValidationError& e) {
                throw ValidationError(f + "." + e.field(), "invalid value");
            }
        }
    }

    if (j.contains("pipeline")) {
        const json& p = j.at("pipeline");
        reject_unknown(p, "pipeline", {"accelerated", "visibility_timeout_s", "max_deliveries", "threads", "min_workers",
                                       "max_workers", "target_backlog_per_worker"});
        read(p, "accelerated", c.pipeline.accelerated, "pipeline.accelerated");
        read(p, "visibility_timeout_s", c.pipeline.visibility_timeout_s, "pipeline.visibility_timeout_s");
        read(p, "max_deliveries", c.pipeline.max_deliveries, "pipeline.max_deliveries");
        read(p, "threads", c.pipeline.threads, "pipeline.threads");
        read(p, "min_workers", c.pipeline.pool.min_workers, "pipeline.min_workers");
        read(p, "max_workers", c.pipeline.pool.max_workers, "pipeline.max_workers");
        read(p, "target_backlog_per_worker", c.pipeline.pool.target_backlog_per_worker,
             "pipeline.target_backlog_per_worker");
    }
    if (j.contains("transfer")) {
        reject_unknown(j.at("transfer"), "transfer", {"bandwidth_bytes_per_s"});
        read(j.at("transfer"), "bandwidth_bytes_per_s", c.bandwidth_bytes_per_s, "transfer.bandwidth_bytes_per_s");
    }
    if (j.contains("rdb")) {
        reject_unknown(j.at("rdb"), "rdb", {"group_rows"});
        read(j.at("rdb"), "group_rows", c.group_rows, "rdb.group_rows");
    }
    c.validate();
    return c;
}

StudyConfig StudyConfig::load(const std::filesystem::path& file) { return from_json(core::read_text(file)); }

std::uint64_t session_seed(const StudyConfig& cfg, std::size_t subject_index, std::uint32_t session_index) {
    return device::mix64(cfg.seed * 0x9E3779B97F4A7C15ULL + subject_index * 131 + session_index);
}

std::string session_id(std::uint32_t session_index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "sess-%02u", session_index + 1);
    return buf;
}

core::TimestampMs session_start(const StudyConfig& cfg, std::size_t subject_index, std::uint32_t session_index) {
    std::int64_t day = 0;
    for (std::size_t i = 0; i < subject_index; ++i) day += std::max<std::uint32_t>(1, cfg.subjects[i].sessions);
    return cfg.epoch_ms + (day + session_index) * kDayMs;
}

}  // namespace avs::study
