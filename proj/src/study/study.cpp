#include "avs/study/study.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/core/registries.hpp"
#include "avs/device/session.hpp"
#include "avs/pipeline/extractors.hpp"

namespace avs::study {

namespace fs = std::filesystem;
using nlohmann::json;
using core::Bytes;
using rdb::ColumnType;
using rdb::Row;
using rdb::Value;

namespace {

constexpr core::TimestampMs kDayMs = 86'400'000;

/// Sleeps until `virtual_s` of virtual time has taken 1/time_scale wall time.
void pace(double virtual_s, double time_scale, std::chrono::steady_clock::time_point start) {
    if (!(time_scale > 0)) return;
    const auto due = start + std::chrono::duration<double>(virtual_s / time_scale);
    std::this_thread::sleep_until(std::chrono::time_point_cast<std::chrono::steady_clock::duration>(due));
}

std::string pii_blob(const SubjectPlan& s) {
    return json{{"subject_id", s.subject_id}, {"exact_age", s.age}, {"weight_kg", s.weight_kg},
                {"height_cm", s.height_cm}}
        .dump();
}

}  // namespace

// ---- simulate -------------------------------------------------------------

std::string SimulateSummary::to_json() const {
    return json{{"sessions", sessions},
                {"items", items},
                {"stored_bytes", stored_bytes},
                {"modeled_bytes", modeled_bytes},
                {"virtual_s", virtual_s}}
        .dump(2);
}

SimulateSummary simulate(const StudyConfig& cfg, const fs::path& out, double time_scale) {
    cfg.validate();
    if (fs::exists(out) && !fs::is_empty(out)) throw ValidationError("out", out.string() + " is not empty");
    fs::create_directories(out / "disks");
    fs::create_directories(out / "manifests");
    fs::create_directories(out / "research");
    core::write_file_atomic(out / "config.json", cfg.to_json() + "\n");

    const auto start = std::chrono::steady_clock::now();
    SimulateSummary sum;
    core::Keyring ring;
    std::vector<core::HealthRecord> health;
    core::IdentityStore identity(out / "identity", core::derive_key("coordinator", cfg.seed));
    for (std::size_t si = 0; si < cfg.subjects.size(); ++si) {
        const SubjectPlan& subj = cfg.subjects[si];
        health.push_back(core::make_health_record(subj.subject_id, subj.age, subj.gender, subj.weight_kg,
                                                  subj.height_cm, subj.conditions));
        identity.put(subj.subject_id, pii_blob(subj));
        for (std::uint32_t k = 0; k < subj.sessions; ++k) {
            device::SessionSpec spec;
            spec.device.study_id = cfg.study_id;
            spec.device.site_id = cfg.site_id;
            spec.device.channels = cfg.channels;
            spec.device.mode = cfg.mode;
            spec.device.epoch = session_start(cfg, si, k);
            spec.subject_id = subj.subject_id;
            spec.device_id = "dev-1";
            spec.session_id = session_id(k);
            spec.disk_id = "disk-" + subj.subject_id + "-" + spec.session_id;
            spec.disk_capacity_bytes = cfg.disk_capacity_bytes;
            spec.tick_s = cfg.tick_s;
            spec.battery_hours = cfg.battery_hours;
            auto res = device::run_session(spec, cfg.duration_s, cfg.scenario, session_seed(cfg, si, k));
            res.disk.save(out / "disks" / spec.disk_id);
            core::write_file_atomic(out / "manifests" / (subj.subject_id + "." + spec.session_id + ".json"),
                                    res.manifest.to_json());
            ring.merge(res.keyring);
            ++sum.sessions;
            sum.items += res.manifest.total_items();
            sum.stored_bytes += res.manifest.total_bytes();
            sum.modeled_bytes += res.manifest.total_modeled_bytes();
            sum.virtual_s += static_cast<double>(res.manifest.end_timestamp - res.manifest.start_timestamp) / 1000.0;
            pace(sum.virtual_s, time_scale, start);
        }
    }
    ring.save(out / "keyring.json");
    core::HealthStore(out / "research" / "subjects.json").save(health);
    return sum;
}

// ---- ingest ---------------------------------------------------------------

IngestMode parse_ingest_mode(std::string_view s) {
    if (s == "network") return IngestMode::network;
    if (s == "courier") return IngestMode::courier;
    throw ValidationError("mode", "must be network or courier");
}

IngestFaults IngestFaults::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("faults: ") + e.what());
    }
    IngestFaults f;
    auto fail = [](const std::string& field) { throw ValidationError("faults." + field, "wrong type or value"); };
    try {
        for (const auto& [k, v] : j.items()) {
            if (k == "network") {
                for (const auto& [nk, nv] : v.items()) {
                    if (nk == "interrupt_after") f.interrupt_after = nv.get<std::uint64_t>();
                    else if (nk == "corrupt_in_flight") f.corrupt_in_flight = nv.get<std::set<std::string>>();
                    else throw ValidationError("faults.network." + nk, "unknown field");
                }
            } else if (k == "courier") {
                for (const auto& [ck, cv] : v.items()) {
                    if (ck == "copies") f.courier_copies = cv.get<std::uint32_t>();
                    else if (ck == "lost") f.lost_couriers = cv.get<std::set<std::string>>();
                    else throw ValidationError("faults.courier." + ck, "unknown field");
                }
                if (f.courier_copies == 0) fail("courier.copies");
            } else if (k == "pipeline") {
                for (const auto& [pk, pv] : v.items()) {
                    if (pk == "crash_fraction") f.pipeline.crash_fraction = pv.get<double>();
                    else if (pk == "crashes_per_victim") f.pipeline.crashes_per_victim = pv.get<std::uint32_t>();
                    else if (pk == "seed") f.pipeline.seed = pv.get<std::uint64_t>();
                    else if (pk == "point") {
                        const auto p = pv.get<std::string>();
                        using CP = pipeline::FaultPlan::CrashPoint;
                        if (p == "before_write") f.pipeline.point = CP::before_write;
                        else if (p == "after_write") f.pipeline.point = CP::after_write;
                        else if (p == "mixed") f.pipeline.point = CP::mixed;
                        else fail("pipeline.point");
                    } else {
                        throw ValidationError("faults.pipeline." + pk, "unknown field");
                    }
                }
                if (!(f.pipeline.crash_fraction >= 0 && f.pipeline.crash_fraction <= 1)) fail("pipeline.crash_fraction");
            } else {
                throw ValidationError("faults." + k, "unknown field");
            }
        }
    } catch (const json::exception&) {
        fail("(document)");
    }
    return f;
}

IngestFaults IngestFaults::load(const fs::path& file) { return from_json(core::read_text(file)); }

std::string IngestSummary::to_json() const {
    return json{{"mode", mode == IngestMode::network ? "network" : "courier"},
                {"sessions", sessions},
                {"expected_items", expected_items},
                {"transfers", transfers},
                {"stored", stored},
                {"quarantined", quarantined},
                {"retried", retried},
                {"interruptions", interruptions},
                {"transfer_s", transfer_s},
                {"lost_couriers", lost_couriers},
                {"lost_keys", lost_keys},
                {"data_loss", data_loss()},
                {"feature_records", feature_records},
                {"pipeline", json::parse(pipeline.to_json())}}
        .dump(2);
}

std::string IngestSummary::to_text() const {
    std::ostringstream o;
    o << "ingest (" << (mode == IngestMode::network ? "network" : "courier") << ")\n"
      << "  sessions          " << sessions << "\n"
      << "  expected items    " << expected_items << "\n"
      << "  transfers         " << transfers << "\n"
      << "  stored            " << stored << "\n"
      << "  quarantined       " << quarantined << "\n"
      << "  retried           " << retried << "\n"
      << "  interruptions     " << interruptions << "\n"
      << "  lost keys         " << lost_keys.size() << "\n"
      << "  feature records   " << feature_records << "\n"
      << "pipeline\n"
      << "  items in          " << pipeline.items_in << "\n"
      << "  completed         " << pipeline.completed << "\n"
      << "  dead-lettered     " << pipeline.dead_lettered << "\n"
      << "  redeliveries      " << pipeline.redeliveries << "\n"
      << "  crashes           " << pipeline.crashes << "\n"
      << "  record writes     " << pipeline.record_writes << "\n"
      << "  busy s            " << pipeline.busy_s << "\n"
      << "  cost              " << pipeline.cost << "\n";
    if (!lost_couriers.empty()) {
        o << "DATA LOSS: couriers lost:";
        for (const auto& c : lost_couriers) o << ' ' << c;
        o << "\n";
    }
    if (data_loss()) o << "DATA LOSS: " << lost_keys.size() << " keys unrecoverable\n";
    return o.str();
}

namespace {

void add(IngestSummary& s, const transfer::TransferReport& r) {
    s.transfers += r.transfers;
    s.stored += r.stored;
    s.quarantined += r.quarantined;
    s.transfer_s += r.elapsed_s;
}

}  // namespace

IngestSummary ingest(const fs::path& in, transfer::ObjectStore& store, IngestMode mode, const IngestFaults& faults,
                     bool retry, double time_scale) {
    const auto start = std::chrono::steady_clock::now();
    if (!fs::exists(in / "config.json")) throw ValidationError("in", in.string() + " has no config.json");
    const StudyConfig cfg = StudyConfig::load(in / "config.json");
    core::Keyring ring = core::Keyring::load(in / "keyring.json");

    std::vector<device::EncryptedDisk> disks;
    if (fs::exists(in / "disks")) {
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(in / "disks"))
            if (e.is_directory()) dirs.push_back(e.path());
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
            disks.push_back(device::EncryptedDisk::load(d));
            disks.back().attach_key(ring);
        }
    }

    IngestSummary sum;
    sum.mode = mode;
    std::vector<core::SessionManifest> manifests;
    for (const auto& d : disks)
        for (const auto& m : d.manifests()) {
            manifests.push_back(m);
            sum.expected_items += m.item_checksums.size();
        }
    sum.sessions = manifests.size();

    std::set<std::string> lost;
    if (mode == IngestMode::network) {
        bool interrupt_pending = faults.interrupt_after.has_value();
        for (const auto& d : disks) {
            transfer::FailurePlan plan;
            plan.corrupt_in_flight = faults.corrupt_in_flight;
            if (interrupt_pending) plan.interrupt_after = faults.interrupt_after;
            for (;;) {
                const auto r = transfer::upload_network(d, store, cfg.bandwidth_bytes_per_s, plan);
                add(sum, r);
                if (r.complete) break;
                ++sum.interruptions;
                interrupt_pending = false;
                plan.interrupt_after.reset();
            }
            if (retry) {
                const auto r = transfer::retry_quarantined(d, store, cfg.bandwidth_bytes_per_s);
                add(sum, r);
                sum.retried += r.stored;
            }
        }
    } else {
        std::vector<transfer::CourierDevice> couriers;
        for (std::uint32_t c = 1; c <= faults.courier_copies; ++c)
            couriers.emplace_back("courier-" + std::to_string(c));
        for (const auto& id : faults.lost_couriers)
            if (std::none_of(couriers.begin(), couriers.end(), [&](const auto& c) { return c.id() == id; }))
                throw ValidationError("faults.courier.lost", "no courier named " + id);
        std::vector<const transfer::CourierDevice*> ptrs;
        for (auto& c : couriers) {
            for (const auto& d : disks) transfer::load_courier(d, c);
            transfer::ship_courier(c, faults.lost_couriers.contains(c.id()) ? transfer::CourierState::Lost
                                                                            : transfer::CourierState::Arrived);
            ptrs.push_back(&c);
        }
        auto r = transfer::ingest_couriers(ptrs, store, ring, cfg.bandwidth_bytes_per_s);
        add(sum, r.report);
        sum.lost_couriers = r.loss.couriers;
        lost.insert(r.loss.lost_keys.begin(), r.loss.lost_keys.end());
    }

    if (fs::exists(in / "research" / "subjects.json"))
        store.put(std::string(kSubjectsPath), core::read_file(in / "research" / "subjects.json"));
    store.put(std::string(kConfigPath), core::read_file(in / "config.json"));

    const auto registry = pipeline::ExtractorRegistry::builtin();
    pipeline::Pipeline pipe(store, registry, cfg.pipeline);
    pipe.enqueue_existing();
    sum.pipeline = pipe.run_until_drained(faults.pipeline);

    for (const auto& m : manifests) {
        const auto v = transfer::verify(m, store);
        lost.insert(v.missing.begin(), v.missing.end());
        lost.insert(v.mismatched.begin(), v.mismatched.end());
        for (const auto& e : m.item_checksums) {
            const auto rec = store.try_get(pipeline::feature_path(core::parse_key(e.key), registry.schema_version()));
            if (rec && pipeline::FeatureRecord::from_json(std::string(rec->begin(), rec->end())).complete())
                ++sum.feature_records;
        }
    }
    sum.lost_keys.assign(lost.begin(), lost.end());
    pace(sum.transfer_s + sum.pipeline.elapsed_s, time_scale, start);
    return sum;
}

// ---- rdb build ------------------------------------------------------------

namespace {

rdb::ColumnDef col(std::string name, ColumnType t, bool nullable = false) { return {std::move(name), t, nullable}; }

}  // namespace

rdb::Schema frames_schema() {
    return rdb::Schema({col("subject_id", ColumnType::string), col("session_id", ColumnType::string),
                        col("channel", ColumnType::string), col("seq", ColumnType::int64),
                        col("ts", ColumnType::timestamp), col("width", ColumnType::int64),
                        col("height", ColumnType::int64), col("bed_region", ColumnType::box4, true),
                        col("person_region", ColumnType::box4, true), col("mean_brightness", ColumnType::float64, true),
                        col("motion_energy", ColumnType::float64, true), col("payload", ColumnType::bytes, true)});
}

rdb::Schema audio_schema() {
    return rdb::Schema({col("subject_id", ColumnType::string), col("session_id", ColumnType::string),
                        col("seq", ColumnType::int64), col("ts", ColumnType::timestamp),
                        col("sample_rate", ColumnType::int64), col("rms", ColumnType::float64, true),
                        col("payload", ColumnType::bytes, true)});
}

rdb::Schema vitals_schema() {
    return rdb::Schema({col("subject_id", ColumnType::string), col("session_id", ColumnType::string),
                        col("seq", ColumnType::int64), col("ts", ColumnType::timestamp),
                        col("hr", ColumnType::float64, true), col("rr", ColumnType::float64, true),
                        col("spo2", ColumnType::float64, true), col("bp_systolic", ColumnType::float64, true),
                        col("bp_diastolic", ColumnType::float64, true)});
}

rdb::Schema subjects_schema() {
    return rdb::Schema({col("subject_id", ColumnType::string), col("age_range", ColumnType::string),
                        col("gender", ColumnType::string), col("weight_range", ColumnType::string),
                        col("height_range", ColumnType::string), col("conditions", ColumnType::string),
                        col("copd", ColumnType::boolean)});
}

rdb::Schema catalog_schema() {
    return rdb::Schema({col("subject_id", ColumnType::string), col("session_id", ColumnType::string),
                        col("channel", ColumnType::string), col("seq", ColumnType::int64),
                        col("ts", ColumnType::timestamp), col("bytes", ColumnType::int64)});
}

std::string BuildSummary::to_json() const {
    return json{{"sessions_added", sessions_added}, {"rows_staged", rows_staged}, {"published", published}}.dump(2);
}

namespace {

rdb::Schema schema_for(std::string_view name) {
    if (name == "frames") return frames_schema();
    if (name == "audio") return audio_schema();
    if (name == "vitals") return vitals_schema();
    if (name == "subjects") return subjects_schema();
    return catalog_schema();
}

Value feature_value(const pipeline::FeatureRecord* rec, const std::string& name) {
    if (!rec) return {};
    const auto it = rec->features.find(name);
    if (it == rec->features.end() || it->second.status != pipeline::FeatureStatus::computed) return {};
    const auto& v = it->second.value;
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* b = std::get_if<core::Box>(&v)) return *b;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    return {};
}

Value opt(const std::optional<double>& v) { return v ? Value(*v) : Value(); }

struct BuildState {
    std::set<std::string> sessions;
    std::set<std::string> subjects;
    core::TimestampMs created_ms = 0;
};

BuildState load_state(const fs::path& file) {
    BuildState s;
    if (!fs::exists(file)) return s;
    const json j = json::parse(core::read_text(file));
    s.sessions = j.at("sessions").get<std::set<std::string>>();
    s.subjects = j.at("subjects").get<std::set<std::string>>();
    s.created_ms = j.at("created_ms").get<core::TimestampMs>();
    return s;
}

void save_state(const fs::path& file, const BuildState& s) {
    core::write_file_atomic(
        file, json{{"sessions", s.sessions}, {"subjects", s.subjects}, {"created_ms", s.created_ms}}.dump(1) + "\n");
}

void append_checked(rdb::Dataset& ds, const std::vector<Row>& rows, BuildSummary& sum) {
    if (rows.empty()) return;
    const auto r = ds.append_rows(rows);
    if (!r.rejected.empty())
        throw ValidationError(ds.name() + "." + r.rejected.front().column, r.rejected.front().reason);
    sum.rows_staged[ds.name()] += r.staged;
}

}  // namespace

BuildSummary build_datasets(const transfer::ObjectStore& store, const fs::path& db_root, std::uint64_t group_rows,
                            bool publish) {
    fs::create_directories(db_root);
    rdb::Database db(db_root);
    for (auto name : kDatasets)
        if (!db.exists(std::string(name))) db.create_dataset(std::string(name), schema_for(name), group_rows);
    rdb::Dataset frames = db.open("frames"), audio = db.open("audio"), vitals = db.open("vitals"),
                 subjects = db.open("subjects"), catalog = db.open("catalog");

    const fs::path state_file = db_root / "build.json";
    BuildState state = load_state(state_file);
    BuildSummary sum;
    const auto registry = pipeline::ExtractorRegistry::builtin();

    std::vector<Row> subj_rows;
    for (const auto& h : core::HealthStore(store.root() / kSubjectsPath).load()) {
        if (state.subjects.contains(h.subject_id)) continue;
        std::string conds;
        bool copd = false;
        for (const auto& c : h.conditions) {
            conds += (conds.empty() ? "" : ";") + c;
            std::string lower = c;
            std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
            copd = copd || lower == "copd";
        }
        subj_rows.push_back({h.subject_id, h.age_range, std::string(core::to_string(h.gender)), h.weight_range,
                             h.height_range, conds, copd});
        state.subjects.insert(h.subject_id);
    }
    std::sort(subj_rows.begin(), subj_rows.end(),
              [](const Row& a, const Row& b) { return std::get<std::string>(a[0]) < std::get<std::string>(b[0]); });
    append_checked(subjects, subj_rows, sum);

    for (const auto& path : store.list("manifests/")) {
        if (!path.ends_with(".json") || state.sessions.contains(path)) continue;
        const auto bytes = store.get(path);
        const auto m = core::SessionManifest::from_json(std::string(bytes.begin(), bytes.end()));
        std::vector<std::pair<core::ObjectKey, const core::ItemEntry*>> items;
        for (const auto& e : m.item_checksums) items.emplace_back(core::parse_key(e.key), &e);
        std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

        std::vector<Row> frame_rows, audio_rows, vitals_rows, catalog_rows;
        for (const auto& [key, e] : items) {
            const std::string channel(core::to_string(key.channel));
            const auto seq = static_cast<std::int64_t>(key.sequence);
            catalog_rows.push_back({m.subject_id, m.session_id, channel, seq, e->timestamp,
                                    static_cast<std::int64_t>(e->bytes)});
            std::optional<pipeline::FeatureRecord> rec;
            if (auto r = store.try_get(pipeline::feature_path(key, registry.schema_version())))
                rec = pipeline::FeatureRecord::from_json(std::string(r->begin(), r->end()));
            const pipeline::FeatureRecord* rp = rec ? &*rec : nullptr;
            const auto conv = store.try_get(key.with_zone(core::Zone::converted).path());
            const Value payload = conv ? Value(*conv) : Value();
            const auto& cs = m.channels.at(key.channel);
            switch (core::modality_of(key.channel)) {
                case core::Modality::image:
                    frame_rows.push_back({m.subject_id, m.session_id, channel, seq, e->timestamp,
                                          static_cast<std::int64_t>(cs.width), static_cast<std::int64_t>(cs.height),
                                          feature_value(rp, "bed_region"), feature_value(rp, "person_region"),
                                          feature_value(rp, "mean_brightness"), feature_value(rp, "motion_energy"),
                                          payload});
                    break;
                case core::Modality::audio:
                    audio_rows.push_back({m.subject_id, m.session_id, seq, e->timestamp,
                                          static_cast<std::int64_t>(cs.width), feature_value(rp, "audio_rms"),
                                          payload});
                    break;
                case core::Modality::vitals: {
                    Row row{m.subject_id, m.session_id, seq, e->timestamp, Value(), Value(), Value(), Value(), Value()};
                    if (auto raw = store.try_get(key.path())) {
                        const auto v = core::VitalsRecord::from_csv(std::string(raw->begin(), raw->end()));
                        row[4] = v.hr;
                        row[5] = v.rr;
                        row[6] = opt(v.spo2);
                        row[7] = opt(v.bp_systolic);
                        row[8] = opt(v.bp_diastolic);
                    }
                    vitals_rows.push_back(std::move(row));
                    break;
                }
            }
        }
        append_checked(frames, frame_rows, sum);
        append_checked(audio, audio_rows, sum);
        append_checked(vitals, vitals_rows, sum);
        append_checked(catalog, catalog_rows, sum);
        state.sessions.insert(path);
        state.created_ms = std::max(state.created_ms, m.end_timestamp);
        ++sum.sessions_added;
    }
    save_state(state_file, state);
    if (publish) sum.published = publish_datasets(db_root);
    return sum;
}

std::map<std::string, std::uint64_t> publish_datasets(const fs::path& db_root, const std::vector<std::string>& only) {
    rdb::Database db(db_root);
    const BuildState state = load_state(db_root / "build.json");
    std::map<std::string, std::uint64_t> out;
    for (const auto& name : only.empty() ? db.list() : only) {
        rdb::Dataset ds = db.open(name);
        if (ds.staged_rows() == 0) continue;
        out[name] = ds.publish(state.created_ms).id;
    }
    return out;
}

std::map<std::string, std::string> dataset_digests(const fs::path& db_root) {
    rdb::Database db(db_root);
    std::map<std::string, std::string> out;
    for (const auto& name : db.list()) {
        rdb::Dataset ds = db.open(name);
        out[name] = ds.snapshot_digest(ds.latest_id()).hex();
    }
    return out;
}

// ---- report ---------------------------------------------------------------

namespace {

struct Reference {
    const char* label;
    const char* value;
};

constexpr Reference kReference[] = {{"recruited subjects", "453"}, {"completed subjects", "363*"},
                                    {"total images", "11,132,486"}, {"study days", "75"},
                                    {"storage", "2 TB"}};

std::string human_bytes(std::uint64_t b) {
    static const char* units[] = {"B", "KB", "MB", "GB", "TB", "PB"};
    double v = static_cast<double>(b);
    int u = 0;
    while (v >= 1000 && u < 5) {
        v /= 1000;
        ++u;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, u == 0 ? "%.0f %s" : "%.2f %s", v, units[u]);
    return buf;
}

}  // namespace

StudyReport make_report(const transfer::ObjectStore& store) {
    StudyReport r;
    r.recruited = core::HealthStore(store.root() / kSubjectsPath).load().size();
    std::set<std::string> completed;
    std::set<std::int64_t> days;
    for (const auto& path : store.list("manifests/")) {
        if (!path.ends_with(".json")) continue;
        const auto bytes = store.get(path);
        const auto m = core::SessionManifest::from_json(std::string(bytes.begin(), bytes.end()));
        ++r.sessions;
        completed.insert(m.subject_id);
        for (const auto& [ch, cs] : m.channels)
            if (core::is_image_channel(ch)) r.images_by_channel[std::string(core::to_string(ch))] += cs.item_count;
        r.modeled_bytes += m.total_modeled_bytes();
        for (auto d = m.start_timestamp / kDayMs; d <= m.end_timestamp / kDayMs; ++d) days.insert(d);
    }
    r.completed = completed.size();
    for (const auto& [_, n] : r.images_by_channel) r.images += n;
    r.study_days = days.size();
    for (const auto& k : store.list_zone(core::Zone::raw)) r.storage_bytes += store.size_of(k.path());
    return r;
}

std::string StudyReport::to_json() const {
    json ref = json::object();
    for (const auto& x : kReference) ref[x.label] = x.value;
    return json{{"recruited_subjects", recruited},
                {"completed_subjects", completed},
                {"sessions", sessions},
                {"total_images", images},
                {"images_by_channel", images_by_channel},
                {"study_days", study_days},
                {"storage_bytes", storage_bytes},
                {"modeled_bytes", modeled_bytes},
                {"reference", ref}}
        .dump(2);
}

std::string StudyReport::to_text() const {
    std::ostringstream o;
    char line[160];
    auto row = [&](const char* label, const std::string& v, const char* ref) {
        std::snprintf(line, sizeof line, "%-22s %20s   %12s\n", label, v.c_str(), ref);
        o << line;
    };
    row("measure", "this study", "reference");
    row("recruited subjects", std::to_string(recruited), kReference[0].value);
    row("completed subjects", std::to_string(completed), kReference[1].value);
    row("total images", std::to_string(images), kReference[2].value);
    row("study days", std::to_string(study_days), kReference[3].value);
    row("storage (raw zone)", human_bytes(storage_bytes), kReference[4].value);
    row("storage (modeled)", human_bytes(modeled_bytes), "");
    o << "sessions: " << sessions << "; images by channel:";
    for (const auto& [ch, n] : images_by_channel) o << ' ' << ch << '=' << n;
    o << "\nreference: figures from the original deployment, shown for scale only.\n"
      << "* the deployment's own summaries give both 363 and 369 completed subjects; 363 is shown.\n";
    return o.str();
}

// ---- end to end ------------------------------------------------------------

RunResult run_study(const StudyConfig& cfg, const fs::path& work, const IngestFaults& faults) {
    RunResult r;
    simulate(cfg, work / "sim");
    transfer::ObjectStore store(work / "store");
    r.ingest = ingest(work / "sim", store, IngestMode::network, faults);
    build_datasets(store, work / "db", cfg.group_rows);
    r.report = make_report(store);
    r.digests = dataset_digests(work / "db");
    return r;
}

}  // namespace avs::study
