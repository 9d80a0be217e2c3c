// Acceptance suite: one PASS/FAIL line per criterion. Exit status 0 iff all pass.
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "avs/client/stream.hpp"
#include "avs/core/errors.hpp"
#include "avs/device/session.hpp"
#include "avs/media/codecs.hpp"
#include "avs/pipeline/pipeline.hpp"
#include "avs/rdb/dataset.hpp"
#include "avs/study/study.hpp"
#include "avs/transfer/transfer.hpp"
#include "client_gen.hpp"
#include "rdb_gen.hpp"
#include "temp_dir.hpp"

using namespace avs;
using core::Channel;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kGiBTarget = 7.0;
constexpr double kGiBTolerance = 0.10;
constexpr double kHourBudgetS = 10.0;
constexpr std::int64_t kCountSlack = 1;
constexpr std::size_t kIngestItems = 1000;
constexpr double kCrashFraction = 0.30;
constexpr double kIngestBudgetS = 60.0;
constexpr int kCodecSamples = 500;
constexpr std::size_t kOracleRows = 50'000;
constexpr int kOraclePredicates = 200;
constexpr double kMinSkipFraction = 0.50;
constexpr double kMinCostRatio = 10.0;
constexpr double kMaxCostRatio = 60.0;
constexpr double kStudyBudgetS = 120.0;

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Device rate reproduction.
void c1(Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    device::SessionSpec spec;
    spec.device.mode = device::CaptureMode::census;
    spec.tick_s = 10.0;
    const auto r = device::run_session(spec, 3600.0, {}, 1);
    const double wall = seconds_since(t0);
    const double gib = static_cast<double>(r.manifest.total_modeled_bytes()) / static_cast<double>(1ULL << 30);
    o.detail << "1 h session = " << gib << " GiB in " << wall << " s. ";
    o.require(std::abs(gib - kGiBTarget) <= kGiBTarget * kGiBTolerance, "7 GiB +-10%");
    o.require(wall < kHourBudgetS, "under 10 s");
}

// 2. Frame-rate fidelity.
void c2(Outcome& o) {
    const auto r = device::run_session(device::SessionSpec{}, 60.0, {}, 3);
    const auto& ch = r.manifest.channels;
    const std::int64_t ir = ch.at(Channel::ir).item_count, wide = ch.at(Channel::wide).item_count,
                       depth = ch.at(Channel::depth).item_count;
    o.detail << "ir=" << ir << " wide=" << wide << " depth=" << depth << ". ";
    o.require(std::abs(ir - 480) <= kCountSlack && std::abs(wide - 1500) <= kCountSlack &&
                  std::abs(depth - 1500) <= kCountSlack,
              "within +-1");
    o.require(ir == 480 && wide == 1500 && depth == 1500, "exact counts");
    o.require(std::int64_t(r.disk.item_count()) == ir + wide + depth + std::int64_t(ch.at(Channel::narrow).item_count) +
                                                       std::int64_t(ch.at(Channel::audio).item_count),
              "disk holds every item");
}

// 3. Zero loss under faults.
void c3(Outcome& o) {
    testing::TempDir dir;
    const auto t0 = std::chrono::steady_clock::now();
    device::SessionSpec spec;
    spec.device.channels = {device::default_channel(Channel::ir)};
    const auto s = device::run_session(spec, kIngestItems / 8.0, {}, 17);
    transfer::ObjectStore store(dir / "store");
    transfer::FailurePlan cut;
    cut.interrupt_after = kIngestItems / 3;
    const auto first = transfer::upload_network(s.disk, store, 1e8, cut);
    const auto second = transfer::upload_network(s.disk, store, 1e8);
    pipeline::PipelineConfig cfg;
    cfg.threads = 4;
    pipeline::Pipeline p(store, pipeline::ExtractorRegistry::builtin(), cfg);
    p.enqueue_existing();
    pipeline::FaultPlan plan;
    plan.crash_fraction = kCrashFraction;
    plan.seed = 2024;
    const auto rep = p.run_until_drained(plan);
    const auto v = transfer::verify(s.manifest, store);
    std::set<std::string> records;
    for (const auto& k : store.list_zone(core::Zone::raw)) {
        const auto rec = store.try_get(pipeline::feature_path(k, 1));
        if (rec && pipeline::FeatureRecord::from_json(std::string(rec->begin(), rec->end())).complete())
            records.insert(k.path());
    }
    const double wall = seconds_since(t0);
    o.detail << "interrupted=" << !first.complete << " resent=" << second.transfers << " completed=" << rep.completed
             << " records=" << records.size() << " writes=" << rep.record_writes << " crashes=" << rep.crashes
             << " redeliveries=" << rep.redeliveries << " lost=" << v.missing.size() + v.mismatched.size() << " in "
             << wall << " s. ";
    o.require(s.manifest.item_checksums.size() == kIngestItems, "1000 items");
    o.require(!first.complete && first.transfers + second.transfers == kIngestItems, "one interruption, no resend");
    o.require(rep.completed == kIngestItems && records.size() == kIngestItems, "1000 completed records");
    o.require(v.ok(), "0 lost");
    o.require(rep.record_writes == kIngestItems && rep.dead_lettered == 0, "0 duplicated");
    o.require(rep.crashes > 0 && rep.redeliveries == rep.crashes, "crashes injected and redelivered");
    o.require(wall < kIngestBudgetS, "under 60 s");
}

// 4. Courier risk model.
void c4(Outcome& o) {
    testing::TempDir dir;
    device::SessionSpec spec;
    spec.device.channels = {device::default_channel(Channel::ir), device::default_channel(Channel::audio)};
    const auto s = device::run_session(spec, 10.0, {}, 9);
    const std::size_t keys = s.manifest.item_checksums.size();

    transfer::CourierDevice single("solo");
    transfer::load_courier(s.disk, single);
    transfer::ship_courier(single, transfer::CourierState::Lost);
    transfer::ObjectStore a(dir / "a");
    const auto ra = transfer::ingest_courier(single, a, s.keyring);

    transfer::CourierDevice c1("one"), c2("two");
    transfer::load_courier(s.disk, c1);
    transfer::load_courier(s.disk, c2);
    transfer::ship_courier(c1, transfer::CourierState::Lost);
    transfer::ship_courier(c2, transfer::CourierState::Arrived);
    transfer::ObjectStore b(dir / "b");
    const auto rb = transfer::ingest_couriers({&c1, &c2}, b, s.keyring);
    o.detail << "single lost " << ra.loss.lost_keys.size() << "/" << keys << ", dual lost " << rb.loss.lost_keys.size()
             << ". ";
    o.require(ra.loss.lost_keys.size() == keys && ra.loss.couriers == std::vector<std::string>{"solo"},
              "single loss covers 100%");
    o.require(rb.loss.lost_keys.empty() && transfer::verify(s.manifest, b).ok(), "dual loss loses nothing");
}

// 5. Lossless conversion.
void c5(Outcome& o) {
    testing::TempDir dir;
    transfer::ObjectStore store(dir.path());
    std::mt19937_64 rng(5);
    int images_ok = 0, audio_ok = 0;
    for (int i = 0; i < kCodecSamples; ++i) {
        media::Image img;
        img.width = 1 + static_cast<std::uint32_t>(rng() % 80);
        img.height = 1 + static_cast<std::uint32_t>(rng() % 60);
        img.samples_per_pixel = rng() % 2 ? 3 : 1;
        img.bits_per_sample = rng() % 2 ? 16 : 8;
        img.samples.resize(img.sample_count());
        for (auto& v : img.samples) v = static_cast<std::uint16_t>(rng() & img.max_value());
        const core::ObjectKey key{"acc", "site", "S001", "sess-01", Channel::wide, core::Zone::raw,
                                  static_cast<std::uint64_t>(i)};
        const auto tiff = media::encode_tiff(img);
        store.put(key.path(), tiff);
        const auto conv = pipeline::convert_format(store, key);
        const auto a = media::decode_tiff(tiff), b = media::decode_png(conv.payload);
        images_ok += a == b;

        media::Audio au;
        au.channels = rng() % 4 == 0 ? 2 : 1;
        au.sample_rate = 16000;
        au.samples.resize((1 + rng() % 4000) * au.channels);
        const int mode = static_cast<int>(rng() % 3);
        double phase = 0;
        for (auto& v : au.samples) {
            phase += 0.03;
            const std::int64_t x = mode == 0 ? static_cast<std::int64_t>(rng() % 65536) - 32768
                                   : mode == 1 ? static_cast<std::int64_t>(9000 * std::sin(phase)) + rng() % 200
                                               : (rng() % 2 ? 32767 : -32768);
            v = static_cast<std::int16_t>(std::clamp<std::int64_t>(x, -32768, 32767));
        }
        const core::ObjectKey akey{"acc", "site", "S001", "sess-01", Channel::audio, core::Zone::raw,
                                   static_cast<std::uint64_t>(i)};
        const auto wav = media::encode_wav(au);
        store.put(akey.path(), wav);
        const auto aconv = pipeline::convert_format(store, akey);
        audio_ok += media::decode_wav(wav) == media::decode_flac(aconv.payload);
    }
    o.detail << "tiff->png identical " << images_ok << "/" << kCodecSamples << ", wav->flac identical " << audio_ok
             << "/" << kCodecSamples << ". ";
    o.require(images_ok == kCodecSamples && audio_ok == kCodecSamples, "all round trips exact");
}

// 6. RDB oracle equivalence.
void c6(Outcome& o) {
    testing::TempDir dir;
    rdb::Database db(dir.path());
    const auto schema = testing::synthetic_schema();
    rdb::Dataset ds = db.create_dataset("synthetic", schema);
    const auto rows = testing::synthetic_rows(kOracleRows, 606, 40);
    ds.append_rows(rows);
    const auto snap = ds.publish();
    std::mt19937_64 rng(66);
    int equal = 0;
    for (int i = 0; i < kOraclePredicates; ++i) {
        const auto p = testing::random_predicate(rng);
        equal += ds.scan(snap, {}, p).rows == testing::oracle_scan(schema, rows, p);
    }
    double worst_skip = 1.0;
    for (int s = 1; s <= 40; ++s) {
        const auto r = ds.scan(snap, {"subject_id"},
                               rdb::parse_predicate("subject_id = '" + testing::subject_name(s) + "'"));
        worst_skip = std::min(worst_skip, double(r.stats.groups_skipped) / double(r.stats.groups_total));
    }
    o.detail << equal << "/" << kOraclePredicates << " predicates equal oracle; worst equality skip fraction "
             << worst_skip << " over " << snap.groups.size() << " groups. ";
    o.require(equal == kOraclePredicates, "oracle equality");
    o.require(worst_skip >= kMinSkipFraction, "skip >= 50%");
}

// 7. Snapshot isolation.
void c7(Outcome& o) {
    testing::TempDir dir;
    rdb::Database db(dir.path());
    const auto schema = testing::synthetic_schema();
    const auto rows = testing::synthetic_rows(3000, 7);
    rdb::Dataset ds = db.create_dataset("synthetic", schema, 500);
    ds.append_rows({rows.begin(), rows.begin() + 2000});
    const auto before = ds.publish();
    const auto digest_before = ds.snapshot_digest(before.id);

    const rdb::Snapshot reader = db.open("synthetic").latest();
    ds.append_rows({rows.begin() + 2000, rows.end()});
    const bool staged_invisible = ds.scan(ds.latest(), {"seq"}, rdb::Predicate::all()).rows.size() == 2000;
    ds.publish();
    const auto seen = ds.scan(reader, {"seq"}, rdb::Predicate::all()).rows.size();
    const auto now = ds.scan(ds.latest(), {"seq"}, rdb::Predicate::all()).rows.size();

    bool crash_ok = true;
    for (int stage = 0; stage < 2; ++stage) {
        rdb::Dataset w = db.create_dataset("crash" + std::to_string(stage), schema, 500);
        w.append_rows({rows.begin(), rows.begin() + 1000});
        const auto base = w.publish();
        const auto base_digest = w.snapshot_digest(base.id);
        w.append_rows({rows.begin() + 1000, rows.end()});
        rdb::PublishHooks hooks;
        if (stage == 0) hooks.after_temp_write = [] { throw std::runtime_error("crash"); };
        else hooks.after_rename = [] { throw std::runtime_error("crash"); };
        try {
            w.publish(0, hooks);
            crash_ok = false;
        } catch (const std::runtime_error&) {
        }
        rdb::Dataset r = db.open("crash" + std::to_string(stage));
        crash_ok = crash_ok && r.snapshot_digest(base.id) == base_digest;
        if (stage == 0) crash_ok = crash_ok && r.latest_id() == base.id && r.staged_rows() == 2000;
    }
    o.detail << "old reader saw " << seen << " rows after publish (latest " << now << "). ";
    o.require(staged_invisible, "staged rows invisible");
    o.require(seen == 2000 && now == 3000, "reader isolated");
    o.require(ds.snapshot_digest(before.id) == digest_before, "old snapshot unchanged");
    o.require(crash_ok, "crash leaves prior snapshot digest-identical");
}

// 8. Per-subject count_by on a generated study.
void c8(Outcome& o) {
    testing::TempDir dir;
    const double duration = 4;
    nlohmann::json cfg = {
        {"study_id", "counts"},
        {"seed", 3},
        {"subjects",
         {{"roster", nlohmann::json::array({{{"subject_id", "A01"}, {"sessions", 1}},
                                            {{"subject_id", "A02"}, {"sessions", 3}},
                                            {{"subject_id", "A03"}, {"sessions", 2}}})}}},
        {"session", {{"duration_s", duration}}},
        {"channels", {{"audio", {{"enabled", false}}}, {"depth", {{"enabled", false}}}}}};
    const auto config = study::StudyConfig::from_json(cfg.dump());
    study::simulate(config, dir / "sim");
    transfer::ObjectStore store(dir / "store");
    study::ingest(dir / "sim", store, study::IngestMode::network);
    study::build_datasets(store, dir / "db");
    rdb::Database db(dir / "db");
    const rdb::Dataset cat = db.open("catalog");
    const auto t = cat.count_by(cat.latest(), "subject_id",
                                {rdb::parse_predicate("channel = 'vitals'"), rdb::parse_predicate("channel = 'wide'")});
    const std::map<std::string, int> sessions{{"A01", 1}, {"A02", 3}, {"A03", 2}};
    bool ok = t.rows.size() == sessions.size();
    for (const auto& [v, counts] : t.rows) {
        const auto& s = std::get<std::string>(v);
        const auto n = static_cast<std::uint64_t>(sessions.at(s));
        o.detail << s << "=(" << counts[0] << "," << counts[1] << ") ";
        ok = ok && counts[0] == n * static_cast<std::uint64_t>(duration * 2) &&
             counts[1] == n * static_cast<std::uint64_t>(duration * 25);
    }
    o.require(ok, "planted counts");
}

// 9. Streaming properties.
void c9(Outcome& o) {
    testing::TempDir dir;
    rdb::Database db(dir / "db");
    testing::build_frames(db, "frames", 3, 60, 40);
    auto drain = [&](const client::StreamSpec& spec, client::StreamStats* stats = nullptr) {
        auto s = client::open_stream(db, spec);
        std::vector<core::Bytes> out;
        while (auto u = s->next()) out.push_back(client::serialize_unit(*u));
        if (stats) *stats = s->stats();
        return out;
    };
    using Bag = std::multiset<core::Bytes>;
    client::StreamSpec spec;
    spec.dataset = "frames";
    spec.transforms = {{"crop", {{"x", 8}, {"y", 4}, {"w", 40}, {"h", 24}}}, {"normalize", {}}};
    const auto plain = drain(spec);
    spec.shuffle = client::ShuffleSpec{77, 50};
    const auto a = drain(spec), b = drain(spec);
    o.require(a == b, "shuffle deterministic");
    o.require(Bag(a.begin(), a.end()) == Bag(plain.begin(), plain.end()) && a != plain, "shuffle is a permutation");

    client::StreamSpec ng;
    ng.dataset = "frames";
    ng.columns = {"seq"};
    ng.where = "seq < 25 or subject_id = 'S002'";
    ng.ngram = client::NGramSpec{5, "subject_id", "ts", std::nullopt};
    const auto windows = drain(ng);
    const std::size_t expected = (25 - 5 + 1) * 2 + (60 - 5 + 1);
    o.require(windows.size() == expected, "ngram count formula");

    client::StreamSpec cached = spec;
    cached.shuffle.reset();
    cached.cache = client::CacheSpec{dir / "cache", true};
    client::StreamStats s1, s2;
    const auto p1 = drain(cached, &s1);
    const auto p2 = drain(cached, &s2);
    o.require(s2.from_cache && s2.transform_invocations == 0 && p1 == p2 && s1.transform_invocations > 0,
              "cache second pass");

    client::StreamSpec pf = spec;
    pf.prefetch_workers = 1;
    const auto one = drain(pf);
    pf.prefetch_workers = 4;
    const auto four = drain(pf);
    o.require(Bag(one.begin(), one.end()) == Bag(four.begin(), four.end()), "prefetch multiset");
    o.detail << "units=" << plain.size() << " windows=" << windows.size() << "/" << expected
             << " cached invocations=" << s2.transform_invocations << ". ";
}

// 10. Cost ratio.
void c10(Outcome& o) {
    testing::TempDir dir;
    auto run = [&](bool accelerated, const std::string& name) {
        transfer::ObjectStore store(dir / name);
        device::SessionSpec spec;
        spec.device.channels = {device::default_channel(Channel::wide), device::default_channel(Channel::ir),
                                device::default_channel(Channel::audio)};
        const auto s = device::run_session(spec, 8.0, {}, 10);
        transfer::upload_network(s.disk, store, 1e8);
        pipeline::PipelineConfig cfg;
        cfg.threads = 4;
        cfg.accelerated = accelerated;
        pipeline::Pipeline p(store, pipeline::ExtractorRegistry::builtin(), cfg);
        p.enqueue_existing();
        return p.run_until_drained();
    };
    const auto cpu = run(false, "cpu"), acc = run(true, "acc");
    const double ratio = cpu.busy_s / acc.busy_s;
    o.detail << "busy cpu " << cpu.busy_s << " s vs accelerated " << acc.busy_s << " s, ratio " << ratio << ". ";
    o.require(cpu.completed == acc.completed && cpu.completed > 0, "same workload");
    o.require(ratio >= kMinCostRatio && ratio <= kMaxCostRatio, "ratio in [10, 60]");
}

// 11. End-to-end determinism.
void c11(Outcome& o) {
    testing::TempDir dir;
    nlohmann::json cfg = {{"study_id", "e2e"}, {"seed", 2021}, {"subjects", {{"count", 5}}},
                          {"session", {{"duration_s", 60}}}};
    const auto config = study::StudyConfig::from_json(cfg.dump());
    std::vector<study::RunResult> runs;
    std::vector<double> walls;
    for (int i = 0; i < 2; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        runs.push_back(study::run_study(config, dir / ("run" + std::to_string(i))));
        walls.push_back(seconds_since(t0));
    }
    const auto& r = runs[0].report;
    o.detail << "images=" << r.images << " days=" << r.study_days << " raw bytes=" << r.storage_bytes
             << "; runs took " << walls[0] << " s and " << walls[1] << " s. ";
    o.require(runs[0].report == runs[1].report, "identical report");
    o.require(runs[0].digests == runs[1].digests && runs[0].digests.size() == study::kDatasets.size(),
              "identical dataset digests");
    o.require(r.images == 5 * (1500 + 1500 + 1500 + 480), "image count arithmetic");
    o.require(!runs[0].ingest.data_loss(), "no loss");
    o.require(walls[0] < kStudyBudgetS && walls[1] < kStudyBudgetS, "under 2 minutes");
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"C1 device rate reproduction", c1},  {"C2 frame-rate fidelity", c2},
        {"C3 zero loss under faults", c3},    {"C4 courier risk model", c4},
        {"C5 lossless conversion", c5},       {"C6 rdb oracle equivalence", c6},
        {"C7 snapshot isolation", c7},        {"C8 count_by query", c8},
        {"C9 streaming properties", c9},      {"C10 cost ratio", c10},
        {"C11 end-to-end determinism", c11}};
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            fn(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "[exception: " << e.what() << "]";
        }
        failed += !o.pass;
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
