#include <random>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/device/synthetic.hpp"
#include "avs/pipeline/pipeline.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "temp_dir.hpp"

using namespace avs;
using namespace avs::pipeline;
using core::Channel;
using device::default_channel;

namespace {

std::map<std::string, core::Digest> raw_digests(const transfer::ObjectStore& s) {
    std::map<std::string, core::Digest> out;
    for (const auto& k : s.list_zone(core::Zone::raw)) out[k.path()] = core::digest(s.get(k.path()));
    return out;
}

std::map<std::string, std::string> feature_files(const transfer::ObjectStore& s) {
    std::map<std::string, std::string> out;
    for (const auto& p : s.list()) {
        if (p.find("/features/") == std::string::npos) continue;
        const core::Bytes b = s.get(p);
        out[p] = std::string(b.begin(), b.end());
    }
    return out;
}

PipelineConfig fast_config() {
    PipelineConfig cfg;
    cfg.threads = 4;
    return cfg;
}

}  // namespace

TEST_CASE("queue: visibility timeout, redelivery, dead letters, dedup") {
    DurableQueue q("q", 30, 3);
    CHECK(q.send("a", "body-a"));
    CHECK_FALSE(q.send("a", "other"));
    CHECK(q.depth() == 1);
    auto m1 = q.receive(0);
    REQUIRE(m1);
    CHECK(m1->delivery_count == 1);
    CHECK_FALSE(q.receive(10));
    auto m2 = q.receive(30);
    REQUIRE(m2);
    CHECK(m2->delivery_count == 2);
    CHECK_FALSE(q.remove(m1->receipt));
    CHECK(q.fail(m2->receipt, "boom"));
    auto m3 = q.receive(60);
    REQUIRE(m3);
    CHECK(q.fail(m3->receipt, "boom again"));
    CHECK_FALSE(q.receive(89));
    CHECK_FALSE(q.receive(90));
    CHECK(q.empty());
    REQUIRE(q.dead_letters().size() == 1);
    CHECK(q.dead_letters()[0].reason == "boom again");
    CHECK(q.dead_letters()[0].delivery_count == 3);
    CHECK(q.redeliveries() == 2);
    CHECK(q.replay_dead_letters(100) == 1);
    auto m4 = q.receive(100);
    REQUIRE(m4);
    CHECK(q.remove(m4->receipt));
    CHECK(q.empty());
}

TEST_CASE("object-created events enqueue each raw key once") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "store");
    Pipeline p(store, ExtractorRegistry::builtin(), fast_config());
    p.attach();
    testing::populate(store, {default_channel(Channel::audio)}, 3.0, 1);
    CHECK(p.entry_queue().depth() == 3);
    const std::string k = "study/site/S001/sess-01/audio/raw/000000";
    CHECK_FALSE(p.on_object_created(k));
    CHECK(p.entry_queue().depth() == 3);
    CHECK_THROWS_AS(p.on_object_created("study/site/S001/sess-01/audio/raw/000099"), ValidationError);
    CHECK_THROWS_AS(p.on_object_created("study/site/S001/sess-01/audio/converted/000000"), ValidationError);
}

TEST_CASE("conversion is lossless and byte-stable") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "store");
    testing::populate(store, {default_channel(Channel::wide), default_channel(Channel::depth),
                              default_channel(Channel::audio), device::vitals_channel(2.0)},
                      1.0, 3);
    for (const auto& k : store.list_zone(core::Zone::raw)) {
        const core::DataItem conv = convert_format(store, k);
        const core::Bytes raw = store.get(k.path());
        switch (core::modality_of(k.channel)) {
            case core::Modality::image:
                CHECK(conv.media_format == core::MediaFormat::png);
                CHECK(media::decode_png(conv.payload).samples == media::decode_tiff(raw).samples);
                break;
            case core::Modality::audio:
                CHECK(conv.media_format == core::MediaFormat::flac);
                CHECK(media::decode_flac(conv.payload).samples == media::decode_wav(raw).samples);
                CHECK(conv.payload.size() < raw.size());
                break;
            case core::Modality::vitals: CHECK(conv.payload == raw); break;
        }
        CHECK(convert_format(store, k).payload == conv.payload);
    }
    core::ObjectKey bad{"study", "site", "S001", "sess-01", Channel::wide, core::Zone::raw, 999};
    core::Bytes truncated = store.get("study/site/S001/sess-01/wide/raw/000000");
    truncated.resize(truncated.size() / 2);
    store.put(bad.path(), truncated);
    CHECK_THROWS_AS(convert_format(store, bad), CodecError);
    CHECK_FALSE(store.exists(bad.with_zone(core::Zone::converted).path()));
}

TEST_CASE("metadata templates hold one empty slot per registered extractor") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "store");
    testing::populate(store, {default_channel(Channel::ir)}, 1.0, 3);
    const core::ObjectKey k = core::parse_key("study/site/S001/sess-01/ir/raw/000002");
    convert_format(store, k);

    ExtractorRegistry five;
    for (int i = 0; i < 5; ++i)
        five.add({"f" + std::to_string(i), core::Modality::image, 100, 10,
                  [](const ExtractorInput&) -> FeatureValue { return 1.0; }});
    const FeatureRecord rec = generate_metadata(store, five, k);
    CHECK(rec.features.size() == 5);
    for (const auto& [_, s] : rec.features) CHECK(s.status == FeatureStatus::empty);
    const auto before = store.get(feature_path(k, 1));
    CHECK(generate_metadata(store, five, k) == rec);
    CHECK(store.get(feature_path(k, 1)) == before);

    ExtractorRegistry none;
    none.set_schema_version(2);
    const FeatureRecord empty = generate_metadata(store, none, k);
    CHECK(empty.features.empty());
    CHECK(empty.complete());
    CHECK(FeatureRecord::from_json(empty.to_json()) == empty);
}

TEST_CASE("feature slots move only from empty") {
    FeatureRecord r = FeatureRecord::make_template({}, 1, {"a"});
    r.fill("a", {FeatureStatus::computed, 2.0, 1, ""});
    CHECK_THROWS_AS(r.fill("a", {FeatureStatus::failed, {}, 1, "x"}), StateError);
    CHECK_THROWS_AS(r.fill("b", {FeatureStatus::computed, 1.0, 1, ""}), StateError);
}

TEST_CASE("built-in extractors recover planted ground truth") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "store");
    testing::populate(store, {default_channel(Channel::wide), default_channel(Channel::audio)}, 2.0, 9);
    const auto reg = ExtractorRegistry::builtin();
    for (const auto& k : store.list_zone(core::Zone::raw)) {
        convert_format(store, k);
        generate_metadata(store, reg, k);
        const FeatureRecord rec = extract_features(store, reg, k, false).record;
        CHECK(rec.complete());
        if (k.channel == Channel::wide) {
            const auto cfg = default_channel(Channel::wide);
            const auto truth =
                device::scene_truth(device::channel_seed(9, Channel::wide), cfg.payload_width, cfg.payload_height, k.sequence);
            CHECK(std::get<core::Box>(rec.features.at("person_region").value) == truth.person);
            CHECK(std::get<core::Box>(rec.features.at("bed_region").value) == truth.bed);
            const double motion = std::get<double>(rec.features.at("motion_energy").value);
            if (k.sequence == 0) CHECK(motion == 0.0);
            else CHECK(motion > 0.0);
            const double b = std::get<double>(rec.features.at("mean_brightness").value);
            CHECK(b > 0.0);
            CHECK(b < 1.0);
            CHECK(rec.features.size() == 4);
        } else {
            const auto tone = device::tone_truth(device::channel_seed(9, Channel::audio), k.sequence);
            CHECK(std::abs(std::get<double>(rec.features.at("audio_rms").value) - tone.amplitude / std::sqrt(2.0)) <=
                  1e-6);
            CHECK(rec.features.size() == 1);
        }
        CHECK_FALSE(extract_features(store, reg, k, false).wrote);
    }
}

TEST_CASE("autoscale examples and monotonicity") {
    PoolConfig pool{1, 16, 50};
    CHECK(autoscale(pool, 0) == 1);
    CHECK(autoscale(pool, 1000) == 16);
    CHECK(autoscale(pool, 100) == 2);
    CHECK(autoscale(pool, 101) == 3);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        PoolConfig p{static_cast<std::uint32_t>(1 + rng() % 4), 0, static_cast<std::uint32_t>(1 + rng() % 100)};
        p.max_workers = p.min_workers + static_cast<std::uint32_t>(rng() % 30);
        std::uint32_t prev = 0;
        for (std::size_t d = 0; d < 3000; d += 1 + rng() % 40) {
            const auto w = autoscale(p, d);
            CHECK(w >= prev);
            CHECK(w >= p.min_workers);
            CHECK(w <= p.max_workers);
            prev = w;
        }
    }
    CHECK_THROWS_AS(autoscale(PoolConfig{3, 2, 50}, 1), ValidationError);
}

TEST_CASE("extractor registry from declarative config") {
    const auto r = ExtractorRegistry::from_json(R"({"schema_version": 3, "extractors": [
        {"name": "person_region", "cpu_ms": 600, "accelerated_ms": 20},
        {"name": "audio_rms", "modality": "audio"}]})");
    CHECK(r.schema_version() == 3);
    CHECK(r.all().size() == 2);
    CHECK(r.get("person_region").cpu_ms == 600);
    CHECK(r.get("audio_rms").cpu_ms == 60);
    CHECK_THROWS_AS(ExtractorRegistry::from_json(R"({"extractors": [{"name": "pose"}]})"), ValidationError);
    CHECK_THROWS_AS(ExtractorRegistry::from_json(R"({"extractors": [{"name": "audio_rms", "cpu_ms": 61, "accelerated_ms": 1}]})"),
                    ValidationError);
    CHECK_THROWS_AS(ExtractorRegistry::from_json(R"({"extractors": [{"name": "audio_rms", "modality": "image"}]})"),
                    ValidationError);
}

TEST_CASE("1000 items drain with and without crashes") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "a");
    transfer::ObjectStore store2(dir / "b");
    testing::populate(store, {default_channel(Channel::ir)}, 125.0, 4);
    testing::populate(store2, {default_channel(Channel::ir)}, 125.0, 4);
    const auto raw_before = raw_digests(store);

    Pipeline clean(store, ExtractorRegistry::builtin(), fast_config());
    CHECK(clean.enqueue_existing() == 1000);
    const PipelineReport a = clean.run_until_drained();
    CHECK(a.items_in == 1000);
    CHECK(a.completed == 1000);
    CHECK(a.dead_lettered == 0);
    CHECK(a.redeliveries == 0);
    CHECK(raw_digests(store) == raw_before);

    Pipeline crashy(store2, ExtractorRegistry::builtin(), fast_config());
    crashy.enqueue_existing();
    FaultPlan plan;
    plan.crash_fraction = 0.3;
    plan.seed = 42;
    const PipelineReport b = crashy.run_until_drained(plan);
    CHECK(b.completed == 1000);
    CHECK(b.dead_lettered == 0);
    CHECK(b.redeliveries > 0);
    CHECK(b.crashes == b.redeliveries);
    CHECK(b.crashes > 250);
    CHECK(b.crashes < 350);
    CHECK(b.record_writes == 1000);
    CHECK(feature_files(store2).size() == 1000);
    CHECK(feature_files(store) == feature_files(store2));
}

TEST_CASE("undecodable items dead-letter after max deliveries; conservation holds") {
    testing::TempDir dir;
    transfer::ObjectStore store(dir / "store");
    testing::populate(store, {default_channel(Channel::ir)}, 2.0, 4);
    core::Bytes t = store.get("study/site/S001/sess-01/ir/raw/000000");
    t.resize(100);
    store.put("study/site/S002/sess-01/ir/raw/000000", t);
    Pipeline p(store, ExtractorRegistry::builtin(), fast_config());
    p.enqueue_existing();
    const auto rep = p.run_until_drained();
    CHECK(rep.items_in == 17);
    CHECK(rep.completed == 16);
    REQUIRE(rep.dead_lettered == 1);
    CHECK(rep.dead_letters[0].queue == "entry");
    CHECK(rep.dead_letters[0].deliveries == 5);
    CHECK(rep.dead_letters[0].reason.find("tiff") != std::string::npos);
    CHECK(rep.items_in == rep.completed + rep.dead_lettered);
    CHECK(nlohmann::json::parse(rep.to_json())["dead_lettered"] == 1);
}

TEST_CASE("accelerated pool is 10x-60x cheaper in busy time") {
    testing::TempDir dir;
    transfer::ObjectStore a(dir / "a"), b(dir / "b");
    testing::populate(a, {default_channel(Channel::wide), default_channel(Channel::audio)}, 8.0, 2);
    testing::populate(b, {default_channel(Channel::wide), default_channel(Channel::audio)}, 8.0, 2);
    PipelineConfig cpu = fast_config(), acc = fast_config();
    acc.accelerated = true;
    Pipeline pa(a, ExtractorRegistry::builtin(), cpu), pb(b, ExtractorRegistry::builtin(), acc);
    pa.enqueue_existing();
    pb.enqueue_existing();
    const auto ra = pa.run_until_drained();
    const auto rb = pb.run_until_drained();
    CHECK(ra.completed == rb.completed);
    const double ratio = ra.busy_s / rb.busy_s;
    CHECK(ratio >= 10);
    CHECK(ratio <= 60);
    CHECK(ra.scaling.size() >= 2);
}

TEST_CASE("property: conservation and determinism under random fault plans") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 6; ++trial) {
        testing::TempDir dir;
        transfer::ObjectStore s1(dir / "1"), s2(dir / "2");
        const std::uint64_t seed = rng();
        for (auto* s : {&s1, &s2}) {
            testing::populate(*s, {default_channel(Channel::ir), default_channel(Channel::audio)}, 6.0, seed);
            core::Bytes junk{1, 2, 3};
            s->put("study/site/S009/sess-01/audio/raw/000000", junk);
        }
        FaultPlan plan;
        plan.crash_fraction = static_cast<double>(rng() % 100) / 100.0;
        plan.crashes_per_victim = 1 + static_cast<std::uint32_t>(rng() % 6);
        plan.seed = rng();
        PipelineConfig cfg = fast_config();
        cfg.pool.max_workers = 1 + static_cast<std::uint32_t>(rng() % 8);
        cfg.pool.target_backlog_per_worker = 1 + static_cast<std::uint32_t>(rng() % 20);
        Pipeline p1(s1, ExtractorRegistry::builtin(), cfg), p2(s2, ExtractorRegistry::builtin(), cfg);
        p1.enqueue_existing();
        p2.enqueue_existing();
        const auto r1 = p1.run_until_drained(plan);
        const auto r2 = p2.run_until_drained(plan);
        CHECK(r1.items_in == r1.completed + r1.dead_lettered);
        CHECK(r1.record_writes <= r1.items_in);
        if (plan.crashes_per_victim < cfg.max_deliveries) CHECK(r1.dead_lettered == 1);
        CHECK(r1.to_json() == r2.to_json());
        CHECK(feature_files(s1) == feature_files(s2));
    }
}
