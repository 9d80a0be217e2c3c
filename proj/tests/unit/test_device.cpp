#include <random>

#include "avs/core/errors.hpp"
#include "avs/device/device.hpp"
#include "avs/device/session.hpp"
#include "avs/device/synthetic.hpp"
#include "avs/media/codecs.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace avs;
using namespace avs::device;
using core::Channel;

namespace {

EncryptedDisk make_disk(const std::string& id = "disk-1", std::uint64_t capacity = 1ULL << 40) {
    return EncryptedDisk(id, capacity, id, disk_key(id, 1));
}

DeviceConfig single(Channel c, CaptureMode mode = CaptureMode::materialize) {
    DeviceConfig cfg;
    cfg.channels = {default_channel(c)};
    cfg.mode = mode;
    return cfg;
}

Device collecting(DeviceConfig cfg, EncryptedDisk disk = make_disk()) {
    Device d(std::move(cfg), std::move(disk));
    d.configure("S005", "W2", "D1");
    d.press_power();
    return d;
}

}  // namespace

TEST_CASE("configure is only legal from Off") {
    Device d(single(Channel::ir), make_disk());
    CHECK(d.state() == DeviceState::Off);
    d.configure("S005", "W2", "D1");
    CHECK(d.state() == DeviceState::Configured);
    CHECK_THROWS_AS(d.configure("S005", "W2", "D1"), StateError);
    d.press_power();
    CHECK(d.state() == DeviceState::Collecting);
    CHECK_THROWS_AS(d.configure("S005", "W2", "D1"), StateError);
    CHECK_THROWS_AS(Device(single(Channel::ir), make_disk()).press_privacy(), StateError);
    CHECK_THROWS_AS(Device(single(Channel::ir), make_disk()).configure("bad/id", "W", "D"), ValidationError);
}

TEST_CASE("ten seconds of collection yields 80 ir and 250 wide items") {
    DeviceConfig cfg;
    cfg.channels = {default_channel(Channel::wide), default_channel(Channel::ir)};
    cfg.mode = CaptureMode::census;
    Device d = collecting(cfg);
    d.tick(10.0);
    CHECK(d.emitted(Channel::ir) == 80);
    CHECK(d.emitted(Channel::wide) == 250);
}

TEST_CASE("fractional accumulator: three 0.1 s ticks at 8 fps give 2 items") {
    Device d = collecting(single(Channel::ir));
    std::size_t n = 0;
    for (int i = 0; i < 3; ++i) n += d.tick(0.1).size();
    CHECK(n == 2);
    CHECK(d.emitted(Channel::ir) == 2);
}

TEST_CASE("long runs of odd tick sizes do not drift") {
    Device d = collecting(single(Channel::ir, CaptureMode::census));
    for (int i = 0; i < 10'000; ++i) d.tick(0.037);
    CHECK(d.emitted(Channel::ir) == 2960);
}

TEST_CASE("materialized items are encrypted on disk and decode to planted frames") {
    Device d = collecting(single(Channel::depth));
    const auto items = d.tick(0.2);
    REQUIRE(items.size() == 5);
    for (const auto& it : items) {
        CHECK(it.verify());
        const core::Bytes& ct = d.disk().ciphertext(it.key.path());
        CHECK(ct.size() == it.payload.size() + core::kSealOverhead);
        CHECK(std::search(ct.begin(), ct.end(), it.payload.begin() + 8, it.payload.begin() + 40) == ct.end());
        CHECK(d.disk().read(it.key.path()) == it.payload);
    }
    const media::Image img = media::decode_tiff(items[3].payload);
    const SceneTruth t = scene_truth(channel_seed(0, Channel::depth), img.width, img.height, 3);
    CHECK(img.at(t.person.x, t.person.y, 0) == 60000);
    CHECK(img.at(t.bed.x, t.bed.y, 0) == 50000);
    CHECK(items[3].timestamp == 120);
}

TEST_CASE("person rectangle stays strictly inside the bed and moves") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (std::uint32_t w : {16u, 40u, 64u}) {
            const std::uint32_t h = w * 3 / 4;
            core::Box prev{};
            for (std::uint64_t seq = 0; seq < 200; ++seq) {
                const SceneTruth t = scene_truth(seed, w, h, seq);
                CHECK(t.bed.x >= 0);
                CHECK(t.bed.x + t.bed.w <= static_cast<int>(w));
                CHECK(t.bed.y + t.bed.h <= static_cast<int>(h));
                CHECK(t.person.x > t.bed.x);
                CHECK(t.person.y > t.bed.y);
                CHECK(t.person.x + t.person.w < t.bed.x + t.bed.w);
                CHECK(t.person.y + t.person.h < t.bed.y + t.bed.h);
                if (seq > 0) CHECK(t.person != prev);
                prev = t.person;
            }
        }
    }
}

TEST_CASE("finalize writes a manifest listing every stored item") {
    Device d = collecting(single(Channel::ir));
    d.tick(12.5);
    d.press_power();
    CHECK(d.state() == DeviceState::Off);
    REQUIRE(d.last_manifest());
    const auto& m = *d.last_manifest();
    CHECK(m.item_checksums.size() == 100);
    CHECK(m.channels.at(Channel::ir).item_count == 100);
    CHECK(m.subject_id == "S005");
    CHECK(m.ward_id == "W2");
    CHECK(m.device_id == "D1");
    CHECK(d.disk().manifests().size() == 1);
    for (const auto& e : m.item_checksums) CHECK(core::digest(d.disk().read(e.key)) == e.checksum);
}

TEST_CASE("finalize detects an injected corrupt ciphertext") {
    Device d = collecting(single(Channel::ir));
    d.tick(12.5);
    const std::string victim = "study/site/S005/sess-01/ir/raw/000042";
    d.disk().corrupt(victim, 17);
    try {
        d.press_power();
        FAIL("finalize should have failed");
    } catch (const FinalizeError& e) {
        CHECK(e.bad_keys() == std::vector<std::string>{victim});
    }
    CHECK(d.state() == DeviceState::Finalizing);
    CHECK_FALSE(d.last_manifest());
    d.disk().corrupt(victim, 17);
    d.press_power();
    CHECK(d.state() == DeviceState::Off);
}

TEST_CASE("privacy toggle 5 s apart yields an exact 5 s gap and no items inside it") {
    Device d = collecting(single(Channel::wide));
    d.tick(2.0);
    d.press_privacy();
    CHECK(d.state() == DeviceState::PrivacyPaused);
    CHECK(d.tick(5.0).empty());
    d.press_privacy();
    d.tick(3.0);
    d.press_power();
    const auto& m = *d.last_manifest();
    REQUIRE(m.privacy_gaps.size() == 1);
    CHECK(m.privacy_gaps[0].start == 2000);
    CHECK(m.privacy_gaps[0].duration() == 5000);
    CHECK(m.channels.at(Channel::wide).item_count == 125);
    for (const auto& e : m.item_checksums) CHECK_FALSE(m.privacy_gaps[0].contains(e.timestamp));
}

TEST_CASE("vitals keep recording through privacy pauses") {
    DeviceConfig cfg;
    cfg.channels = {default_channel(Channel::ir), vitals_channel(2.0)};
    Device d = collecting(cfg);
    d.press_privacy();
    d.tick(10.0);
    CHECK(d.emitted(Channel::ir) == 0);
    CHECK(d.emitted(Channel::vitals) == 20);
}

TEST_CASE("disk full leaves the device untouched") {
    Device d = collecting(single(Channel::ir), make_disk("small", 40'000));
    d.tick(1.0);
    const auto before = d.emitted(Channel::ir);
    const auto now = d.now();
    const auto used = d.disk().used_bytes();
    CHECK_THROWS_AS(d.tick(10.0), DiskFullError);
    CHECK(d.emitted(Channel::ir) == before);
    CHECK(d.now() == now);
    CHECK(d.disk().used_bytes() == used);
    CHECK(d.state() == DeviceState::Collecting);
}

TEST_CASE("disk swap is guarded and seals the removed disk") {
    Device d(single(Channel::ir), make_disk("a"));
    d.configure("S1", "W1", "D1");
    EncryptedDisk removed = d.swap_disk(make_disk("b"));
    CHECK(removed.sealed());
    CHECK(d.disk().disk_id() == "b");
    CHECK_THROWS_AS(removed.write("x", core::Bytes{1}), SealedError);
    d.press_power();
    CHECK_THROWS_AS(d.swap_disk(make_disk("c")), StateError);
    CHECK_THROWS_AS(d.swap_battery(BatteryModel{}), StateError);
}

TEST_CASE("run_session 60 s produces the rate x duration counts") {
    SessionSpec spec;
    const SessionResult r = run_session(spec, 60.0, {}, 7);
    const auto& ch = r.manifest.channels;
    CHECK(ch.at(Channel::ir).item_count == 480);
    CHECK(ch.at(Channel::wide).item_count == 1500);
    CHECK(ch.at(Channel::depth).item_count == 1500);
    CHECK(ch.at(Channel::narrow).item_count == 1500);
    CHECK(ch.at(Channel::audio).item_count == 60);
    CHECK(r.disk.sealed());
    CHECK(r.disk.item_count() == 480 + 3 * 1500 + 60);
}

TEST_CASE("run_session is deterministic in its seed") {
    SessionSpec spec;
    spec.tick_s = 0.25;
    const std::vector<ButtonEvent> events{{3.0, ButtonEvent::Kind::privacy}, {4.5, ButtonEvent::Kind::privacy}};
    const auto a = run_session(spec, 8.0, events, 11);
    const auto b = run_session(spec, 8.0, events, 11);
    const auto c = run_session(spec, 8.0, events, 12);
    CHECK(a.manifest == b.manifest);
    CHECK(a.disk.content_digest() == b.disk.content_digest());
    CHECK(a.disk.content_digest() != c.disk.content_digest());
}

TEST_CASE("disk tree round trips through save and load") {
    testing::TempDir dir;
    SessionSpec spec;
    spec.device.channels = {default_channel(Channel::audio), default_channel(Channel::ir)};
    const auto r = run_session(spec, 5.0, {}, 3);
    r.disk.save(dir / "disk");
    r.keyring.save(dir / "keyring.json");
    EncryptedDisk loaded = EncryptedDisk::load(dir / "disk");
    CHECK(loaded.sealed());
    CHECK(loaded.content_digest() == r.disk.content_digest());
    CHECK(loaded.manifests() == r.disk.manifests());
    CHECK_THROWS_AS(loaded.read(r.manifest.item_checksums[0].key), Error);
    loaded.attach_key(core::Keyring::load(dir / "keyring.json"));
    for (const auto& e : r.manifest.item_checksums) CHECK(core::digest(loaded.read(e.key)) == e.checksum);
}

TEST_CASE("24 h session ends exactly at the battery boundary") {
    SessionSpec spec;
    spec.device.mode = CaptureMode::census;
    spec.tick_s = 60.0;
    const auto r = run_session(spec, 86'400.0, {}, 1);
    CHECK(r.manifest.channels.at(Channel::ir).item_count == 86'400ULL * 8);
    CHECK(r.manifest.census);

    Device d(spec.device, make_disk(), BatteryModel(1.0));
    d.configure("S1", "W1", "D1");
    d.press_power();
    d.tick(3600.0);
    CHECK(d.battery().remaining_ms() == 0);
    CHECK_THROWS_AS(d.tick(1.0), BatteryExhaustedError);
    CHECK(d.state() == DeviceState::Finalizing);
    d.swap_battery(BatteryModel{});
    d.press_power();
    CHECK(d.state() == DeviceState::Off);
    CHECK(d.last_manifest()->end_timestamp == 3'600'000);
}

TEST_CASE("battery exhaustion part way through a tick keeps the collected prefix") {
    Device d(single(Channel::ir), make_disk(), BatteryModel(1.0 / 3600.0));
    d.configure("S1", "W1", "D1");
    d.press_power();
    CHECK_THROWS_AS(d.tick(2.5), BatteryExhaustedError);
    CHECK(d.state() == DeviceState::Finalizing);
    CHECK(d.emitted(Channel::ir) == 8);
    d.press_power();
    CHECK(d.last_manifest()->item_checksums.size() == 8);
}

TEST_CASE("one census hour models about 7 GiB") {
    SessionSpec spec;
    spec.device.mode = CaptureMode::census;
    spec.tick_s = 10.0;
    const auto r = run_session(spec, 3600.0, {}, 1);
    const double gib = static_cast<double>(r.manifest.total_modeled_bytes()) / (1ULL << 30);
    CHECK(gib == doctest::Approx(7.0).epsilon(0.10));
}

TEST_CASE("property: counts match uncovered time and timestamps avoid gaps") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        SessionSpec spec;
        spec.device.channels = {default_channel(Channel::wide), default_channel(Channel::ir),
                                default_channel(Channel::audio)};
        spec.tick_s = 0.01 * static_cast<double>(1 + rng() % 150);
        const double duration = 20.0 + static_cast<double>(rng() % 40);
        std::vector<ButtonEvent> events;
        double t = 0;
        while (true) {
            t += 0.001 * static_cast<double>(1 + rng() % 6000);
            if (t >= duration) break;
            events.push_back({std::round(t * 1000) / 1000, ButtonEvent::Kind::privacy});
        }
        const auto r = run_session(spec, duration, events, trial);
        std::int64_t gap_ms = 0;
        for (const auto& g : r.manifest.privacy_gaps) gap_ms += g.duration();
        const double open_s = duration - static_cast<double>(gap_ms) / 1000.0;
        for (const auto& c : spec.device.channels) {
            const double expected = std::floor(open_s * c.frame_rate);
            const double got = static_cast<double>(r.manifest.channels.at(c.channel).item_count);
            CHECK(std::abs(got - expected) <= 1.0);
        }
        for (const auto& e : r.manifest.item_checksums)
            for (const auto& g : r.manifest.privacy_gaps) CHECK_FALSE(g.contains(e.timestamp));
        CHECK_NOTHROW(r.manifest.validate());
    }
}

TEST_CASE("property: random button sequences never reach an illegal state silently") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        Device d(single(Channel::ir, CaptureMode::census), make_disk(), BatteryModel(0.01));
        DeviceState model = DeviceState::Off;
        for (int step = 0; step < 60; ++step) {
            const int op = static_cast<int>(rng() % 6);
            const DeviceState before = d.state();
            REQUIRE(before == model);
            bool legal = false;
            DeviceState expect = before;
            try {
                switch (op) {
                    case 0:
                        legal = before == DeviceState::Off;
                        expect = DeviceState::Configured;
                        d.configure("S1", "W1", "D1");
                        break;
                    case 1:
                        legal = before != DeviceState::Off;
                        expect = before == DeviceState::Configured ? DeviceState::Collecting : DeviceState::Off;
                        d.press_power();
                        break;
                    case 2:
                        legal = before == DeviceState::Collecting || before == DeviceState::PrivacyPaused;
                        expect = before == DeviceState::Collecting ? DeviceState::PrivacyPaused
                                                                   : DeviceState::Collecting;
                        d.press_privacy();
                        break;
                    case 3:
                        legal = before == DeviceState::Collecting || before == DeviceState::PrivacyPaused;
                        expect = before;
                        d.tick(0.5 + static_cast<double>(rng() % 20));
                        break;
                    case 4:
                        legal = before == DeviceState::Off || before == DeviceState::Configured;
                        d.swap_disk(make_disk("d" + std::to_string(step)));
                        break;
                    default:
                        legal = before == DeviceState::Off || before == DeviceState::Configured ||
                                before == DeviceState::Finalizing;
                        d.swap_battery(BatteryModel(0.01));
                        break;
                }
                CHECK(legal);
                CHECK(d.state() == expect);
            } catch (const StateError&) {
                CHECK_FALSE(legal);
                CHECK(d.state() == before);
            } catch (const BatteryExhaustedError&) {
                CHECK(op == 3);
                CHECK(d.state() == DeviceState::Finalizing);
            }
            model = d.state();
        }
    }
}
