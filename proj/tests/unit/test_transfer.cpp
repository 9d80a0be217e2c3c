#include <atomic>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/device/session.hpp"
#include "avs/transfer/transfer.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace avs;
using namespace avs::transfer;
using core::Channel;

namespace {

device::SessionResult hundred_items(std::uint64_t seed = 5, const std::string& subject = "S001") {
    device::SessionSpec spec;
    spec.subject_id = subject;
    spec.disk_id = "disk-" + subject;
    spec.device.channels = {device::default_channel(Channel::ir)};
    return device::run_session(spec, 12.5, {}, seed);
}

std::uint64_t raw_bytes(const ObjectStore& s) {
    std::uint64_t n = 0;
    for (const auto& k : s.list_zone(core::Zone::raw)) n += s.size_of(k.path());
    return n;
}

}  // namespace

TEST_CASE("network upload of a 100-item disk") {
    testing::TempDir dir;
    const auto r = hundred_items();
    ObjectStore store(dir / "store");
    const double bw = 1e6;
    const TransferReport rep = upload_network(r.disk, store, bw);
    CHECK(rep.stored == 100);
    CHECK(rep.quarantined == 0);
    CHECK(rep.complete);
    CHECK(rep.bytes_sent == r.manifest.total_bytes());
    CHECK(rep.elapsed_s == doctest::Approx(static_cast<double>(r.manifest.total_bytes()) / bw).epsilon(1e-12));
    CHECK(verify(r.manifest, store).ok());
    CHECK(store.exists(manifest_path(r.manifest)));
    CHECK(nlohmann::json::parse(rep.to_json())["stored"] == 100);
}

TEST_CASE("interrupted upload resumes without resending verified items") {
    testing::TempDir dir;
    const auto r = hundred_items();
    ObjectStore store(dir / "store");
    FailurePlan plan;
    plan.interrupt_after = 50;
    const auto first = upload_network(r.disk, store, 1e6, plan);
    CHECK_FALSE(first.complete);
    CHECK(first.transfers == 50);
    CHECK(store.list_zone(core::Zone::raw).size() == 50);
    const auto second = upload_network(r.disk, store, 1e6);
    CHECK(second.complete);
    CHECK(second.transfers == 50);
    CHECK(second.skipped == 50);
    TransferLog log(default_log_path(store, r.disk.disk_id()));
    CHECK(log.lines() == 100);
    CHECK(verify(r.manifest, store).ok());
    const auto third = upload_network(r.disk, store, 1e6);
    CHECK(third.transfers == 0);
}

TEST_CASE("corruption in flight quarantines instead of dropping") {
    testing::TempDir dir;
    const auto r = hundred_items();
    ObjectStore store(dir / "store");
    const std::string victim = r.manifest.item_checksums[17].key;
    FailurePlan plan;
    plan.corrupt_in_flight = {victim};
    const auto rep = upload_network(r.disk, store, 1e6, plan);
    CHECK(rep.stored == 99);
    CHECK(rep.quarantined == 1);
    CHECK(store.exists(std::string(kQuarantinePrefix) + victim));
    CHECK_FALSE(store.exists(victim));
    const auto v = verify(r.manifest, store);
    CHECK(v.missing == std::vector<std::string>{victim});
    CHECK(raw_bytes(store) == r.manifest.total_bytes() - r.manifest.item_checksums[17].bytes);

    const auto retry = retry_quarantined(r.disk, store, 1e6);
    CHECK(retry.transfers == 1);
    CHECK(retry.stored == 1);
    CHECK(verify(r.manifest, store).ok());
    CHECK(retry_quarantined(r.disk, store, 1e6).transfers == 0);
}

TEST_CASE("ciphertext damaged on the disk is quarantined") {
    testing::TempDir dir;
    auto r = hundred_items();
    const std::string victim = r.manifest.item_checksums[3].key;
    r.disk.corrupt(victim, 5);
    ObjectStore store(dir / "store");
    const auto rep = upload_network(r.disk, store, 1e6);
    CHECK(rep.quarantined == 1);
    CHECK(rep.items[3].reason == "decryption failed");
}

TEST_CASE("upload requires a sealed disk with a manifest") {
    testing::TempDir dir;
    ObjectStore store(dir / "store");
    device::EncryptedDisk open_disk("d", 1000, "d", core::derive_key("d", 1));
    CHECK_THROWS_AS(upload_network(open_disk, store, 1e6), ValidationError);
    open_disk.seal();
    CHECK_THROWS_AS(upload_network(open_disk, store, 1e6), ValidationError);
}

TEST_CASE("raw keys are write-once and the created hook fires once per key") {
    testing::TempDir dir;
    ObjectStore store(dir / "store");
    std::vector<std::string> created;
    store.set_on_created([&](const std::string& k) { created.push_back(k); });
    const std::string key = "st/si/S1/sess-01/wide/raw/000001";
    CHECK(store.put(key, core::Bytes{1, 2, 3}) == PutOutcome::created);
    CHECK(store.put(key, core::Bytes{1, 2, 3}) == PutOutcome::identical);
    CHECK_THROWS_AS(store.put(key, core::Bytes{9}), WriteOnceViolation);
    CHECK(store.get(key) == core::Bytes{1, 2, 3});
    const std::string conv = "st/si/S1/sess-01/wide/converted/000001";
    CHECK(store.put(conv, core::Bytes{1}) == PutOutcome::created);
    CHECK(store.put(conv, core::Bytes{2}) == PutOutcome::replaced);
    CHECK(created == std::vector<std::string>{key, conv});
    CHECK_THROWS_AS(store.put("../escape", core::Bytes{1}), ValidationError);
    CHECK_THROWS_AS(store.get("st/si/S1/sess-01/wide/raw/000002"), IoError);
}

TEST_CASE("property: concurrent re-uploads never change stored raw bytes") {
    testing::TempDir dir;
    ObjectStore store(dir / "store");
    constexpr int kKeys = 40;
    std::atomic<int> violations{0};
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            std::mt19937_64 rng(t);
            for (int i = 0; i < 400; ++i) {
                const int k = static_cast<int>(rng() % kKeys);
                char name[64];
                std::snprintf(name, sizeof name, "st/si/S1/sess-01/ir/raw/%06d", k);
                const core::Bytes data{static_cast<std::uint8_t>(k), static_cast<std::uint8_t>(rng() % 2)};
                try {
                    store.put(name, data);
                } catch (const WriteOnceViolation&) {
                    ++violations;
                }
            }
        });
    }
    threads.clear();
    CHECK(violations > 0);
    std::map<std::string, core::Bytes> first;
    for (const auto& k : store.list_zone(core::Zone::raw)) first[k.path()] = store.get(k.path());
    for (const auto& [k, v] : first) {
        CHECK(v.size() == 2);
        CHECK_THROWS_AS(store.put(k, core::Bytes{v[0], static_cast<std::uint8_t>(1 - v[1])}), WriteOnceViolation);
        CHECK(store.get(k) == v);
    }
}

TEST_CASE("courier capacity: 2 TB fits a 100 TB courier") {
    CourierDevice courier("snow-1");
    CHECK(courier.capacity_bytes() == 100'000'000'000'000ULL);
    device::EncryptedDisk disk("d2tb", 3'000'000'000'000ULL, "d2tb", core::derive_key("d", 1));
    disk.reserve_census(2'000'000'000'000ULL);
    disk.seal();
    CHECK_NOTHROW(load_courier(disk, courier));
    CHECK(courier.loaded_bytes() == 2'000'000'000'000ULL);

    CourierDevice small("snow-small", 500);
    auto r = hundred_items();
    CHECK_THROWS_AS(load_courier(r.disk, small), CapacityError);
    CHECK(small.loaded_bytes() == 0);
    CHECK(small.entries().empty());
}

TEST_CASE("courier arrival ingests like an upload; loss is reported") {
    testing::TempDir dir;
    const auto r = hundred_items();
    SUBCASE("arrived") {
        CourierDevice c("snow-1");
        load_courier(r.disk, c);
        ship_courier(c, CourierState::Arrived);
        ObjectStore store(dir / "store");
        const auto res = ingest_courier(c, store, r.keyring);
        CHECK(res.loss.empty());
        CHECK(res.report.stored == 100);
        CHECK(verify(r.manifest, store).ok());
        CHECK_THROWS_AS(load_courier(r.disk, c), StateError);
    }
    SUBCASE("single courier lost") {
        CourierDevice c("snow-1");
        load_courier(r.disk, c);
        ship_courier(c, CourierState::Lost);
        ObjectStore store(dir / "store");
        const auto res = ingest_courier(c, store, r.keyring);
        CHECK(res.loss.lost_keys.size() == 100);
        CHECK(res.report.stored == 0);
        CHECK(verify(r.manifest, store).missing.size() == 100);
    }
    SUBCASE("dual couriers, one lost") {
        CourierDevice a("snow-a"), b("snow-b");
        load_courier(r.disk, a);
        load_courier(r.disk, b);
        ship_courier(a, CourierState::Lost);
        ship_courier(b, CourierState::Arrived);
        ObjectStore store(dir / "store");
        const auto res = ingest_couriers({&a, &b}, store, r.keyring);
        CHECK(res.loss.empty());
        CHECK(res.report.stored == 100);
        CHECK(verify(r.manifest, store).ok());
    }
    SUBCASE("unshipped courier cannot be ingested") {
        CourierDevice c("snow-1");
        ObjectStore store(dir / "store");
        CHECK_THROWS_AS(ingest_courier(c, store, r.keyring), StateError);
    }
}

TEST_CASE("archive copies only raw objects lacking a cold copy") {
    testing::TempDir dir;
    ObjectStore store(dir / "store");
    ColdStore cold(dir / "cold", 3600);
    auto key = [](int i) {
        return core::ObjectKey{"st", "si", "S1", "sess-01", Channel::ir, core::Zone::raw, static_cast<std::uint64_t>(i)};
    };
    for (int i = 0; i < 10; ++i) store.put(key(i).path(), core::Bytes{static_cast<std::uint8_t>(i)});
    store.put(key(0).with_zone(core::Zone::converted).path(), core::Bytes{7});
    CHECK(archive(store, cold) == 10);
    CHECK(archive(store, cold) == 0);
    for (int i = 10; i < 13; ++i) store.put(key(i).path(), core::Bytes{static_cast<std::uint8_t>(i)});
    CHECK(archive(store, cold) == 3);
    CHECK(cold.list().size() == 13);
    double elapsed = 0;
    CHECK(cold.retrieve(key(4).with_zone(core::Zone::archive).path(), elapsed) == core::Bytes{4});
    CHECK(elapsed == 3600);
    CHECK_THROWS_AS(cold.put(key(4).with_zone(core::Zone::archive).path(), core::Bytes{5}), WriteOnceViolation);
}

TEST_CASE("verify reports missing, mismatched and extra keys") {
    testing::TempDir dir;
    const auto r = hundred_items();
    ObjectStore store(dir / "store");
    upload_network(r.disk, store, 1e6);
    const std::string a = r.manifest.item_checksums[0].key;
    const std::string b = r.manifest.item_checksums[1].key;
    store.remove(a);
    core::Bytes flipped = store.get(b);
    flipped[10] ^= 0x80;
    core::write_file_atomic(store.root() / b, flipped);
    store.put("study/site/S001/sess-01/ir/raw/999999", core::Bytes{1});
    const auto v = verify(r.manifest, store);
    CHECK(v.missing == std::vector<std::string>{a});
    CHECK(v.mismatched == std::vector<std::string>{b});
    CHECK(v.extra == std::vector<std::string>{"study/site/S001/sess-01/ir/raw/999999"});
    CHECK(v.checked == 100);
}

TEST_CASE("property: network or dual-courier recovery leaves nothing missing") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 12; ++trial) {
        testing::TempDir dir;
        const auto r = hundred_items(trial);
        ObjectStore store(dir / "store");
        if (trial % 2 == 0) {
            FailurePlan plan;
            plan.interrupt_after = rng() % 100;
            upload_network(r.disk, store, 1e6, plan);
            upload_network(r.disk, store, 1e6);
        } else {
            CourierDevice a("a"), b("b");
            load_courier(r.disk, a);
            load_courier(r.disk, b);
            const bool lose_a = rng() % 2;
            ship_courier(a, lose_a ? CourierState::Lost : CourierState::Arrived);
            ship_courier(b, lose_a ? CourierState::Arrived : CourierState::Lost);
            CHECK(ingest_couriers({&a, &b}, store, r.keyring).loss.empty());
        }
        const auto v = verify(r.manifest, store);
        CHECK(v.missing.empty());
        CHECK(v.ok());
        CHECK(raw_bytes(store) == r.manifest.total_bytes());
    }
}
