#include <random>

#include "avs/core/crypto.hpp"
#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/core/manifest.hpp"
#include "avs/core/records.hpp"
#include "avs/core/registries.hpp"
#include "avs/core/types.hpp"
#include "doctest.h"
#include "temp_dir.hpp"

using namespace avs;
using namespace avs::core;

TEST_CASE("digest of empty input is the SHA-256 empty-string digest") {
    CHECK(digest(ByteSpan{}).hex() == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(digest(std::string_view("abc")).hex() ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("digest is deterministic and sensitive to single bit flips") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Bytes payload(1 + rng() % 512);
        for (auto& b : payload) b = static_cast<std::uint8_t>(rng());
        const Digest a = digest(payload);
        CHECK(a == digest(payload));
        Bytes flipped = payload;
        flipped[rng() % flipped.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        CHECK(a != digest(flipped));
    }
}

TEST_CASE("incremental hasher matches one-shot digest") {
    Hasher h;
    h.update("hello ").update("world");
    CHECK(h.finish() == digest(std::string_view("hello world")));
}

TEST_CASE("obfuscate examples") {
    CHECK(obfuscate(47, 83.2, 171) == ObfuscatedBody{"40-49", "80-89 kg", "170-179 cm"});
    CHECK(obfuscate(40, 80.0, 170) == ObfuscatedBody{"40-49", "80-89 kg", "170-179 cm"});
    CHECK(obfuscate(9, 5, 60) == ObfuscatedBody{"0-9", "0-9 kg", "60-69 cm"});
}

TEST_CASE("obfuscate matches an enumerated decade table over every age 0..120") {
    // Oracle: walk the decades and assign each integer age to the decade whose
    // [lo, lo+10) interval contains it.
    for (int lo = 0; lo <= 120; lo += 10) {
        const std::string expected = std::to_string(lo) + "-" + std::to_string(lo + 9);
        for (int age = lo; age < lo + 10 && age <= 120; ++age) {
            CHECK(obfuscate(age, 70, 170).age_range == expected);
            if (age < 120) CHECK(obfuscate(age + 0.99, 70, 170).age_range == expected);
        }
    }
}

TEST_CASE("obfuscation is idempotent at bucket granularity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double age = u(rng) * 119.0, weight = 1 + u(rng) * 390.0, height = 1 + u(rng) * 240.0;
        const auto a = obfuscate(age, weight, height);
        const auto b = obfuscate(std::floor(age / 10) * 10, std::floor(weight / 10) * 10 + 9.5,
                                 std::floor(height / 10) * 10 + 0.001);
        if (std::floor(weight / 10) * 10 > 0) CHECK(a.weight_range == b.weight_range);
        CHECK(a.age_range == b.age_range);
        CHECK(a.height_range == b.height_range);
    }
}

TEST_CASE("obfuscate rejects implausible inputs naming the field") {
    auto field_of = [](auto fn) -> std::string {
        try {
            fn();
        } catch (const ValidationError& e) {
            return e.field();
        }
        return "";
    };
    CHECK(field_of([] { obfuscate(121, 70, 170); }) == "age");
    CHECK(field_of([] { obfuscate(-1, 70, 170); }) == "age");
    CHECK(field_of([] { obfuscate(50, 0, 170); }) == "weight");
    CHECK(field_of([] { obfuscate(50, 401, 170); }) == "weight");
    CHECK(field_of([] { obfuscate(50, 70, 251); }) == "height");
}

TEST_CASE("parse_key examples") {
    const ObjectKey k = parse_key("chronic1/siteA/S005/sess-01/wide/raw/000042");
    CHECK(k.study_id == "chronic1");
    CHECK(k.site_id == "siteA");
    CHECK(k.subject_id == "S005");
    CHECK(k.session_id == "sess-01");
    CHECK(k.channel == Channel::wide);
    CHECK(k.zone == Zone::raw);
    CHECK(k.sequence == 42);
    CHECK(k.path() == "chronic1/siteA/S005/sess-01/wide/raw/000042");

    CHECK_THROWS_WITH_AS(parse_key("chronic1/siteA/S005/sess-01/wide/raw"), doctest::Contains("6 components"),
                         ParseError);
    CHECK_THROWS_WITH_AS(parse_key("chronic1/siteA/S005/sess-01/thermal/raw/000001"), doctest::Contains("channel"),
                         ParseError);
    CHECK_THROWS_WITH_AS(parse_key("chronic1/siteA/S005/sess-01/wide/raw/42"), doctest::Contains("sequence"),
                         ParseError);
    CHECK_THROWS_AS(parse_key("chronic1//S005/sess-01/wide/raw/000001"), ParseError);
    CHECK(parse_key("a/b/c/d/ir/archive/1234567").sequence == 1234567);
    CHECK_THROWS_AS(parse_key("a/b/c/d/ir/archive/0123456"), ParseError);
}

TEST_CASE("parse_key round-trips generated keys") {
    std::mt19937_64 rng(3);
    const std::string alphabet = "abcXYZ019._-";
    auto ident = [&] {
        std::string s;
        do {
            s.clear();
            const int len = 1 + static_cast<int>(rng() % 8);
            for (int i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
        } while (!is_valid_identifier(s));
        return s;
    };
    for (int i = 0; i < 1000; ++i) {
        ObjectKey k{ident(), ident(), ident(), ident(), kAllChannels[rng() % kAllChannels.size()],
                    static_cast<Zone>(rng() % 4), rng() % 50'000'000};
        CHECK(parse_key(k.path()) == k);
        CHECK(parse_key(k.path()).path() == k.path());
    }
}

TEST_CASE("data item checksum tracks payload") {
    ObjectKey key{"s", "x", "S1", "sess", Channel::audio, Zone::raw, 1};
    DataItem item = DataItem::make(key, 10, MediaFormat::wav, Bytes{1, 2, 3});
    CHECK(item.verify());
    item.payload[0] ^= 1;
    CHECK_FALSE(item.verify());
    CHECK_THROWS_AS(DataItem::make(key, 10, MediaFormat::wav, Bytes{}), ValidationError);
}

TEST_CASE("vitals csv round trip and validation") {
    VitalsRecord v{1000, 72, 14, 97.5, 120, 80};
    CHECK(VitalsRecord::from_csv(v.to_csv()) == v);
    VitalsRecord partial{2000, 80.25, 16, std::nullopt, std::nullopt, std::nullopt};
    CHECK(VitalsRecord::from_csv(partial.to_csv()) == partial);
    VitalsRecord bad_bp{1, 70, 12, std::nullopt, 80, 90};
    CHECK_THROWS_AS(bad_bp.validate(), ValidationError);
    VitalsRecord bad_hr{1, 0, 12, std::nullopt, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(bad_hr.validate(), ValidationError);
    CHECK_THROWS_AS(VitalsRecord::from_csv("nope\n1,2,3,,,\n"), ParseError);
}

TEST_CASE("PII namespace names are recognised") {
    CHECK(is_pii_name("patient_name"));
    CHECK(is_pii_name("PII_phone"));
    CHECK(is_pii_name("ssn"));
    CHECK_FALSE(is_pii_name("subject_id"));
    CHECK_FALSE(is_pii_name("age_range"));
}

TEST_CASE("sealed blobs authenticate key, content and associated data") {
    const SecretKey k = derive_key("disk", 1);
    const Bytes msg{10, 20, 30, 40};
    const Bytes sealed = seal(k, msg, "a/b");
    CHECK(sealed.size() == msg.size() + kSealOverhead);
    CHECK(seal(k, msg, "a/b") == sealed);
    CHECK(open_sealed(k, sealed, "a/b") == msg);
    CHECK_THROWS_AS(open_sealed(k, sealed, "a/c"), CodecError);
    CHECK_THROWS_AS(open_sealed(derive_key("disk", 2), sealed, "a/b"), CodecError);
    Bytes tampered = sealed;
    tampered[30] ^= 0x01;
    CHECK_THROWS_AS(open_sealed(k, tampered, "a/b"), CodecError);
}

TEST_CASE("keyring persists as hex") {
    testing::TempDir dir;
    Keyring ring;
    ring.add("k1", derive_key("x", 1));
    ring.add("k2", random_key());
    ring.save(dir / "keyring.json");
    const Keyring loaded = Keyring::load(dir / "keyring.json");
    CHECK(loaded.get("k1") == ring.get("k1"));
    CHECK(loaded.get("k2") == ring.get("k2"));
    CHECK_THROWS_AS(loaded.get("missing"), Error);
}

TEST_CASE("identity and health stores are separate and the identity blobs are opaque") {
    testing::TempDir dir;
    IdentityStore ids(dir / "identity", derive_key("coordinator", 9));
    ids.put("S001", "Jane Example, 1 Main St");
    CHECK(ids.get("S001") == "Jane Example, 1 Main St");
    CHECK(ids.subjects() == std::vector<std::string>{"S001"});
    const Bytes blob = read_file(dir / "identity" / "S001.pii");
    const std::string as_text(blob.begin(), blob.end());
    CHECK(as_text.find("Jane") == std::string::npos);

    HealthStore health(dir / "research" / "subjects.json");
    const auto rec = make_health_record("S001", 47, Gender::female, 83.2, 171, {"COPD"});
    health.save({rec});
    CHECK(health.load() == std::vector<HealthRecord>{rec});
    CHECK(rec.age_range == "40-49");
}

namespace {
SessionManifest sample_manifest() {
    SessionManifest m;
    m.study_id = "st";
    m.site_id = "site";
    m.session_id = "sess-01";
    m.subject_id = "S001";
    m.device_id = "D1";
    m.ward_id = "W2";
    m.disk_id = "D1-disk-1";
    m.start_timestamp = 0;
    m.end_timestamp = 10'000;
    m.privacy_gaps = {{1000, 2000}, {5000, 6000}};
    ObjectKey k{"st", "site", "S001", "sess-01", Channel::ir, Zone::raw, 0};
    for (std::uint64_t s = 0; s < 3; ++s) {
        k.sequence = s;
        m.item_checksums.push_back({k.path(), digest(std::string_view(k.path())), 100 + s,
                                    static_cast<TimestampMs>(s * 125)});
    }
    m.channels[Channel::ir] = ChannelSummary{3, 303, 69000, 0, 2, 40, 30, 1, 16};
    return m;
}
}  // namespace

TEST_CASE("session manifest json round trip and validation") {
    const SessionManifest m = sample_manifest();
    CHECK_NOTHROW(m.validate());
    CHECK(SessionManifest::from_json(m.to_json()) == m);
    CHECK(m.to_json().find("\"checksum\": \"") != std::string::npos);

    SessionManifest overlap = m;
    overlap.privacy_gaps = {{1000, 3000}, {2500, 4000}};
    CHECK_THROWS_AS(overlap.validate(), ValidationError);

    SessionManifest miscount = m;
    miscount.channels[Channel::ir].item_count = 4;
    CHECK_THROWS_AS(miscount.validate(), ValidationError);

    SessionManifest unordered = m;
    std::swap(unordered.item_checksums[0], unordered.item_checksums[1]);
    CHECK_THROWS_AS(unordered.validate(), ValidationError);
}
