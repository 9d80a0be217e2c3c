#include <cmath>
#include <random>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"
#include "doctest.h"

using namespace avs;
using namespace avs::media;

namespace {

Image random_image(std::mt19937_64& rng, std::uint8_t spp, std::uint8_t bits) {
    Image img;
    img.width = 1 + static_cast<std::uint32_t>(rng() % 64);
    img.height = 1 + static_cast<std::uint32_t>(rng() % 48);
    img.samples_per_pixel = spp;
    img.bits_per_sample = bits;
    img.samples.resize(img.sample_count());
    for (auto& s : img.samples) s = static_cast<std::uint16_t>(rng() & (bits == 8 ? 0xFF : 0xFFFF));
    return img;
}

Audio random_audio(std::mt19937_64& rng, std::size_t frames, std::uint16_t channels) {
    Audio a;
    a.sample_rate = 16000;
    a.channels = channels;
    a.samples.resize(frames * channels);
    std::normal_distribution<double> noise(0, 2000);
    double phase = 0;
    for (std::size_t i = 0; i < frames; ++i) {
        phase += 0.05;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const double v = 12000 * std::sin(phase + c) + noise(rng);
            a.samples[i * channels + c] = static_cast<std::int16_t>(std::clamp(v, -32768.0, 32767.0));
        }
    }
    return a;
}

}  // namespace

TEST_CASE("tiff round trip across the minimal profile") {
    std::mt19937_64 rng(1);
    for (std::uint8_t spp : {1, 3})
        for (std::uint8_t bits : {8, 16})
            for (int i = 0; i < 10; ++i) {
                const Image img = random_image(rng, spp, bits);
                const Bytes tiff = encode_tiff(img);
                CHECK(sniff_format(tiff) == core::MediaFormat::tiff);
                CHECK(decode_tiff(tiff) == img);
            }
}

TEST_CASE("truncated tiff is rejected") {
    std::mt19937_64 rng(2);
    const Bytes tiff = encode_tiff(random_image(rng, 3, 8));
    for (std::size_t cut : {std::size_t{4}, std::size_t{40}, tiff.size() - 1}) {
        const Bytes truncated(tiff.begin(), tiff.begin() + static_cast<std::ptrdiff_t>(cut));
        CHECK_THROWS_AS(decode_tiff(truncated), CodecError);
    }
}

TEST_CASE("png round trip preserves pixels exactly") {
    std::mt19937_64 rng(3);
    for (std::uint8_t spp : {1, 3})
        for (std::uint8_t bits : {8, 16})
            for (int i = 0; i < 10; ++i) {
                const Image img = random_image(rng, spp, bits);
                const Bytes png = encode_png(img);
                CHECK(sniff_format(png) == core::MediaFormat::png);
                CHECK(decode_png(png) == img);
                CHECK(encode_png(img) == png);
            }
    CHECK_THROWS_AS(decode_png(core::Bytes{1, 2, 3}), CodecError);
}

TEST_CASE("png decoder reports corrupt streams") {
    std::mt19937_64 rng(4);
    Bytes png = encode_png(random_image(rng, 1, 8));
    png.resize(png.size() / 2);
    CHECK_THROWS_AS(decode_png(png), CodecError);
}

TEST_CASE("wav round trip") {
    std::mt19937_64 rng(5);
    const Audio a = random_audio(rng, 1234, 2);
    const Bytes wav = encode_wav(a);
    CHECK(wav.size() == 44 + a.samples.size() * 2);
    CHECK(sniff_format(wav) == core::MediaFormat::wav);
    CHECK(decode_wav(wav) == a);
    Bytes truncated(wav.begin(), wav.end() - 10);
    CHECK_THROWS_AS(decode_wav(truncated), CodecError);
}

TEST_CASE("flac round trip is sample exact") {
    std::mt19937_64 rng(6);
    for (std::size_t frames : {0, 1, 15, 16, 17, 4095, 4096, 4097, 16000}) {
        for (std::uint16_t ch : {1, 2}) {
            const Audio a = random_audio(rng, frames, ch);
            const Bytes flac = encode_flac(a);
            CHECK(sniff_format(flac) == core::MediaFormat::flac);
            CHECK(decode_flac(flac) == a);
        }
    }
}

TEST_CASE("flac handles extreme signals") {
    Audio a;
    a.samples.resize(5000);
    std::mt19937_64 rng(7);
    for (auto& s : a.samples) s = (rng() & 1) ? 32767 : -32768;  // worst case for prediction
    CHECK(decode_flac(encode_flac(a)) == a);
    std::fill(a.samples.begin(), a.samples.end(), -123);  // constant subframes
    const Bytes constant = encode_flac(a);
    CHECK(constant.size() < 200);
    CHECK(decode_flac(constant) == a);
    for (auto& s : a.samples) s = static_cast<std::int16_t>(rng());  // white noise
    CHECK(decode_flac(encode_flac(a, 1152)) == a);
}

TEST_CASE("flac compresses a smooth signal") {
    Audio a;
    a.samples.resize(16000);
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        a.samples[i] = static_cast<std::int16_t>(std::lround(8000 * std::sin(2 * M_PI * 440 * i / 16000.0)));
    const Bytes flac = encode_flac(a);
    CHECK(flac.size() < encode_wav(a).size() / 2);
}

TEST_CASE("flac detects corruption") {
    std::mt19937_64 rng(8);
    const Audio a = random_audio(rng, 5000, 1);
    Bytes flac = encode_flac(a);
    flac[flac.size() / 2] ^= 0x10;
    CHECK_THROWS_AS(decode_flac(flac), CodecError);
    Bytes truncated = encode_flac(a);
    truncated.resize(truncated.size() - 3);
    CHECK_THROWS_AS(decode_flac(truncated), CodecError);
}
