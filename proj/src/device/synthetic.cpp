#include "avs/device/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "avs/core/errors.hpp"

namespace avs::device {
namespace {

double unit(std::uint64_t x) { return static_cast<double>(mix64(x) >> 11) * 0x1.0p-53; }

class SplitMix {
public:
    explicit SplitMix(std::uint64_t s) : state_(s) {}
    std::uint64_t next() { return mix64(state_ += 0x9e3779b97f4a7c15ULL); }

private:
    std::uint64_t state_;
};

void fill_box(media::Image& img, const core::Box& b, std::uint16_t v) {
    for (std::int32_t y = b.y; y < b.y + b.h; ++y)
        for (std::int32_t x = b.x; x < b.x + b.w; ++x)
            for (std::uint32_t c = 0; c < img.samples_per_pixel; ++c)
                img.samples[(static_cast<std::size_t>(y) * img.width + x) * img.samples_per_pixel + c] = v;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

Markers markers_for(std::uint8_t bits) {
    if (bits == 8) return {128, 180, 240};
    if (bits == 16) return {32768, 50000, 60000};
    throw ValidationError("bits_per_sample", "must be 8 or 16");
}

std::uint64_t channel_seed(std::uint64_t session_seed, core::Channel c) {
    return mix64(session_seed * 0x100000001b3ULL + static_cast<std::uint64_t>(c) + 1);
}

SceneTruth scene_truth(std::uint64_t seed, std::uint32_t width, std::uint32_t height, std::uint64_t seq) {
    if (width < 16 || height < 12) throw ValidationError("payload_width", "image payloads must be at least 16x12");
    const auto w = static_cast<std::int32_t>(width), h = static_cast<std::int32_t>(height);
    const std::uint64_t r = mix64(seed ^ 0x6265640000000000ULL);
    SceneTruth t;
    t.bed.x = w / 8 + static_cast<std::int32_t>(r % std::max(1, w / 16));
    t.bed.y = h / 5 + static_cast<std::int32_t>((r >> 16) % std::max(1, h / 10));
    t.bed.w = w / 2;
    t.bed.h = h / 2;
    t.person.w = std::max(2, t.bed.w / 4);
    t.person.h = std::max(2, t.bed.h / 2);
    const auto span_x = static_cast<std::uint64_t>(t.bed.w - t.person.w - 1);
    const auto span_y = static_cast<std::uint64_t>(t.bed.h - t.person.h - 1);
    t.person.x = t.bed.x + 1 + static_cast<std::int32_t>(((r >> 32) + seq) % span_x);
    t.person.y = t.bed.y + 1 + static_cast<std::int32_t>(((r >> 48) + seq / 8) % span_y);
    return t;
}

ToneTruth tone_truth(std::uint64_t seed, std::uint64_t seq) {
    const std::uint64_t base = mix64(seed) ^ (seq * 0x9e3779b97f4a7c15ULL);
    return {0.1 + 0.4 * unit(base + 1), static_cast<std::uint32_t>(100 + mix64(base + 2) % 901),
            2 * std::numbers::pi * unit(base + 3)};
}

media::Image render_frame(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t seq) {
    media::Image img;
    img.width = cfg.payload_width;
    img.height = cfg.payload_height;
    img.samples_per_pixel = cfg.samples_per_pixel;
    img.bits_per_sample = cfg.bits_per_sample;
    img.samples.resize(img.sample_count());
    const Markers m = markers_for(cfg.bits_per_sample);
    SplitMix rng(mix64(seed) ^ mix64(seq + 0x51));
    for (auto& s : img.samples) s = static_cast<std::uint16_t>(rng.next() % m.background_limit);
    const SceneTruth t = scene_truth(seed, img.width, img.height, seq);
    fill_box(img, t.bed, m.bed);
    fill_box(img, t.person, m.person);
    return img;
}

media::Audio render_tone(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t seq) {
    const ToneTruth t = tone_truth(seed, seq);
    media::Audio a;
    a.sample_rate = cfg.payload_width;
    a.channels = 1;
    const auto n = static_cast<std::size_t>(std::llround(cfg.payload_width / cfg.frame_rate));
    a.samples.resize(n);
    const double w = 2 * std::numbers::pi * t.frequency_hz / a.sample_rate;
    for (std::size_t i = 0; i < n; ++i)
        a.samples[i] = static_cast<std::int16_t>(std::lround(t.amplitude * 32768.0 * std::sin(w * i + t.phase)));
    return a;
}

core::VitalsRecord synth_vitals(std::uint64_t seed, std::uint64_t seq, core::TimestampMs ts) {
    const std::uint64_t base = mix64(seed) ^ (seq * 0xd1b54a32d192ed03ULL);
    core::VitalsRecord v;
    v.timestamp = ts;
    v.hr = std::round((60 + 30 * unit(base + 1)) * 10) / 10;
    v.rr = std::round((12 + 8 * unit(base + 2)) * 10) / 10;
    if (seq % 1200 == 0) {
        v.spo2 = std::round((94 + 5 * unit(base + 3)) * 10) / 10;
        v.bp_systolic = std::round(110 + 25 * unit(base + 4));
        v.bp_diastolic = std::round(65 + 20 * unit(base + 5));
    }
    return v;
}

core::Bytes render_payload(const ChannelConfig& cfg, std::uint64_t seed, std::uint64_t seq, core::TimestampMs ts) {
    switch (core::modality_of(cfg.channel)) {
        case core::Modality::image: return media::encode_tiff(render_frame(cfg, seed, seq));
        case core::Modality::audio: return media::encode_wav(render_tone(cfg, seed, seq));
        case core::Modality::vitals: {
            const std::string csv = synth_vitals(seed, seq, ts).to_csv();
            return core::Bytes(csv.begin(), csv.end());
        }
    }
    return {};
}

}  // namespace avs::device
