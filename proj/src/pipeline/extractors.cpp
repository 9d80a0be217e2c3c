#include "avs/pipeline/extractors.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "avs/core/fs.hpp"

namespace avs::pipeline {

using core::Modality;

namespace {

std::uint16_t bed_marker(const media::Image& img) { return img.bits_per_sample == 8 ? 180 : 50000; }
std::uint16_t person_marker(const media::Image& img) { return img.bits_per_sample == 8 ? 240 : 60000; }

template <class Pred>
core::Box bbox(const media::Image& img, Pred pred, const char* what) {
    std::int32_t x0 = INT32_MAX, y0 = INT32_MAX, x1 = -1, y1 = -1;
    for (std::uint32_t y = 0; y < img.height; ++y)
        for (std::uint32_t x = 0; x < img.width; ++x)
            if (pred(img.at(x, y, 0))) {
                x0 = std::min<std::int32_t>(x0, x);
                y0 = std::min<std::int32_t>(y0, y);
                x1 = std::max<std::int32_t>(x1, x);
                y1 = std::max<std::int32_t>(y1, y);
            }
    if (x1 < 0) throw ExtractionFailed(std::string("no ") + what + " pixels");
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

const media::Image& need_image(const ExtractorInput& in) {
    if (!in.image) throw ExtractionFailed("image input required");
    return *in.image;
}

ExtractorFn builtin_fn(const std::string& name) {
    if (name == "bed_region") return [](const ExtractorInput& in) -> FeatureValue { return bed_region(need_image(in)); };
    if (name == "person_region")
        return [](const ExtractorInput& in) -> FeatureValue { return person_region(need_image(in)); };
    if (name == "mean_brightness")
        return [](const ExtractorInput& in) -> FeatureValue { return mean_brightness(need_image(in)); };
    if (name == "motion_energy")
        return [](const ExtractorInput& in) -> FeatureValue {
            const media::Image& img = need_image(in);
            if (in.key.sequence == 0) return 0.0;
            std::optional<media::Image> prev = in.previous_frame ? in.previous_frame() : std::nullopt;
            if (!prev) throw ExtractionFailed("previous frame unavailable");
            return motion_energy(img, *prev);
        };
    if (name == "audio_rms")
        return [](const ExtractorInput& in) -> FeatureValue {
            if (!in.audio) throw ExtractionFailed("audio input required");
            return audio_rms(*in.audio);
        };
    throw ValidationError("extractors", "unknown extractor " + name);
}

struct Default {
    const char* name;
    Modality modality;
    double cpu_ms;
    double accelerated_ms;
};

constexpr Default kDefaults[] = {
    {"bed_region", Modality::image, 400, 20},      {"person_region", Modality::image, 900, 30},
    {"mean_brightness", Modality::image, 50, 5},   {"motion_energy", Modality::image, 120, 4},
    {"audio_rms", Modality::audio, 60, 2},
};

const Default& default_of(const std::string& name) {
    for (const auto& d : kDefaults)
        if (name == d.name) return d;
    throw ValidationError("extractors", "unknown extractor " + name);
}

}  // namespace

void ExtractorSpec::validate() const {
    if (name.empty()) throw ValidationError("name", "must be non-empty");
    if (!(cpu_ms > 0) || !(accelerated_ms > 0)) throw ValidationError(name + ".cost", "costs must be positive");
    const double ratio = cpu_ms / accelerated_ms;
    if (ratio < 10 || ratio > 60) throw ValidationError(name + ".cost", "cpu/accelerated ratio must be in [10, 60]");
    if (!fn) throw ValidationError(name, "no implementation");
}

core::Box bed_region(const media::Image& img) {
    const std::uint16_t m = bed_marker(img);
    return bbox(img, [m](std::uint16_t v) { return v >= m; }, "bed");
}

core::Box person_region(const media::Image& img) {
    const std::uint16_t m = person_marker(img);
    return bbox(img, [m](std::uint16_t v) { return v == m; }, "person");
}

double mean_brightness(const media::Image& img) {
    if (img.samples.empty()) throw ExtractionFailed("empty image");
    double sum = 0;
    for (std::uint16_t s : img.samples) sum += s;
    return sum / static_cast<double>(img.samples.size()) / img.max_value();
}

double motion_energy(const media::Image& img, const media::Image& prev) {
    if (img.width != prev.width || img.height != prev.height || img.samples_per_pixel != prev.samples_per_pixel ||
        img.bits_per_sample != prev.bits_per_sample)
        throw ExtractionFailed("previous frame geometry differs");
    if (img.samples.empty()) throw ExtractionFailed("empty image");
    double sum = 0;
    for (std::size_t i = 0; i < img.samples.size(); ++i)
        sum += std::abs(static_cast<double>(img.samples[i]) - static_cast<double>(prev.samples[i]));
    return sum / static_cast<double>(img.samples.size()) / img.max_value();
}

double audio_rms(const media::Audio& audio) {
    if (audio.samples.empty()) throw ExtractionFailed("empty audio");
    double sum = 0;
    for (std::int16_t s : audio.samples) {
        const double x = s / 32768.0;
        sum += x * x;
    }
    return std::sqrt(sum / static_cast<double>(audio.samples.size()));
}

ExtractorRegistry ExtractorRegistry::builtin() {
    ExtractorRegistry r;
    for (const auto& d : kDefaults) r.add({d.name, d.modality, d.cpu_ms, d.accelerated_ms, builtin_fn(d.name)});
    return r;
}

ExtractorRegistry ExtractorRegistry::from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("extractor config: ") + e.what());
    }
    ExtractorRegistry r;
    r.schema_version_ = j.value("schema_version", 1u);
    for (const auto& e : j.at("extractors")) {
        const std::string name = e.at("name").get<std::string>();
        const Default& d = default_of(name);
        if (e.contains("modality") && e.at("modality").get<std::string>() != core::to_string(d.modality))
            throw ValidationError(name + ".modality", "does not match the extractor");
        r.add({name, d.modality, e.value("cpu_ms", d.cpu_ms), e.value("accelerated_ms", d.accelerated_ms),
               builtin_fn(name)});
    }
    return r;
}

ExtractorRegistry ExtractorRegistry::load(const std::filesystem::path& file) { return from_json(core::read_text(file)); }

void ExtractorRegistry::add(ExtractorSpec spec) {
    spec.validate();
    for (const auto& s : specs_)
        if (s.name == spec.name) throw ValidationError("extractors", "duplicate extractor " + spec.name);
    specs_.push_back(std::move(spec));
}

std::vector<const ExtractorSpec*> ExtractorRegistry::for_modality(Modality m) const {
    std::vector<const ExtractorSpec*> out;
    for (const auto& s : specs_)
        if (s.modality == m) out.push_back(&s);
    return out;
}

const ExtractorSpec& ExtractorRegistry::get(const std::string& name) const {
    for (const auto& s : specs_)
        if (s.name == name) return s;
    throw ValidationError("extractors", "unknown extractor " + name);
}

}  // namespace avs::pipeline
