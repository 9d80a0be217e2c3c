#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "avs/core/errors.hpp"
#include "avs/core/records.hpp"
#include "avs/media/codecs.hpp"
#include "avs/pipeline/features.hpp"

namespace avs::pipeline {

/// Thrown by an extractor to mark its slot failed with a reason.
class ExtractionFailed : public Error {
public:
    using Error::Error;
};

struct ExtractorInput {
    core::ObjectKey key;
    const media::Image* image = nullptr;
    const media::Audio* audio = nullptr;
    const core::VitalsRecord* vitals = nullptr;
    /// Raw frame at sequence - 1 of the same channel, if stored.
    std::function<std::optional<media::Image>()> previous_frame;
};

using ExtractorFn = std::function<FeatureValue(const ExtractorInput&)>;

struct ExtractorSpec {
    std::string name;
    core::Modality modality = core::Modality::image;
    double cpu_ms = 0;
    double accelerated_ms = 0;
    ExtractorFn fn;

    double cost_ms(bool accelerated) const { return accelerated ? accelerated_ms : cpu_ms; }
    /// cpu_ms / accelerated_ms must lie in [10, 60].
    void validate() const;
};

/// Bounding box of pixels at or above the bed marker (bed plus person).
core::Box bed_region(const media::Image& img);
/// Bounding box of pixels carrying the person marker.
core::Box person_region(const media::Image& img);
/// Mean sample value scaled to [0, 1].
double mean_brightness(const media::Image& img);
/// Mean absolute sample difference to `previous`, scaled to [0, 1].
double motion_energy(const media::Image& img, const media::Image& previous);
/// sqrt(mean((s / 32768)^2)).
double audio_rms(const media::Audio& audio);

/// Ordered set of extractors plus the feature-record schema version.
class ExtractorRegistry {
public:
    ExtractorRegistry() = default;

    /// bed_region, person_region, mean_brightness, motion_energy, audio_rms
    /// with default costs.
    static ExtractorRegistry builtin();
    /// {"schema_version": 1, "extractors": [{"name": ..., "cpu_ms": ...,
    ///  "accelerated_ms": ...}, ...]}. Names must be built-in extractors.
    static ExtractorRegistry from_json(std::string_view text);
    static ExtractorRegistry load(const std::filesystem::path& file);

    void add(ExtractorSpec spec);
    std::uint32_t schema_version() const { return schema_version_; }
    void set_schema_version(std::uint32_t v) { schema_version_ = v; }
    const std::vector<ExtractorSpec>& all() const { return specs_; }
    std::vector<const ExtractorSpec*> for_modality(core::Modality m) const;
    const ExtractorSpec& get(const std::string& name) const;

private:
    std::uint32_t schema_version_ = 1;
    std::vector<ExtractorSpec> specs_;
};

}  // namespace avs::pipeline
