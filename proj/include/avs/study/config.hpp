#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avs/core/records.hpp"
#include "avs/device/session.hpp"
#include "avs/pipeline/pipeline.hpp"
#include "avs/rdb/dataset.hpp"

namespace avs::study {

/// One enrolled subject. `sessions == 0` models a recruited subject who never
/// completed collection.
struct SubjectPlan {
    std::string subject_id;
    double age = 60;
    core::Gender gender = core::Gender::unknown;
    double weight_kg = 70;
    double height_cm = 170;
    std::vector<std::string> conditions;
    std::uint32_t sessions = 1;
};

/// Complete description of a reproducible study run.
///
/// JSON keys (all optional except subjects):
///   study_id, site_id, seed, epoch_ms,
///   subjects: {"count": N, "withdrawn": ["S004"]} | {"roster": [{subject_id, age,
///             gender, weight_kg, height_cm, conditions, sessions}]},
///   session: {duration_s, tick_s, sessions_per_subject, battery_hours,
///             disk_capacity_bytes, mode: "materialize"|"census",
///             scenario: [{at_s, kind: "privacy"|"power"}]},
///   channels: {"<channel>": {frame_rate, payload_width, payload_height,
///             bytes_per_item, enabled}, "vitals": {rate_hz, enabled}},
///   pipeline: {accelerated, visibility_timeout_s, max_deliveries, threads,
///             min_workers, max_workers, target_backlog_per_worker},
///   transfer: {bandwidth_bytes_per_s},
///   rdb: {group_rows}
struct StudyConfig {
    std::string study_id = "study";
    std::string site_id = "site";
    std::uint64_t seed = 1;
    core::TimestampMs epoch_ms = 1'600'000'000'000;
    std::vector<SubjectPlan> subjects;

    double duration_s = 60;
    double tick_s = 1;
    std::vector<device::ButtonEvent> scenario;
    double battery_hours = 24;
    std::uint64_t disk_capacity_bytes = 2'000'000'000'000ULL;
    device::CaptureMode mode = device::CaptureMode::materialize;
    std::vector<device::ChannelConfig> channels;

    pipeline::PipelineConfig pipeline;
    double bandwidth_bytes_per_s = 1e8;
    std::uint64_t group_rows = rdb::kDefaultGroupRows;

    /// Throws ValidationError naming the offending field.
    void validate() const;
    std::string to_json() const;
    /// Parses and validates. Unknown keys are rejected by name.
    static StudyConfig from_json(std::string_view text);
    static StudyConfig load(const std::filesystem::path& file);
};

/// Per-session seed derived from the study seed.
std::uint64_t session_seed(const StudyConfig& cfg, std::size_t subject_index, std::uint32_t session_index);
std::string session_id(std::uint32_t session_index);
/// Sessions run on consecutive days in roster order.
core::TimestampMs session_start(const StudyConfig& cfg, std::size_t subject_index, std::uint32_t session_index);

}  // namespace avs::study
