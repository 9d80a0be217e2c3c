#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avs/pipeline/pipeline.hpp"
#include "avs/rdb/dataset.hpp"
#include "avs/study/config.hpp"
#include "avs/transfer/transfer.hpp"

namespace avs::study {

// ---- simulate -------------------------------------------------------------

struct SimulateSummary {
    std::uint64_t sessions = 0;
    std::uint64_t items = 0;
    std::uint64_t stored_bytes = 0;
    std::uint64_t modeled_bytes = 0;
    double virtual_s = 0;

    std::string to_json() const;
};

/// Runs every planned session and writes, under `out`:
///   config.json, keyring.json, disks/<disk_id>/, manifests/<subject>.<session>.json,
///   research/subjects.json, identity/
/// `time_scale` > 0 paces the run at that many virtual seconds per wall second.
SimulateSummary simulate(const StudyConfig& cfg, const std::filesystem::path& out, double time_scale = 0);

// ---- ingest ---------------------------------------------------------------

enum class IngestMode { network, courier };
IngestMode parse_ingest_mode(std::string_view s);

/// {"network": {"interrupt_after": N, "corrupt_in_flight": [keys]},
///  "courier": {"copies": N, "lost": ["courier-1"]},
///  "pipeline": {"crash_fraction": f, "crashes_per_victim": n,
///               "point": "before_write"|"after_write"|"mixed", "seed": s}}
struct IngestFaults {
    std::optional<std::uint64_t> interrupt_after;
    std::set<std::string> corrupt_in_flight;
    std::uint32_t courier_copies = 1;
    std::set<std::string> lost_couriers;
    pipeline::FaultPlan pipeline;

    static IngestFaults from_json(std::string_view text);
    static IngestFaults load(const std::filesystem::path& file);
};

struct IngestSummary {
    IngestMode mode = IngestMode::network;
    std::uint64_t sessions = 0;
    std::uint64_t expected_items = 0;
    std::uint64_t transfers = 0;
    std::uint64_t stored = 0;
    std::uint64_t quarantined = 0;
    std::uint64_t retried = 0;
    std::uint64_t interruptions = 0;
    double transfer_s = 0;
    std::vector<std::string> lost_couriers;
    /// Manifest keys absent from, or corrupt in, the raw zone after ingest.
    std::vector<std::string> lost_keys;
    std::uint64_t feature_records = 0;
    pipeline::PipelineReport pipeline;

    bool data_loss() const { return !lost_keys.empty(); }
    std::string to_json() const;
    std::string to_text() const;
};

/// Transfers every disk under `in` into the store, resuming automatically
/// after an injected interruption, then drains the curation pipeline.
IngestSummary ingest(const std::filesystem::path& in, transfer::ObjectStore& store, IngestMode mode,
                     const IngestFaults& faults = {}, bool retry_quarantined = false, double time_scale = 0);

/// Store path of the research-visible subject table.
inline constexpr std::string_view kSubjectsPath = "research/subjects.json";
/// Store path of the copied study config.
inline constexpr std::string_view kConfigPath = "research/config.json";

// ---- rdb build ------------------------------------------------------------

/// Dataset names produced by `build_datasets`.
inline constexpr std::array<std::string_view, 5> kDatasets{"frames", "audio", "vitals", "subjects", "catalog"};

rdb::Schema frames_schema();
rdb::Schema audio_schema();
rdb::Schema vitals_schema();
rdb::Schema subjects_schema();
rdb::Schema catalog_schema();

struct BuildSummary {
    std::uint64_t sessions_added = 0;
    std::map<std::string, std::uint64_t> rows_staged;
    std::map<std::string, std::uint64_t> published;  // dataset -> snapshot id

    std::string to_json() const;
};

/// Maps stored items and feature records of sessions not yet built into the
/// datasets. Progress lives in <db root>/build.json. Publishes when `publish`.
BuildSummary build_datasets(const transfer::ObjectStore& store, const std::filesystem::path& db_root,
                            std::uint64_t group_rows = rdb::kDefaultGroupRows, bool publish = true);

/// Publishes staged rows of every dataset (or just `only`). Returns new ids.
std::map<std::string, std::uint64_t> publish_datasets(const std::filesystem::path& db_root,
                                                      const std::vector<std::string>& only = {});

/// Digest of the latest snapshot of each dataset.
std::map<std::string, std::string> dataset_digests(const std::filesystem::path& db_root);

// ---- report ---------------------------------------------------------------

struct StudyReport {
    std::uint64_t recruited = 0;
    std::uint64_t completed = 0;
    std::uint64_t sessions = 0;
    std::uint64_t images = 0;
    std::map<std::string, std::uint64_t> images_by_channel;
    std::uint64_t study_days = 0;
    std::uint64_t storage_bytes = 0;  // raw zone objects
    std::uint64_t modeled_bytes = 0;  // manifest size model

    friend bool operator==(const StudyReport&, const StudyReport&) = default;
    std::string to_json() const;
    std::string to_text() const;
};

/// Summary computed from stored manifests, the subject table and the raw zone.
StudyReport make_report(const transfer::ObjectStore& store);

// ---- end to end ------------------------------------------------------------

struct RunResult {
    StudyReport report;
    std::map<std::string, std::string> digests;
    IngestSummary ingest;
};

/// simulate -> ingest -> build -> report under `work`.
RunResult run_study(const StudyConfig& cfg, const std::filesystem::path& work, const IngestFaults& faults = {});

}  // namespace avs::study
