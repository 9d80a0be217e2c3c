#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "avs/core/parallel.hpp"
#include "avs/pipeline/extractors.hpp"
#include "avs/pipeline/queue.hpp"
#include "avs/transfer/object_store.hpp"

namespace avs::pipeline {

struct PoolConfig {
    std::uint32_t min_workers = 1;
    std::uint32_t max_workers = 16;
    std::uint32_t target_backlog_per_worker = 50;
    void validate() const;
};

/// clamp(ceil(depth / target), min, max).
std::uint32_t autoscale(const PoolConfig& pool, std::size_t queue_depth);

struct PriceModel {
    double cpu_worker_per_hour = 0.10;
    double accelerated_worker_per_hour = 0.90;
};

struct PipelineConfig {
    double visibility_timeout_s = 30.0;
    std::uint32_t max_deliveries = 5;
    PoolConfig pool;
    bool accelerated = false;
    double convert_ms = 20;   // per item, serverless stage
    double metadata_ms = 5;   // per item, serverless stage
    PriceModel prices;
    std::size_t threads = core::hardware_workers();
};

/// Injected extraction-worker crashes. A seeded `crash_fraction` of items are
/// victims; each victim crashes on its first `crashes_per_victim` deliveries,
/// either before or after writing its record.
struct FaultPlan {
    enum class CrashPoint { before_write, after_write, mixed };
    double crash_fraction = 0;
    std::uint32_t crashes_per_victim = 1;
    CrashPoint point = CrashPoint::mixed;
    std::uint64_t seed = 0;
};

struct ScalingEvent {
    double time_s;
    std::size_t depth;
    std::uint32_t workers;
};

struct DeadLetterEntry {
    std::string queue;
    std::string key;
    std::uint32_t deliveries;
    std::string reason;
};

struct PipelineReport {
    std::uint64_t items_in = 0;
    std::uint64_t converted = 0;
    std::uint64_t completed = 0;
    std::uint64_t dead_lettered = 0;
    std::uint64_t redeliveries = 0;
    std::uint64_t crashes = 0;
    std::uint64_t record_writes = 0;  // feature-record writes that filled slots
    double busy_s = 0;                // extraction worker-seconds busy
    double idle_s = 0;                // extraction worker-seconds idle
    double function_s = 0;            // conversion + metadata compute seconds
    double elapsed_s = 0;             // virtual
    double cost = 0;                  // worker-hours x price
    bool accelerated = false;
    std::vector<ScalingEvent> scaling;
    std::vector<DeadLetterEntry> dead_letters;

    std::string to_json() const;
};

/// Writes the lossless converted item (TIFF -> PNG, WAV -> FLAC, vitals CSV
/// copied) under the converted zone. Throws CodecError on undecodable input.
core::DataItem convert_format(transfer::ObjectStore& store, const core::ObjectKey& raw_key);
/// Persists the empty feature template unless it already exists.
FeatureRecord generate_metadata(transfer::ObjectStore& store, const ExtractorRegistry& registry,
                                const core::ObjectKey& raw_key);
struct ExtractResult {
    FeatureRecord record;
    bool wrote = false;
};
/// Fills every empty slot and persists the record. A complete record is
/// returned unchanged without a write.
ExtractResult extract_features(transfer::ObjectStore& store, const ExtractorRegistry& registry,
                               const core::ObjectKey& raw_key, bool accelerated);

/// Three-stage queue pipeline: entry (conversion) -> metadata -> processing
/// (feature extraction on the autoscaled worker pool).
class Pipeline {
public:
    Pipeline(transfer::ObjectStore& store, ExtractorRegistry registry, PipelineConfig cfg = {});

    /// Routes store object-created events for raw keys into the entry queue.
    void attach();
    /// Enqueues one raw key. Returns false for a duplicate. Throws
    /// ValidationError for a non-raw or missing key.
    bool on_object_created(const std::string& path);
    /// Enqueues every raw key currently in the store.
    std::size_t enqueue_existing();

    PipelineReport run_until_drained(const FaultPlan& plan = {});
    /// Moves all dead letters back into their queues.
    std::size_t replay_dead_letters();

    DurableQueue& entry_queue() { return entry_; }
    DurableQueue& metadata_queue() { return metadata_; }
    DurableQueue& processing_queue() { return processing_; }
    const ExtractorRegistry& registry() const { return registry_; }
    double now() const { return now_; }

private:
    transfer::ObjectStore& store_;
    ExtractorRegistry registry_;
    PipelineConfig cfg_;
    DurableQueue entry_;
    DurableQueue metadata_;
    DurableQueue processing_;
    double now_ = 0;
    std::uint64_t items_in_ = 0;
    std::set<std::string> converted_;
    std::set<std::string> completed_;
};

}  // namespace avs::pipeline
