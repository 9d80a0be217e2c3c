#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "avs/client/row.hpp"
#include "avs/client/sequence.hpp"
#include "avs/client/transforms.hpp"
#include "avs/rdb/dataset.hpp"

namespace avs::client {

struct ShuffleSpec {
    std::uint64_t seed = 0;
    std::size_t buffer_rows = 1000;
};

struct NGramSpec {
    std::size_t n = 1;
    std::string group_column;
    std::string order_column;
    std::optional<double> max_gap;  // unset: windows ignore order gaps
};

struct CacheSpec {
    std::filesystem::path directory;
    bool enabled = false;
};

/// Declarative stream description. JSON form:
///   {"dataset": "frames", "snapshot": 3, "columns": ["subject_id", "payload"],
///    "where": "subject_id = 'S001'", "transforms": [{"name": "crop", "args": {...}}],
///    "shuffle": {"seed": 42, "buffer_rows": 1000},
///    "ngram": {"n": 3, "group_column": "subject_id", "order_column": "ts", "max_gap": 200},
///    "cache": {"directory": "cache", "enabled": true}, "prefetch_workers": 4}
/// Only "dataset" is required. No snapshot means the latest at open time.
/// NGram group/order columns are added to the selection when missing.
struct StreamSpec {
    std::string dataset;
    std::optional<std::uint64_t> snapshot;
    std::vector<std::string> columns;
    std::string where;
    std::vector<TransformStep> transforms;
    std::optional<ShuffleSpec> shuffle;
    std::optional<NGramSpec> ngram;
    CacheSpec cache;
    std::size_t prefetch_workers = 1;

    /// Throws ValidationError naming the offending field.
    void validate() const;
    std::string to_json() const;
    static StreamSpec from_json(std::string_view text);
};

struct StreamStats {
    std::uint64_t units = 0;
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;  // serialized unit bytes delivered
    std::uint64_t transform_invocations = 0;
    std::uint64_t groups_total = 0;
    std::uint64_t groups_skipped = 0;
    bool from_cache = false;
    bool cache_rebuilt = false;  // a cached entry failed verification
    // Stage CPU time summed over workers.
    double read_s = 0;
    double decode_s = 0;
    double transform_s = 0;
};

/// Single-consumer iterator pinned to one snapshot. Without shuffle, units
/// arrive in row-group order whatever the worker count.
class Stream {
public:
    struct Impl;
    explicit Stream(std::unique_ptr<Impl> impl);
    ~Stream();
    Stream(const Stream&) = delete;
    Stream& operator=(const Stream&) = delete;

    /// Next unit, or nullopt at end of stream.
    std::optional<Unit> next();
    const StreamStats& stats() const;
    std::uint64_t snapshot_id() const;
    /// Cache key over snapshot, columns, predicate, transforms and NGram config.
    const std::string& fingerprint() const;

private:
    std::unique_ptr<Impl> impl_;
};

/// Throws QueryError (unknown dataset, snapshot or column), ValidationError
/// (bad spec or unknown transform) or IoError (unwritable cache directory).
std::unique_ptr<Stream> open_stream(const rdb::Database& db, const StreamSpec& spec,
                                    const TransformRegistry& registry = TransformRegistry::builtin());

struct PassReport {
    std::uint64_t units = 0;
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;
    std::uint64_t transform_invocations = 0;
    bool from_cache = false;
    double wall_s = 0;
    double rows_per_s = 0;
    double bytes_per_s = 0;
    double read_s = 0;
    double decode_s = 0;
    double transform_s = 0;
};

struct ThroughputReport {
    std::string fingerprint;
    std::uint64_t snapshot_id = 0;
    std::size_t prefetch_workers = 1;
    std::vector<PassReport> passes;

    std::string to_json() const;
    std::string to_text() const;
};

ThroughputReport bench_stream(const rdb::Database& db, const StreamSpec& spec, std::size_t passes,
                              const TransformRegistry& registry = TransformRegistry::builtin());

}  // namespace avs::client
