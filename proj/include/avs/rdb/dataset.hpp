#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "avs/core/digest.hpp"
#include "avs/core/types.hpp"
#include "avs/rdb/column_file.hpp"
#include "avs/rdb/predicate.hpp"
#include "avs/rdb/value.hpp"

namespace avs::rdb {

inline constexpr std::uint64_t kDefaultGroupRows = 1000;

/// One immutable row-group file as referenced by a snapshot.
struct GroupRef {
    std::string file;  // name under groups/
    std::uint64_t rows = 0;
    std::uint64_t bytes = 0;
    core::Digest digest;
    std::vector<ColumnStats> stats;

    friend bool operator==(const GroupRef&, const GroupRef&) = default;
};

/// Immutable published view of a dataset.
struct Snapshot {
    std::uint64_t id = 0;
    std::uint32_t schema_version = 1;
    core::TimestampMs created_ms = 0;
    std::uint64_t total_rows = 0;
    std::vector<GroupRef> groups;

    std::string to_json(const Schema& schema) const;
    static Snapshot from_json(const Schema& schema, std::string_view text);

    friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct RowRejection {
    std::size_t row = 0;  // index within the appended batch
    std::string column;
    std::string reason;
};

struct AppendResult {
    std::uint64_t staged = 0;
    std::uint64_t groups_written = 0;
    std::vector<RowRejection> rejected;
};

struct ScanStats {
    std::uint64_t groups_total = 0;
    std::uint64_t groups_read = 0;
    std::uint64_t groups_skipped = 0;
    std::uint64_t rows_examined = 0;
    std::uint64_t rows_matched = 0;
};

struct ScanOptions {
    bool prune = true;
};

/// Selected columns of the matching rows, in snapshot order.
struct ScanResult {
    std::vector<std::string> columns;
    std::vector<Row> rows;
    ScanStats stats;
};

/// Per-group counts, one count per filter, ordered by group value.
struct CountTable {
    std::string group_column;
    std::vector<std::string> filters;
    std::vector<std::pair<Value, std::vector<std::uint64_t>>> rows;

    std::string to_text() const;
    std::string to_json() const;
};

/// Test hooks called at publish stages; throwing simulates a crash there.
struct PublishHooks {
    std::function<void()> after_temp_write;
    std::function<void()> after_rename;
};

/// A schema-typed table stored under one directory:
///   schema.json, manifest-<N>.json, staging.json, groups/g<NNNNNN>.col
/// Appends accumulate in staging groups and become visible only at publish,
/// which commits a new manifest by atomic rename. One writer at a time;
/// readers work from a Snapshot value and never block the writer.
class Dataset {
public:
    /// Opens an existing dataset and recovers from an interrupted publish.
    explicit Dataset(std::filesystem::path dir);

    const std::string& name() const { return name_; }
    const std::filesystem::path& dir() const { return dir_; }
    const Schema& schema() const { return schema_; }
    std::uint64_t group_rows() const { return group_rows_; }

    std::uint64_t latest_id() const;
    std::vector<std::uint64_t> snapshot_ids() const;
    /// Throws QueryError if the snapshot does not exist.
    Snapshot snapshot(std::uint64_t id) const;
    Snapshot latest() const { return snapshot(latest_id()); }

    AppendResult append_rows(const std::vector<Row>& rows);
    std::uint64_t staged_rows() const;
    std::vector<GroupRef> staged_groups() const;
    Snapshot publish(core::TimestampMs created_ms = 0, const PublishHooks& hooks = {});

    /// Reads the columns flagged in `wanted` (all when empty) of one group.
    GroupData read_group(const GroupRef& g, const std::vector<bool>& wanted = {}) const;

    /// Empty `columns` selects every column.
    ScanResult scan(const Snapshot& snap, const std::vector<std::string>& columns, const Predicate& where,
                    ScanOptions opts = {}) const;
    CountTable count_by(const Snapshot& snap, const std::string& group_column,
                        const std::vector<Predicate>& filters) const;

    /// Digest over the manifest bytes and every referenced group file.
    core::Digest snapshot_digest(std::uint64_t id) const;

private:
    std::filesystem::path manifest_path(std::uint64_t id) const;
    std::vector<GroupRef> load_staging() const;
    void save_staging(const std::vector<GroupRef>& g) const;
    void recover();

    std::filesystem::path dir_;
    std::string name_;
    Schema schema_;
    std::uint64_t group_rows_ = kDefaultGroupRows;
    mutable std::mutex writer_;
    std::uint64_t next_group_ = 1;
};

/// Collection of datasets under one root directory.
class Database {
public:
    explicit Database(std::filesystem::path root);

    /// Throws Error for a duplicate name, ValidationError for bad schemas.
    Dataset create_dataset(const std::string& name, const Schema& schema,
                           std::uint64_t group_rows = kDefaultGroupRows);
    Dataset open(const std::string& name) const;
    bool exists(const std::string& name) const;
    std::vector<std::string> list() const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path root_;
};

}  // namespace avs::rdb
