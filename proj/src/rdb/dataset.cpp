#include "avs/rdb/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"

namespace avs::rdb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kManifestPrefix = "manifest-";
constexpr const char* kManifestSuffix = ".json";

std::optional<std::uint64_t> parse_number_between(const std::string& s, std::string_view prefix,
                                                  std::string_view suffix) {
    if (s.size() <= prefix.size() + suffix.size() || !s.starts_with(prefix) || !s.ends_with(suffix))
        return std::nullopt;
    const char* b = s.data() + prefix.size();
    const char* e = s.data() + s.size() - suffix.size();
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    return v;
}

json stats_to_json(const ColumnStats& s) {
    json j{{"nulls", s.null_count}};
    if (s.min) {
        j["min"] = value_to_json(*s.min);
        j["max"] = value_to_json(*s.max);
    }
    return j;
}

ColumnStats stats_from_json(ColumnType t, const json& j) {
    ColumnStats s;
    s.null_count = j.at("nulls").get<std::uint64_t>();
    if (j.contains("min")) {
        s.min = value_from_json(t, j.at("min"));
        s.max = value_from_json(t, j.at("max"));
    }
    return s;
}

json group_to_json(const Schema& schema, const GroupRef& g) {
    json stats = json::array();
    for (std::size_t c = 0; c < schema.size(); ++c) stats.push_back(stats_to_json(g.stats.at(c)));
    return {{"file", g.file}, {"rows", g.rows}, {"bytes", g.bytes}, {"digest", g.digest.hex()}, {"stats", stats}};
}

GroupRef group_from_json(const Schema& schema, const json& j) {
    GroupRef g;
    g.file = j.at("file").get<std::string>();
    g.rows = j.at("rows").get<std::uint64_t>();
    g.bytes = j.at("bytes").get<std::uint64_t>();
    g.digest = core::Digest::from_hex(j.at("digest").get<std::string>());
    const json& stats = j.at("stats");
    if (stats.size() != schema.size()) throw ParseError("manifest: stats width does not match schema");
    for (std::size_t c = 0; c < schema.size(); ++c) g.stats.push_back(stats_from_json(schema.at(c).type, stats[c]));
    return g;
}

std::string group_file_name(std::uint64_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "g%06llu.col", static_cast<unsigned long long>(n));
    return buf;
}

}  // namespace

// ---- Snapshot ---------------------------------------------------------------

std::string Snapshot::to_json(const Schema& schema) const {
    json groups_j = json::array();
    for (const auto& g : groups) groups_j.push_back(group_to_json(schema, g));
    return json{{"snapshot_id", id},
                {"schema_version", schema_version},
                {"created_ms", created_ms},
                {"total_rows", total_rows},
                {"groups", groups_j}}
        .dump(1);
}

Snapshot Snapshot::from_json(const Schema& schema, std::string_view text) {
    try {
        const json j = json::parse(text);
        Snapshot s;
        s.id = j.at("snapshot_id").get<std::uint64_t>();
        s.schema_version = j.at("schema_version").get<std::uint32_t>();
        s.created_ms = j.at("created_ms").get<core::TimestampMs>();
        s.total_rows = j.at("total_rows").get<std::uint64_t>();
        std::uint64_t sum = 0;
        for (const auto& g : j.at("groups")) {
            s.groups.push_back(group_from_json(schema, g));
            sum += s.groups.back().rows;
        }
        if (sum != s.total_rows) throw ParseError("manifest: total_rows does not match groups");
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

// ---- CountTable -------------------------------------------------------------

std::string CountTable::to_text() const {
    std::vector<std::vector<std::string>> cells;
    cells.push_back({group_column});
    for (const auto& f : filters) cells.back().push_back(f.empty() ? "count" : f);
    for (const auto& [g, counts] : rows) {
        cells.push_back({to_display(g)});
        for (auto c : counts) cells.back().push_back(std::to_string(c));
    }
    std::vector<std::size_t> width(cells.front().size(), 0);
    for (const auto& r : cells)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    std::ostringstream out;
    for (std::size_t r = 0; r < cells.size(); ++r) {
        for (std::size_t i = 0; i < cells[r].size(); ++i) {
            if (i) out << " | ";
            out << cells[r][i] << std::string(width[i] - cells[r][i].size(), ' ');
        }
        out << '\n';
        if (r == 0) {
            for (std::size_t i = 0; i < width.size(); ++i) out << (i ? "-+-" : "") << std::string(width[i], '-');
            out << '\n';
        }
    }
    return out.str();
}

std::string CountTable::to_json() const {
    json rows_j = json::array();
    for (const auto& [g, counts] : rows) rows_j.push_back({{"group", value_to_json(g)}, {"counts", counts}});
    return json{{"group_column", group_column}, {"filters", filters}, {"rows", rows_j}}.dump(1);
}

// ---- Dataset ----------------------------------------------------------------

Dataset::Dataset(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::exists(dir_ / "schema.json")) throw QueryError("dataset not found: " + dir_.string());
    try {
        const json j = json::parse(core::read_text(dir_ / "schema.json"));
        name_ = j.at("name").get<std::string>();
        group_rows_ = j.at("group_rows").get<std::uint64_t>();
        schema_ = Schema::from_json(j.at("schema").dump());
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema.json: ") + e.what());
    }
    recover();
}

fs::path Dataset::manifest_path(std::uint64_t id) const {
    return dir_ / (kManifestPrefix + std::to_string(id) + kManifestSuffix);
}

void Dataset::recover() {
    std::lock_guard lock(writer_);
    for (const auto& sub : {dir_, dir_ / "groups"})
        for (const auto& e : fs::directory_iterator(sub))
            if (e.path().filename().string().find(".tmp") != std::string::npos) fs::remove(e.path());

    std::uint64_t max_group = 0;
    for (const auto& e : fs::directory_iterator(dir_ / "groups"))
        if (auto n = parse_number_between(e.path().filename().string(), "g", ".col")) max_group = std::max(max_group, *n);
    next_group_ = max_group + 1;

    // Staged groups already committed by an interrupted publish.
    const Snapshot snap = snapshot(latest_id());
    std::vector<GroupRef> staged = load_staging();
    const auto before = staged.size();
    std::erase_if(staged, [&](const GroupRef& g) {
        return std::any_of(snap.groups.begin(), snap.groups.end(), [&](const GroupRef& p) { return p.file == g.file; });
    });
    if (staged.size() != before) save_staging(staged);
}

std::vector<std::uint64_t> Dataset::snapshot_ids() const {
    std::vector<std::uint64_t> ids;
    for (const auto& e : fs::directory_iterator(dir_))
        if (auto n = parse_number_between(e.path().filename().string(), kManifestPrefix, kManifestSuffix))
            ids.push_back(*n);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::uint64_t Dataset::latest_id() const {
    const auto ids = snapshot_ids();
    if (ids.empty()) throw QueryError("dataset " + name_ + " has no snapshots");
    return ids.back();
}

Snapshot Dataset::snapshot(std::uint64_t id) const {
    const fs::path p = manifest_path(id);
    if (!fs::exists(p)) throw QueryError("dataset " + name_ + ": snapshot " + std::to_string(id) + " does not exist");
    Snapshot s = Snapshot::from_json(schema_, core::read_text(p));
    if (s.id != id) throw ParseError("manifest " + p.string() + ": id mismatch");
    return s;
}

std::vector<GroupRef> Dataset::load_staging() const {
    const fs::path p = dir_ / "staging.json";
    if (!fs::exists(p)) return {};
    std::vector<GroupRef> out;
    try {
        for (const auto& g : json::parse(core::read_text(p))) out.push_back(group_from_json(schema_, g));
    } catch (const json::exception& e) {
        throw ParseError(std::string("staging.json: ") + e.what());
    }
    return out;
}

void Dataset::save_staging(const std::vector<GroupRef>& groups) const {
    json j = json::array();
    for (const auto& g : groups) j.push_back(group_to_json(schema_, g));
    core::write_file_atomic(dir_ / "staging.json", j.dump(1));
}

AppendResult Dataset::append_rows(const std::vector<Row>& rows) {
    std::lock_guard lock(writer_);
    AppendResult result;
    std::vector<const Row*> accepted;
    accepted.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        try {
            check_row(schema_, rows[i]);
            accepted.push_back(&rows[i]);
        } catch (const ValidationError& e) {
            result.rejected.push_back({i, e.field(), e.what()});
        }
    }
    std::vector<GroupRef> staged = load_staging();
    for (std::size_t start = 0; start < accepted.size(); start += group_rows_) {
        const std::size_t end = std::min<std::size_t>(accepted.size(), start + group_rows_);
        std::vector<Row> chunk;
        chunk.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) chunk.push_back(*accepted[i]);
        const core::Bytes file = encode_group(schema_, chunk);
        GroupRef g;
        g.file = group_file_name(next_group_++);
        g.rows = chunk.size();
        g.bytes = file.size();
        g.digest = core::digest(file);
        g.stats = read_group_stats(file);
        core::write_file_atomic(dir_ / "groups" / g.file, file);
        staged.push_back(std::move(g));
        ++result.groups_written;
        result.staged += chunk.size();
    }
    if (result.groups_written) save_staging(staged);
    return result;
}

std::uint64_t Dataset::staged_rows() const {
    std::uint64_t n = 0;
    for (const auto& g : load_staging()) n += g.rows;
    return n;
}

std::vector<GroupRef> Dataset::staged_groups() const { return load_staging(); }

Snapshot Dataset::publish(core::TimestampMs created_ms, const PublishHooks& hooks) {
    std::lock_guard lock(writer_);
    const Snapshot prev = snapshot(latest_id());
    Snapshot next = prev;
    next.id = prev.id + 1;
    next.created_ms = created_ms;
    for (auto& g : load_staging()) {
        next.total_rows += g.rows;
        next.groups.push_back(std::move(g));
    }
    const fs::path final_path = manifest_path(next.id);
    const fs::path temp_path = final_path.string() + ".tmp";
    {
        const std::string text = next.to_json(schema_);
        std::ofstream out(temp_path, std::ios::binary | std::ios::trunc);
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        out.close();
        if (!out) throw IoError("cannot write " + temp_path.string());
    }
    if (hooks.after_temp_write) hooks.after_temp_write();
    fs::rename(temp_path, final_path);
    if (hooks.after_rename) hooks.after_rename();
    save_staging({});
    return next;
}

GroupData Dataset::read_group(const GroupRef& g, const std::vector<bool>& wanted) const {
    const core::Bytes file = core::read_file(dir_ / "groups" / g.file);
    if (file.size() != g.bytes || core::digest(file) != g.digest)
        throw CodecError("dataset " + name_ + ": group " + g.file + " does not match its manifest digest");
    return decode_group(file, wanted);
}

ScanResult Dataset::scan(const Snapshot& snap, const std::vector<std::string>& columns, const Predicate& where,
                         ScanOptions opts) const {
    const BoundPredicate pred(schema_, where);
    ScanResult result;
    std::vector<std::size_t> selected;
    if (columns.empty()) {
        for (std::size_t c = 0; c < schema_.size(); ++c) selected.push_back(c);
    } else {
        for (const auto& name : columns) selected.push_back(schema_.index_of(name));
    }
    for (auto c : selected) result.columns.push_back(schema_.at(c).name);
    std::vector<bool> wanted(schema_.size(), false);
    for (auto c : selected) wanted[c] = true;
    for (auto c : pred.columns()) wanted[c] = true;

    result.stats.groups_total = snap.groups.size();
    for (const auto& g : snap.groups) {
        if (opts.prune && !pred.may_match(g.stats, g.rows)) {
            ++result.stats.groups_skipped;
            continue;
        }
        ++result.stats.groups_read;
        GroupData data = read_group(g, wanted);
        result.stats.rows_examined += data.row_count;
        for (std::size_t i = 0; i < data.row_count; ++i) {
            if (!pred.matches(data.columns, i)) continue;
            Row row;
            row.reserve(selected.size());
            for (auto c : selected) row.push_back(data.columns[c][i]);
            result.rows.push_back(std::move(row));
        }
    }
    result.stats.rows_matched = result.rows.size();
    return result;
}

CountTable Dataset::count_by(const Snapshot& snap, const std::string& group_column,
                             const std::vector<Predicate>& filters) const {
    const std::size_t gc = schema_.index_of(group_column);
    const ColumnType gt = schema_.at(gc).type;
    if (gt == ColumnType::bytes || gt == ColumnType::box4)
        throw QueryError("count_by: column '" + group_column + "' is not groupable");
    std::vector<Predicate> effective = filters.empty() ? std::vector<Predicate>{Predicate::all()} : filters;
    std::vector<BoundPredicate> bound;
    std::vector<bool> wanted(schema_.size(), false);
    wanted[gc] = true;
    for (const auto& f : effective) {
        bound.emplace_back(schema_, f);
        for (auto c : bound.back().columns()) wanted[c] = true;
    }
    auto less = [](const Value& a, const Value& b) { return compare_values(a, b) < 0; };
    std::map<Value, std::vector<std::uint64_t>, decltype(less)> counts(less);
    for (const auto& g : snap.groups) {
        const bool any = std::any_of(bound.begin(), bound.end(), [&](const BoundPredicate& p) {
            return p.may_match(g.stats, g.rows);
        });
        if (!any) continue;
        GroupData data = read_group(g, wanted);
        for (std::size_t i = 0; i < data.row_count; ++i) {
            for (std::size_t f = 0; f < bound.size(); ++f) {
                if (!bound[f].matches(data.columns, i)) continue;
                auto [it, inserted] = counts.try_emplace(data.columns[gc][i], bound.size(), 0);
                ++it->second[f];
            }
        }
    }
    CountTable table;
    table.group_column = group_column;
    for (const auto& f : effective) table.filters.push_back(f.to_string());
    for (auto& [k, v] : counts) table.rows.emplace_back(k, std::move(v));
    return table;
}

core::Digest Dataset::snapshot_digest(std::uint64_t id) const {
    const Snapshot snap = snapshot(id);
    core::Hasher h;
    h.update(core::read_file(manifest_path(id)));
    for (const auto& g : snap.groups) {
        h.update("\n" + g.file + "\n");
        h.update(core::read_file(dir_ / "groups" / g.file));
    }
    return h.finish();
}

// ---- Database ---------------------------------------------------------------

Database::Database(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

bool Database::exists(const std::string& name) const {
    return core::is_valid_identifier(name) && fs::exists(root_ / name / "schema.json");
}

Dataset Database::create_dataset(const std::string& name, const Schema& schema, std::uint64_t group_rows) {
    core::require_identifier("dataset", name);
    if (name.find(".tmp") != std::string::npos) throw ValidationError("dataset", "reserved name");
    if (group_rows == 0) throw ValidationError("group_rows", "must be positive");
    if (schema.size() == 0) throw ValidationError("schema", "at least one column is required");
    const Schema checked(schema.columns());
    if (exists(name)) throw Error("dataset already exists: " + name);

    const fs::path staging_dir = root_ / (name + ".tmp-create");
    fs::remove_all(staging_dir);
    fs::create_directories(staging_dir / "groups");
    const json meta{{"name", name}, {"group_rows", group_rows}, {"schema", json::parse(checked.to_json())}};
    core::write_file_atomic(staging_dir / "schema.json", meta.dump(1));
    core::write_file_atomic(staging_dir / (std::string(kManifestPrefix) + "0" + kManifestSuffix),
                            Snapshot{}.to_json(checked));
    core::write_file_atomic(staging_dir / "staging.json", std::string_view("[]"));
    fs::rename(staging_dir, root_ / name);
    return Dataset(root_ / name);
}

Dataset Database::open(const std::string& name) const {
    if (!exists(name)) throw QueryError("unknown dataset: " + name);
    return Dataset(root_ / name);
}

std::vector<std::string> Database::list() const {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root_)) {
        const std::string n = e.path().filename().string();
        if (e.is_directory() && n.find(".tmp") == std::string::npos && fs::exists(e.path() / "schema.json"))
            out.push_back(n);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace avs::rdb
