#include "avs/client/stream.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/core/parallel.hpp"

namespace avs::client {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr std::size_t kUnitsPerNgramBatch = 1000;

}  // namespace

// ---- StreamSpec ---------------------------------------------------------------

void StreamSpec::validate() const {
    if (dataset.empty()) throw ValidationError("dataset", "required");
    if (prefetch_workers == 0) throw ValidationError("prefetch_workers", "must be positive");
    if (shuffle && shuffle->buffer_rows == 0) throw ValidationError("shuffle.buffer_rows", "must be positive");
    if (ngram) {
        if (ngram->n == 0) throw ValidationError("ngram.n", "must be at least 1");
        if (ngram->group_column.empty()) throw ValidationError("ngram.group_column", "required");
        if (ngram->order_column.empty()) throw ValidationError("ngram.order_column", "required");
        if (ngram->max_gap && *ngram->max_gap < 0) throw ValidationError("ngram.max_gap", "must be non-negative");
    }
    if (cache.enabled && cache.directory.empty()) throw ValidationError("cache.directory", "required when enabled");
    for (const auto& t : transforms)
        if (t.name.empty()) throw ValidationError("transforms", "step without a name");
}

std::string StreamSpec::to_json() const {
    json j{{"dataset", dataset}, {"columns", columns}, {"where", where}, {"prefetch_workers", prefetch_workers}};
    if (snapshot) j["snapshot"] = *snapshot;
    json t = json::array();
    for (const auto& s : transforms) t.push_back({{"name", s.name}, {"args", s.args}});
    j["transforms"] = t;
    if (shuffle) j["shuffle"] = {{"seed", shuffle->seed}, {"buffer_rows", shuffle->buffer_rows}};
    if (ngram) {
        j["ngram"] = {{"n", ngram->n}, {"group_column", ngram->group_column}, {"order_column", ngram->order_column}};
        j["ngram"]["max_gap"] = ngram->max_gap ? json(*ngram->max_gap) : json(nullptr);
    }
    j["cache"] = {{"directory", cache.directory.string()}, {"enabled", cache.enabled}};
    return j.dump(2);
}

StreamSpec StreamSpec::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("stream spec: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("stream spec: top level must be an object");
    StreamSpec s;
    auto field = [&](const char* name, auto fn) {
        if (!j.contains(name) || j.at(name).is_null()) return;
        try {
            fn(j.at(name));
        } catch (const json::exception& e) {
            throw ValidationError(name, e.what());
        }
    };
    static const std::vector<std::string> known = {"dataset", "snapshot", "columns", "where", "transforms",
                                                   "shuffle", "ngram",    "cache",   "prefetch_workers"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ValidationError(k, "unknown field");
    field("dataset", [&](const json& v) { s.dataset = v.get<std::string>(); });
    field("snapshot", [&](const json& v) { s.snapshot = v.get<std::uint64_t>(); });
    field("columns", [&](const json& v) { s.columns = v.get<std::vector<std::string>>(); });
    field("where", [&](const json& v) { s.where = v.get<std::string>(); });
    field("transforms", [&](const json& v) {
        for (const auto& t : v) s.transforms.push_back({t.at("name").get<std::string>(), t.value("args", json::object())});
    });
    field("shuffle", [&](const json& v) {
        s.shuffle = ShuffleSpec{v.at("seed").get<std::uint64_t>(), v.value("buffer_rows", std::size_t{1000})};
    });
    field("ngram", [&](const json& v) {
        NGramSpec n;
        n.n = v.at("n").get<std::size_t>();
        n.group_column = v.at("group_column").get<std::string>();
        n.order_column = v.at("order_column").get<std::string>();
        if (v.contains("max_gap") && !v.at("max_gap").is_null()) n.max_gap = v.at("max_gap").get<double>();
        s.ngram = n;
    });
    field("cache", [&](const json& v) {
        s.cache.directory = v.value("directory", std::string());
        s.cache.enabled = v.value("enabled", true);
    });
    field("prefetch_workers", [&](const json& v) {
        const auto n = v.get<std::int64_t>();
        if (n <= 0) throw ValidationError("prefetch_workers", "must be positive");
        s.prefetch_workers = static_cast<std::size_t>(n);
    });
    s.validate();
    return s;
}

// ---- Stream implementation ------------------------------------------------------

struct Stream::Impl {
    StreamSpec spec;
    TransformRegistry registry;
    std::optional<rdb::Dataset> dataset;
    rdb::Snapshot snap;
    std::vector<std::size_t> selected;
    std::vector<bool> wanted;
    std::optional<rdb::BoundPredicate> pred;
    std::vector<const rdb::GroupRef*> groups;  // after pruning
    std::string fp;
    StreamStats stats;

    // Cache state.
    fs::path cache_dir;
    bool writing_cache = false;
    std::vector<std::string> cache_parts;  // read mode
    json index_parts = json::array();      // write mode
    std::size_t part_cursor = 0;

    // Prefetch state.
    struct Slot {
        bool ready = false;
        std::vector<Unit> units;
        std::exception_ptr error;
        StreamStats cost;
    };
    std::vector<Slot> slots;
    std::mutex m;
    std::condition_variable cv;
    std::size_t next_task = 0;
    std::size_t consumer = 0;
    bool stop = false;
    std::vector<std::thread> workers;

    // NGram state.
    bool ngrams_built = false;
    std::vector<Unit> ngram_units;
    std::size_t ngram_cursor = 0;

    std::deque<Unit> pending;
    bool source_done = false;
    std::optional<ShuffleBuffer<Unit>> shuffle;

    ~Impl() {
        {
            std::lock_guard lock(m);
            stop = true;
        }
        cv.notify_all();
        for (auto& t : workers) t.join();
    }

    DecodedRow decode_row(const rdb::GroupData& g, std::size_t i, StreamStats& cost) const {
        DecodedRow row;
        for (auto c : selected) {
            const rdb::ColumnDef& def = dataset->schema().at(c);
            const rdb::Value& v = g.columns[c][i];
            if (def.type == rdb::ColumnType::bytes) {
                if (rdb::is_null(v)) continue;
                const auto t0 = Clock::now();
                row.tensor_names.push_back(def.name);
                row.tensors.push_back(decode_payload(std::get<core::Bytes>(v)));
                cost.decode_s += seconds_since(t0);
            } else {
                row.names.push_back(def.name);
                row.values.push_back(v);
            }
        }
        return row;
    }

    DecodedRow transform(DecodedRow row, StreamStats& cost) const {
        if (spec.transforms.empty()) return row;
        const auto t0 = Clock::now();
        row = registry.apply(std::move(row), spec.transforms, &cost.transform_invocations);
        cost.transform_s += seconds_since(t0);
        return row;
    }

    /// Matching rows of one group, decoded but not transformed.
    std::vector<DecodedRow> read_rows(std::size_t gi, StreamStats& cost) const {
        const auto t0 = Clock::now();
        const rdb::GroupData g = dataset->read_group(*groups[gi], wanted);
        cost.read_s += seconds_since(t0);
        std::vector<DecodedRow> out;
        for (std::size_t i = 0; i < g.row_count; ++i)
            if (pred->matches(g.columns, i)) out.push_back(decode_row(g, i, cost));
        return out;
    }

    void worker_loop() {
        const std::size_t window = 2 * spec.prefetch_workers;
        for (;;) {
            std::size_t idx;
            {
                std::unique_lock lock(m);
                cv.wait(lock, [&] { return stop || next_task >= groups.size() || next_task < consumer + window; });
                if (stop || next_task >= groups.size()) return;
                idx = next_task++;
            }
            Slot result;
            try {
                for (auto& r : read_rows(idx, result.cost)) {
                    Unit u;
                    u.rows.push_back(transform(std::move(r), result.cost));
                    result.units.push_back(std::move(u));
                }
            } catch (...) {
                result.error = std::current_exception();
            }
            {
                std::lock_guard lock(m);
                result.ready = true;
                slots[idx] = std::move(result);
            }
            cv.notify_all();
        }
    }

    void absorb(const StreamStats& c) {
        stats.read_s += c.read_s;
        stats.decode_s += c.decode_s;
        stats.transform_s += c.transform_s;
        stats.transform_invocations += c.transform_invocations;
    }

    std::optional<std::vector<Unit>> prefetched_batch() {
        if (consumer >= groups.size()) return std::nullopt;
        Slot s;
        {
            std::unique_lock lock(m);
            cv.wait(lock, [&] { return slots[consumer].ready; });
            s = std::move(slots[consumer]);
            slots[consumer] = Slot{};
            ++consumer;
        }
        cv.notify_all();
        if (s.error) std::rethrow_exception(s.error);
        absorb(s.cost);
        return std::move(s.units);
    }

    void build_ngrams() {
        ngrams_built = true;
        const std::size_t n = groups.size();
        std::vector<std::vector<DecodedRow>> per_group(n);
        std::vector<StreamStats> costs(n);
        core::parallel_for(n, spec.prefetch_workers, [&](std::size_t i) { per_group[i] = read_rows(i, costs[i]); });
        std::vector<DecodedRow> rows;
        for (auto& g : per_group)
            for (auto& r : g) rows.push_back(std::move(r));
        per_group.clear();
        for (const auto& c : costs) absorb(c);

        std::vector<rdb::Value> gv, ov;
        for (const auto& r : rows) {
            gv.push_back(r.value(spec.ngram->group_column));
            ov.push_back(r.value(spec.ngram->order_column));
        }
        const auto windows = ngram_windows(gv, ov, spec.ngram->n, spec.ngram->max_gap);

        std::vector<char> used(rows.size(), 0);
        for (const auto& w : windows)
            for (auto i : w) used[i] = 1;
        std::vector<std::size_t> todo;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (used[i]) todo.push_back(i);
        std::vector<StreamStats> tcost(todo.size());
        core::parallel_for(todo.size(), spec.prefetch_workers,
                           [&](std::size_t k) { rows[todo[k]] = transform(std::move(rows[todo[k]]), tcost[k]); });
        for (const auto& c : tcost) absorb(c);

        for (const auto& w : windows) {
            Unit u;
            for (auto i : w) u.rows.push_back(rows[i]);
            ngram_units.push_back(std::move(u));
        }
    }

    std::optional<std::vector<Unit>> ngram_batch() {
        if (!ngrams_built) build_ngrams();
        if (ngram_cursor >= ngram_units.size()) return std::nullopt;
        const std::size_t end = std::min(ngram_units.size(), ngram_cursor + kUnitsPerNgramBatch);
        std::vector<Unit> out(std::make_move_iterator(ngram_units.begin() + static_cast<std::ptrdiff_t>(ngram_cursor)),
                              std::make_move_iterator(ngram_units.begin() + static_cast<std::ptrdiff_t>(end)));
        ngram_cursor = end;
        return out;
    }

    std::optional<std::vector<Unit>> cached_batch() {
        if (part_cursor >= cache_parts.size()) return std::nullopt;
        const auto t0 = Clock::now();
        const core::Bytes data = core::read_file(cache_dir / cache_parts[part_cursor++]);
        std::vector<Unit> out = decode_part(data);
        stats.read_s += seconds_since(t0);
        return out;
    }

    static core::Bytes encode_part(const std::vector<Unit>& units) {
        core::Bytes out;
        auto u64 = [&](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        };
        u64(units.size());
        for (const auto& u : units) {
            const core::Bytes b = serialize_unit(u);
            u64(b.size());
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }

    static std::vector<Unit> decode_part(core::ByteSpan d) {
        std::size_t pos = 0;
        auto u64 = [&] {
            if (d.size() - pos < 8) throw CodecError("cache part: truncated");
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(d[pos + i]) << (8 * i);
            pos += 8;
            return v;
        };
        const std::uint64_t n = u64();
        std::vector<Unit> out;
        for (std::uint64_t i = 0; i < n; ++i) {
            const std::uint64_t len = u64();
            if (len > d.size() - pos) throw CodecError("cache part: truncated unit");
            out.push_back(deserialize_unit(d.subspan(pos, len)));
            pos += len;
        }
        if (pos != d.size()) throw CodecError("cache part: trailing bytes");
        return out;
    }

    void write_part(const std::vector<Unit>& units) {
        char name[32];
        std::snprintf(name, sizeof name, "part-%06zu.bin", index_parts.size());
        const core::Bytes data = encode_part(units);
        core::write_file_atomic(cache_dir / name, data);
        index_parts.push_back(
            {{"file", name}, {"units", units.size()}, {"bytes", data.size()}, {"digest", core::digest(data).hex()}});
    }

    void finish_cache() {
        json index{{"fingerprint", fp}, {"snapshot_id", snap.id}, {"parts", index_parts}};
        core::write_file_atomic(cache_dir / "index.json", index.dump(1));
        writing_cache = false;
    }

    std::optional<std::vector<Unit>> next_batch() {
        std::optional<std::vector<Unit>> b;
        if (!cache_parts.empty() || stats.from_cache) b = cached_batch();
        else if (spec.ngram) b = ngram_batch();
        else b = prefetched_batch();
        if (writing_cache) {
            if (b) write_part(*b);
            else finish_cache();
        }
        return b;
    }

    std::optional<Unit> pull() {
        while (pending.empty()) {
            if (source_done) return std::nullopt;
            auto b = next_batch();
            if (!b) {
                source_done = true;
                return std::nullopt;
            }
            for (auto& u : *b) pending.push_back(std::move(u));
        }
        Unit u = std::move(pending.front());
        pending.pop_front();
        return u;
    }

    std::optional<Unit> next() {
        std::optional<Unit> u;
        if (shuffle) {
            while (!shuffle->full()) {
                auto in = pull();
                if (!in) break;
                shuffle->push(std::move(*in));
            }
            if (!shuffle->empty()) u = shuffle->pop();
        } else {
            u = pull();
        }
        if (u) {
            ++stats.units;
            stats.rows += u->rows.size();
            stats.bytes += serialized_size(*u);
        }
        return u;
    }

    std::string compute_fingerprint() const {
        json cols = json::array();
        for (auto c : selected) cols.push_back(dataset->schema().at(c).name);
        json groups_j = json::array();
        for (const auto& g : snap.groups) groups_j.push_back(g.digest.hex());
        json t = json::array();
        for (const auto& s : spec.transforms) t.push_back({{"name", s.name}, {"args", s.args}});
        json key{{"format", 1},
                 {"dataset", spec.dataset},
                 {"snapshot_id", snap.id},
                 {"groups", groups_j},
                 {"columns", cols},
                 {"where", parse_where().to_string()},
                 {"transforms", t}};
        if (spec.ngram)
            key["ngram"] = {{"n", spec.ngram->n},
                            {"group_column", spec.ngram->group_column},
                            {"order_column", spec.ngram->order_column},
                            {"max_gap", spec.ngram->max_gap ? json(*spec.ngram->max_gap) : json(nullptr)}};
        return core::digest(key.dump()).hex();
    }

    rdb::Predicate parse_where() const { return rdb::parse_predicate(spec.where); }

    bool verify_cache() {
        const fs::path index_path = cache_dir / "index.json";
        if (!fs::exists(index_path)) return false;
        try {
            const json index = json::parse(core::read_text(index_path));
            if (index.at("fingerprint").get<std::string>() != fp) return false;
            std::vector<std::string> parts;
            for (const auto& p : index.at("parts")) {
                const std::string file = p.at("file").get<std::string>();
                const fs::path path = cache_dir / file;
                if (!fs::exists(path)) return false;
                const core::Bytes data = core::read_file(path);
                if (data.size() != p.at("bytes").get<std::size_t>() ||
                    core::digest(data).hex() != p.at("digest").get<std::string>())
                    return false;
                parts.push_back(file);
            }
            cache_parts = std::move(parts);
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }

    void open_cache() {
        std::error_code ec;
        fs::create_directories(spec.cache.directory, ec);
        const fs::path probe = spec.cache.directory / ".write-probe";
        {
            std::ofstream out(probe);
            out << "probe";
            if (ec || !out) throw IoError("cache directory unwritable: " + spec.cache.directory.string());
        }
        fs::remove(probe, ec);
        cache_dir = spec.cache.directory / fp;
        if (verify_cache()) {
            stats.from_cache = true;
            return;
        }
        if (fs::exists(cache_dir / "index.json")) stats.cache_rebuilt = true;
        fs::remove_all(cache_dir);
        fs::create_directories(cache_dir);
        writing_cache = true;
    }
};

Stream::Stream(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Stream::~Stream() = default;
std::optional<Unit> Stream::next() { return impl_->next(); }
const StreamStats& Stream::stats() const { return impl_->stats; }
std::uint64_t Stream::snapshot_id() const { return impl_->snap.id; }
const std::string& Stream::fingerprint() const { return impl_->fp; }

std::unique_ptr<Stream> open_stream(const rdb::Database& db, const StreamSpec& spec, const TransformRegistry& registry) {
    spec.validate();
    registry.validate(spec.transforms);
    auto impl = std::make_unique<Stream::Impl>();
    impl->spec = spec;
    for (auto& t : impl->spec.transforms)
        if (t.args.is_null()) t.args = json::object();
    impl->registry = registry;
    if (!db.exists(spec.dataset)) throw QueryError("unknown dataset: " + spec.dataset);
    impl->dataset.emplace(db.root() / spec.dataset);
    const rdb::Dataset& ds = *impl->dataset;
    impl->snap = ds.snapshot(spec.snapshot ? *spec.snapshot : ds.latest_id());

    const rdb::Schema& schema = ds.schema();
    std::vector<std::string> cols = spec.columns;
    if (cols.empty())
        for (const auto& c : schema.columns()) cols.push_back(c.name);
    if (spec.ngram)
        for (const auto& extra : {spec.ngram->group_column, spec.ngram->order_column})
            if (std::find(cols.begin(), cols.end(), extra) == cols.end()) cols.push_back(extra);
    for (const auto& c : cols) {
        const std::size_t i = schema.index_of(c);
        if (std::find(impl->selected.begin(), impl->selected.end(), i) != impl->selected.end())
            throw ValidationError("columns", "duplicate column '" + c + "'");
        impl->selected.push_back(i);
    }
    if (spec.ngram)
        for (const auto& extra : {spec.ngram->group_column, spec.ngram->order_column})
            if (schema.at(schema.index_of(extra)).type == rdb::ColumnType::bytes)
                throw ValidationError("ngram", "column '" + extra + "' cannot be a payload column");
    impl->pred.emplace(schema, impl->parse_where());
    impl->wanted.assign(schema.size(), false);
    for (auto c : impl->selected) impl->wanted[c] = true;
    for (auto c : impl->pred->columns()) impl->wanted[c] = true;

    impl->stats.groups_total = impl->snap.groups.size();
    for (const auto& g : impl->snap.groups) {
        if (impl->pred->may_match(g.stats, g.rows)) impl->groups.push_back(&g);
        else ++impl->stats.groups_skipped;
    }
    impl->fp = impl->compute_fingerprint();
    if (spec.cache.enabled) impl->open_cache();
    if (spec.shuffle) impl->shuffle.emplace(spec.shuffle->seed, spec.shuffle->buffer_rows);

    if (!impl->stats.from_cache && !spec.ngram) {
        impl->slots.resize(impl->groups.size());
        const std::size_t n = std::min(spec.prefetch_workers, std::max<std::size_t>(1, impl->groups.size()));
        for (std::size_t i = 0; i < n; ++i) impl->workers.emplace_back([p = impl.get()] { p->worker_loop(); });
    }
    return std::make_unique<Stream>(std::move(impl));
}

// ---- bench ---------------------------------------------------------------------

std::string ThroughputReport::to_json() const {
    json p = json::array();
    for (const auto& r : passes)
        p.push_back({{"units", r.units},
                     {"rows", r.rows},
                     {"bytes", r.bytes},
                     {"transform_invocations", r.transform_invocations},
                     {"from_cache", r.from_cache},
                     {"wall_s", r.wall_s},
                     {"rows_per_s", r.rows_per_s},
                     {"bytes_per_s", r.bytes_per_s},
                     {"stage_cpu_s", {{"read", r.read_s}, {"decode", r.decode_s}, {"transform", r.transform_s}}}});
    return json{{"fingerprint", fingerprint},
                {"snapshot_id", snapshot_id},
                {"prefetch_workers", prefetch_workers},
                {"passes", p}}
        .dump(2);
}

std::string ThroughputReport::to_text() const {
    std::ostringstream out;
    out << "snapshot " << snapshot_id << ", prefetch_workers " << prefetch_workers << "\n";
    out << "pass  units      rows       bytes  cache  wall_s     rows/s       MB/s  transforms\n";
    for (std::size_t i = 0; i < passes.size(); ++i) {
        const auto& r = passes[i];
        char line[256];
        std::snprintf(line, sizeof line, "%4zu %6llu %9llu %11llu  %5s %7.3f %10.0f %10.2f  %llu\n", i + 1,
                      static_cast<unsigned long long>(r.units), static_cast<unsigned long long>(r.rows),
                      static_cast<unsigned long long>(r.bytes), r.from_cache ? "hit" : "miss", r.wall_s, r.rows_per_s,
                      r.bytes_per_s / 1e6, static_cast<unsigned long long>(r.transform_invocations));
        out << line;
    }
    return out.str();
}

ThroughputReport bench_stream(const rdb::Database& db, const StreamSpec& spec, std::size_t passes,
                              const TransformRegistry& registry) {
    ThroughputReport report;
    report.prefetch_workers = spec.prefetch_workers;
    for (std::size_t p = 0; p < passes; ++p) {
        const auto t0 = Clock::now();
        auto stream = open_stream(db, spec, registry);
        while (stream->next()) {
        }
        const double wall = std::max(seconds_since(t0), 1e-9);
        const StreamStats& s = stream->stats();
        report.fingerprint = stream->fingerprint();
        report.snapshot_id = stream->snapshot_id();
        report.passes.push_back({s.units, s.rows, s.bytes, s.transform_invocations, s.from_cache, wall,
                                 static_cast<double>(s.rows) / wall, static_cast<double>(s.bytes) / wall, s.read_s,
                                 s.decode_s, s.transform_s});
    }
    return report;
}

}  // namespace avs::client
