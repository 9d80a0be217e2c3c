// avstudy: simulate, ingest, build, query, stream and report on a study.
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avs/client/stream.hpp"
#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"
#include "avs/rdb/dataset.hpp"
#include "avs/study/study.hpp"

namespace fs = std::filesystem;
using namespace avs;

namespace {

enum Exit { kOk = 0, kDataLoss = 1, kInvalid = 2, kFault = 3 };

struct Globals {
    double time_scale = 0;
    std::string json_out;
};

void emit(const Globals& g, const std::string& text, const std::string& json) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    if (!g.json_out.empty()) core::write_file_atomic(g.json_out, json + "\n");
}

std::string query_text(const rdb::ScanResult& r, std::size_t shown) {
    std::ostringstream o;
    for (std::size_t i = 0; i < r.columns.size(); ++i) o << (i ? "\t" : "") << r.columns[i];
    o << '\n';
    for (std::size_t k = 0; k < std::min(shown, r.rows.size()); ++k) {
        for (std::size_t i = 0; i < r.rows[k].size(); ++i) o << (i ? "\t" : "") << rdb::to_display(r.rows[k][i]);
        o << '\n';
    }
    o << "(" << r.rows.size() << " rows; groups read " << r.stats.groups_read << " of " << r.stats.groups_total
      << ", skipped " << r.stats.groups_skipped << ")\n";
    return o.str();
}

std::string query_json(const rdb::ScanResult& r, std::size_t shown) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < std::min(shown, r.rows.size()); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (const auto& v : r.rows[k]) row.push_back(rdb::value_to_json(v));
        rows.push_back(std::move(row));
    }
    return nlohmann::json{{"columns", r.columns},
                          {"rows", rows},
                          {"matched", r.rows.size()},
                          {"groups_total", r.stats.groups_total},
                          {"groups_read", r.stats.groups_read},
                          {"groups_skipped", r.stats.groups_skipped}}
        .dump(2);
}

std::vector<std::string> split_columns(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string c; std::getline(ss, c, ',');)
        if (!c.empty()) out.push_back(c);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ambient-sensing study toolkit"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--time-scale", g.time_scale, "Virtual seconds per wall second; 0 runs unthrottled")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--json-out", g.json_out, "Also write the result as JSON to this file");

    std::function<int()> action;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run every planned session and write sealed disks");
    std::string config_file, out_dir;
    sim->add_option("--config", config_file, "Study config JSON")->required();
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->fallthrough();
    sim->callback([&] {
        action = [&] {
            const auto cfg = study::StudyConfig::load(config_file);
            const auto s = study::simulate(cfg, out_dir, g.time_scale);
            emit(g, s.to_json(), s.to_json());
            return kOk;
        };
    });

    // ingest
    auto* ing = app.add_subcommand("ingest", "Transfer disks into the store and drain the pipeline");
    std::string in_dir, store_dir, mode = "network", faults_file;
    bool retry = false;
    ing->add_option("--in", in_dir, "Directory written by simulate")->required();
    ing->add_option("--store", store_dir, "Object store root")->required();
    ing->add_option("--mode", mode, "network or courier")->check(CLI::IsMember({"network", "courier"}));
    ing->add_option("--faults", faults_file, "Fault plan JSON");
    ing->add_flag("--retry-quarantined", retry, "Re-send quarantined items once after upload");
    ing->fallthrough();
    ing->callback([&] {
        action = [&] {
            study::IngestFaults faults;
            if (!faults_file.empty()) faults = study::IngestFaults::load(faults_file);
            transfer::ObjectStore store(store_dir);
            const auto s = study::ingest(in_dir, store, study::parse_ingest_mode(mode), faults, retry, g.time_scale);
            emit(g, s.to_text(), s.to_json());
            return s.data_loss() ? kDataLoss : kOk;
        };
    });

    // rdb
    auto* rdbc = app.add_subcommand("rdb", "Build, publish and query datasets");
    rdbc->require_subcommand(1);
    rdbc->fallthrough();
    std::string db_dir;
    std::uint64_t group_rows = rdb::kDefaultGroupRows;
    bool no_publish = false;
    auto* build = rdbc->add_subcommand("build", "Map stored sessions into datasets");
    build->add_option("--store", store_dir, "Object store root")->required();
    build->add_option("--db", db_dir, "Database root")->required();
    build->add_option("--group-rows", group_rows, "Rows per row group")->check(CLI::PositiveNumber);
    build->add_flag("--no-publish", no_publish, "Stage rows without publishing");
    build->fallthrough();
    build->callback([&] {
        action = [&] {
            transfer::ObjectStore store(store_dir);
            const auto s = study::build_datasets(store, db_dir, group_rows, !no_publish);
            emit(g, s.to_json(), s.to_json());
            return kOk;
        };
    });

    std::vector<std::string> only;
    auto* pub = rdbc->add_subcommand("publish", "Publish staged rows");
    pub->add_option("--db", db_dir, "Database root")->required();
    pub->add_option("--dataset", only, "Dataset to publish (repeatable; default all)");
    pub->fallthrough();
    pub->callback([&] {
        action = [&] {
            const nlohmann::json j = study::publish_datasets(db_dir, only);
            emit(g, j.dump(2), j.dump(2));
            return kOk;
        };
    });

    std::string dataset, where, columns, count_by;
    std::optional<std::uint64_t> snapshot;
    std::size_t limit = 20;
    std::vector<std::string> filters;
    bool no_prune = false;
    auto* q = rdbc->add_subcommand("query", "Filter rows or count by a column");
    q->add_option("--db", db_dir, "Database root")->required();
    q->add_option("--dataset", dataset, "Dataset name")->required();
    q->add_option("--where", where, "Filter expression");
    q->add_option("--columns", columns, "Comma-separated projection");
    q->add_option("--snapshot", snapshot, "Snapshot id (default latest)");
    q->add_option("--limit", limit, "Rows to print");
    q->add_option("--count-by", count_by, "Group column for counting");
    q->add_option("--filter", filters, "Count filter (repeatable)");
    q->add_flag("--no-prune", no_prune, "Read every row group");
    q->fallthrough();
    q->callback([&] {
        action = [&] {
            rdb::Database db(db_dir);
            const rdb::Dataset ds = db.open(dataset);
            const rdb::Snapshot snap = ds.snapshot(snapshot.value_or(ds.latest_id()));
            if (!count_by.empty()) {
                std::vector<rdb::Predicate> ps;
                for (const auto& f : filters) ps.push_back(rdb::parse_predicate(f));
                if (!where.empty())
                    for (auto& p : ps) p = rdb::parse_predicate(where) && p;
                if (ps.empty() && !where.empty()) ps.push_back(rdb::parse_predicate(where));
                const auto t = ds.count_by(snap, count_by, ps);
                emit(g, t.to_text(), t.to_json());
                return kOk;
            }
            if (!filters.empty()) throw ValidationError("--filter", "requires --count-by");
            const auto r = ds.scan(snap, split_columns(columns), rdb::parse_predicate(where), {!no_prune});
            emit(g, query_text(r, limit), query_json(r, limit));
            return kOk;
        };
    });

    // stream
    auto* str = app.add_subcommand("stream", "Streaming client tools");
    str->require_subcommand(1);
    str->fallthrough();
    std::string spec_file;
    std::size_t passes = 2;
    auto* bench = str->add_subcommand("bench", "Measure stream throughput over repeated passes");
    bench->add_option("--db", db_dir, "Database root")->required();
    bench->add_option("--spec", spec_file, "Stream spec JSON")->required();
    bench->add_option("--passes", passes, "Number of passes")->check(CLI::PositiveNumber);
    bench->fallthrough();
    bench->callback([&] {
        action = [&] {
            rdb::Database db(db_dir);
            const auto spec = client::StreamSpec::from_json(core::read_text(spec_file));
            const auto r = client::bench_stream(db, spec, passes);
            emit(g, r.to_text(), r.to_json());
            return kOk;
        };
    });

    // report
    auto* rep = app.add_subcommand("report", "Summarize an ingested study");
    rep->add_option("--store", store_dir, "Object store root")->required();
    rep->fallthrough();
    rep->callback([&] {
        action = [&] {
            if (!fs::exists(store_dir)) throw ValidationError("--store", store_dir + " does not exist");
            const auto r = study::make_report(transfer::ObjectStore(store_dir));
            emit(g, r.to_text(), r.to_json());
            return kOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }
    try {
        return action();
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const QueryError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "fault: " << e.what() << '\n';
        return kFault;
    }
}
