#include "avs/pipeline/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/media/codecs.hpp"

namespace avs::pipeline {

using core::Bytes;
using core::ObjectKey;
using transfer::ObjectStore;

void PoolConfig::validate() const {
    if (min_workers == 0) throw ValidationError("min_workers", "must be at least 1");
    if (max_workers < min_workers) throw ValidationError("max_workers", "must be >= min_workers");
    if (target_backlog_per_worker == 0) throw ValidationError("target_backlog_per_worker", "must be positive");
}

std::uint32_t autoscale(const PoolConfig& pool, std::size_t depth) {
    pool.validate();
    const std::size_t want = (depth + pool.target_backlog_per_worker - 1) / pool.target_backlog_per_worker;
    return static_cast<std::uint32_t>(
        std::clamp<std::size_t>(want, pool.min_workers, pool.max_workers));
}

std::string PipelineReport::to_json() const {
    nlohmann::json scale = nlohmann::json::array();
    for (const auto& e : scaling) scale.push_back({{"t", e.time_s}, {"depth", e.depth}, {"workers", e.workers}});
    nlohmann::json dead = nlohmann::json::array();
    for (const auto& d : dead_letters)
        dead.push_back({{"queue", d.queue}, {"key", d.key}, {"deliveries", d.deliveries}, {"reason", d.reason}});
    return nlohmann::json{{"items_in", items_in},
                          {"converted", converted},
                          {"completed", completed},
                          {"dead_lettered", dead_lettered},
                          {"redeliveries", redeliveries},
                          {"crashes", crashes},
                          {"record_writes", record_writes},
                          {"busy_s", busy_s},
                          {"idle_s", idle_s},
                          {"function_s", function_s},
                          {"elapsed_s", elapsed_s},
                          {"cost", cost},
                          {"accelerated", accelerated},
                          {"scaling", scale},
                          {"dead_letters", dead}}
        .dump(2);
}

namespace {

template <class T>
void require_equal(const T& a, const T& b, const char* what) {
    if (a != b) throw CodecError(std::string("conversion is not lossless: ") + what);
}

}  // namespace

core::DataItem convert_format(ObjectStore& store, const ObjectKey& raw_key) {
    if (raw_key.zone != core::Zone::raw) throw ValidationError("key", "conversion input must be a raw key");
    const Bytes raw = store.get(raw_key.path());
    const auto fmt = media::sniff_format(raw);
    if (!fmt) throw CodecError("unrecognized payload format for " + raw_key.path());
    Bytes out;
    core::MediaFormat out_fmt = *fmt;
    switch (*fmt) {
        case core::MediaFormat::tiff: {
            const media::Image img = media::decode_tiff(raw);
            out = media::encode_png(img);
            const media::Image back = media::decode_png(out);
            require_equal(back.samples, img.samples, "png samples");
            out_fmt = core::MediaFormat::png;
            break;
        }
        case core::MediaFormat::wav: {
            const media::Audio a = media::decode_wav(raw);
            out = media::encode_flac(a);
            require_equal(media::decode_flac(out).samples, a.samples, "flac samples");
            out_fmt = core::MediaFormat::flac;
            break;
        }
        case core::MediaFormat::vitals_csv: {
            core::VitalsRecord::from_csv(std::string(raw.begin(), raw.end())).validate();
            out = raw;
            break;
        }
        default: throw CodecError("unexpected raw format " + std::string(core::to_string(*fmt)));
    }
    const ObjectKey conv = raw_key.with_zone(core::Zone::converted);
    store.put(conv.path(), out);
    return core::DataItem::make(conv, 0, out_fmt, std::move(out));
}

FeatureRecord generate_metadata(ObjectStore& store, const ExtractorRegistry& registry, const ObjectKey& raw_key) {
    const ObjectKey conv = raw_key.with_zone(core::Zone::converted);
    if (!store.exists(conv.path())) throw Error("converted item missing for " + raw_key.path());
    const std::string path = feature_path(raw_key, registry.schema_version());
    if (auto existing = store.try_get(path)) return FeatureRecord::from_json(std::string(existing->begin(), existing->end()));
    std::vector<std::string> names;
    for (const ExtractorSpec* s : registry.for_modality(core::modality_of(raw_key.channel))) names.push_back(s->name);
    FeatureRecord rec = FeatureRecord::make_template(raw_key, registry.schema_version(), names);
    store.put(path, core::as_bytes(rec.to_json()));
    return rec;
}

ExtractResult extract_features(ObjectStore& store, const ExtractorRegistry& registry, const ObjectKey& raw_key,
                               bool accelerated) {
    const std::string path = feature_path(raw_key, registry.schema_version());
    const auto text = store.try_get(path);
    if (!text) throw Error("feature template missing for " + raw_key.path());
    ExtractResult r{FeatureRecord::from_json(std::string(text->begin(), text->end())), false};
    if (r.record.complete()) return r;

    const Bytes conv = store.get(raw_key.with_zone(core::Zone::converted).path());
    ExtractorInput in;
    in.key = raw_key;
    std::optional<media::Image> image;
    std::optional<media::Audio> audio;
    std::optional<core::VitalsRecord> vitals;
    switch (core::modality_of(raw_key.channel)) {
        case core::Modality::image:
            image = media::decode_png(conv);
            in.image = &*image;
            in.previous_frame = [&store, raw_key]() -> std::optional<media::Image> {
                ObjectKey prev = raw_key;
                --prev.sequence;
                auto bytes = store.try_get(prev.path());
                if (!bytes) return std::nullopt;
                return media::decode_tiff(*bytes);
            };
            break;
        case core::Modality::audio:
            audio = media::decode_flac(conv);
            in.audio = &*audio;
            break;
        case core::Modality::vitals:
            vitals = core::VitalsRecord::from_csv(std::string(conv.begin(), conv.end()));
            in.vitals = &*vitals;
            break;
    }
    for (auto& [name, slot] : r.record.features) {
        if (slot.status != FeatureStatus::empty) continue;
        const ExtractorSpec& spec = registry.get(name);
        FeatureSlot filled;
        filled.cost_ms = spec.cost_ms(accelerated);
        try {
            filled.value = spec.fn(in);
            filled.status = FeatureStatus::computed;
        } catch (const ExtractionFailed& e) {
            filled.status = FeatureStatus::failed;
            filled.reason = e.what();
        } catch (const CodecError& e) {
            filled.status = FeatureStatus::failed;
            filled.reason = e.what();
        }
        r.record.fill(name, std::move(filled));
    }
    store.put(path, core::as_bytes(r.record.to_json()));
    r.wrote = true;
    return r;
}

Pipeline::Pipeline(ObjectStore& store, ExtractorRegistry registry, PipelineConfig cfg)
    : store_(store),
      registry_(std::move(registry)),
      cfg_(cfg),
      entry_("entry", cfg.visibility_timeout_s, cfg.max_deliveries),
      metadata_("metadata", cfg.visibility_timeout_s, cfg.max_deliveries),
      processing_("processing", cfg.visibility_timeout_s, cfg.max_deliveries) {
    cfg_.pool.validate();
}

void Pipeline::attach() {
    store_.set_on_created([this](const std::string& path) {
        if (ObjectStore::is_raw_path(path)) on_object_created(path);
    });
}

bool Pipeline::on_object_created(const std::string& path) {
    if (!ObjectStore::is_raw_path(path)) throw ValidationError("key", "not a raw object key: " + path);
    if (!store_.exists(path)) throw ValidationError("key", "no such object: " + path);
    const bool fresh = entry_.send(path, path, now_);
    if (fresh) ++items_in_;
    return fresh;
}

std::size_t Pipeline::enqueue_existing() {
    std::size_t n = 0;
    for (const auto& k : store_.list_zone(core::Zone::raw))
        if (on_object_created(k.path())) ++n;
    return n;
}

std::size_t Pipeline::replay_dead_letters() {
    return entry_.replay_dead_letters(now_) + metadata_.replay_dead_letters(now_) +
           processing_.replay_dead_letters(now_);
}

namespace {

enum class Stage { convert, metadata, extract };

struct Task {
    Stage stage = Stage::convert;
    DurableQueue* queue = nullptr;
    QueueMessage msg;
    double cost_s = 0;
    bool crash = false;
    bool crash_after_write = false;
    // outcome
    bool ok = false;
    bool wrote = false;
    bool complete = false;
    std::string error;
};

Task make_task(Stage stage, DurableQueue* q, QueueMessage msg, double cost_s) {
    Task t;
    t.stage = stage;
    t.queue = q;
    t.msg = std::move(msg);
    t.cost_s = cost_s;
    return t;
}

double unit_hash(std::uint64_t seed, const std::string& key) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    for (unsigned char c : key) h = (h ^ c) * 0x100000001b3ULL;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace

PipelineReport Pipeline::run_until_drained(const FaultPlan& plan) {
    if (plan.crash_fraction < 0 || plan.crash_fraction > 1) throw ValidationError("crash_fraction", "must be in [0,1]");
    PipelineReport rep;
    rep.accelerated = cfg_.accelerated;
    const double start = now_;
    std::uint64_t crashes = 0, writes = 0;
    std::uint32_t workers = cfg_.pool.min_workers;

    auto extract_cost_s = [&](const ObjectKey& k) {
        double ms = 0;
        for (const ExtractorSpec* s : registry_.for_modality(core::modality_of(k.channel)))
            ms += s->cost_ms(cfg_.accelerated);
        return ms / 1000.0;
    };

    while (!entry_.empty() || !metadata_.empty() || !processing_.empty()) {
        std::vector<Task> tasks;
        while (auto m = entry_.receive(now_))
            tasks.push_back(make_task(Stage::convert, &entry_, std::move(*m), cfg_.convert_ms / 1000.0));
        while (auto m = metadata_.receive(now_))
            tasks.push_back(make_task(Stage::metadata, &metadata_, std::move(*m), cfg_.metadata_ms / 1000.0));

        const std::size_t depth = processing_.visible(now_);
        const std::uint32_t w = autoscale(cfg_.pool, depth);
        if (w != workers || rep.scaling.empty()) rep.scaling.push_back({now_, depth, w});
        workers = w;
        for (std::uint32_t i = 0; i < workers; ++i) {
            auto m = processing_.receive(now_);
            if (!m) break;
            const double cost = extract_cost_s(core::parse_key(m->body));
            Task t = make_task(Stage::extract, &processing_, std::move(*m), cost);
            if (unit_hash(plan.seed, t.msg.body) < plan.crash_fraction &&
                t.msg.delivery_count <= plan.crashes_per_victim) {
                t.crash = true;
                t.crash_after_write =
                    plan.point == FaultPlan::CrashPoint::after_write ||
                    (plan.point == FaultPlan::CrashPoint::mixed && unit_hash(plan.seed + 1, t.msg.body) < 0.5);
            }
            tasks.push_back(std::move(t));
        }

        if (tasks.empty()) {
            std::optional<double> next;
            for (const DurableQueue* q : {&entry_, &metadata_, &processing_})
                if (auto v = q->next_visible_at(); v && (!next || *v < *next)) next = v;
            if (!next || *next <= now_) break;
            rep.idle_s += workers * (*next - now_);
            now_ = *next;
            continue;
        }

        core::parallel_for(tasks.size(), cfg_.threads, [&](std::size_t i) {
            Task& t = tasks[i];
            try {
                const ObjectKey k = core::parse_key(t.msg.body);
                switch (t.stage) {
                    case Stage::convert: convert_format(store_, k); break;
                    case Stage::metadata: generate_metadata(store_, registry_, k); break;
                    case Stage::extract: {
                        if (t.crash && !t.crash_after_write) return;
                        const ExtractResult r = extract_features(store_, registry_, k, cfg_.accelerated);
                        t.wrote = r.wrote;
                        t.complete = r.record.complete();
                        if (t.crash) return;
                        break;
                    }
                }
                t.ok = true;
            } catch (const std::exception& e) {
                t.error = e.what();
            }
        });

        double round_s = 0, busy = 0;
        for (Task& t : tasks) {
            round_s = std::max(round_s, t.cost_s);
            if (t.stage == Stage::extract) {
                busy += t.cost_s;
                if (t.wrote) ++writes;
                if (t.crash) {
                    ++crashes;
                    continue;
                }
            } else {
                rep.function_s += t.cost_s;
            }
            if (!t.ok) {
                t.queue->fail(t.msg.receipt, t.error);
                continue;
            }
            switch (t.stage) {
                case Stage::convert:
                    converted_.insert(t.msg.body);
                    metadata_.send(t.msg.body, t.msg.body, now_);
                    break;
                case Stage::metadata: processing_.send(t.msg.body, t.msg.body, now_); break;
                case Stage::extract:
                    if (t.complete) completed_.insert(t.msg.body);
                    break;
            }
            t.queue->remove(t.msg.receipt);
        }
        round_s = std::max(round_s, 1e-3);
        rep.busy_s += busy;
        rep.idle_s += workers * round_s - busy;
        now_ += round_s;
    }

    rep.items_in = items_in_;
    rep.converted = converted_.size();
    rep.completed = completed_.size();
    rep.crashes = crashes;
    rep.record_writes = writes;
    rep.redeliveries = entry_.redeliveries() + metadata_.redeliveries() + processing_.redeliveries();
    for (const DurableQueue* q : {&entry_, &metadata_, &processing_})
        for (const auto& d : q->dead_letters())
            rep.dead_letters.push_back({q->name(), d.dedup_key, d.delivery_count, d.reason});
    rep.dead_lettered = rep.dead_letters.size();
    rep.elapsed_s = now_ - start;
    const double price = cfg_.accelerated ? cfg_.prices.accelerated_worker_per_hour : cfg_.prices.cpu_worker_per_hour;
    rep.cost = (rep.busy_s + rep.idle_s) / 3600.0 * price;
    return rep;
}

}  // namespace avs::pipeline
