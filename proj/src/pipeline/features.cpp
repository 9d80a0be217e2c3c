#include "avs/pipeline/features.hpp"

#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"

namespace avs::pipeline {

using nlohmann::json;

std::string_view to_string(FeatureStatus s) {
    switch (s) {
        case FeatureStatus::empty: return "empty";
        case FeatureStatus::computed: return "computed";
        case FeatureStatus::failed: return "failed";
    }
    return "?";
}

namespace {

FeatureStatus parse_status(const std::string& s) {
    if (s == "empty") return FeatureStatus::empty;
    if (s == "computed") return FeatureStatus::computed;
    if (s == "failed") return FeatureStatus::failed;
    throw ParseError("unknown feature status: " + s);
}

json value_to_json(const FeatureValue& v) {
    struct Visitor {
        json operator()(std::monostate) const { return nullptr; }
        json operator()(double d) const { return {{"type", "float64"}, {"v", d}}; }
        json operator()(std::int64_t i) const { return {{"type", "int64"}, {"v", i}}; }
        json operator()(const core::Box& b) const { return {{"type", "box4"}, {"v", {b.x, b.y, b.w, b.h}}}; }
        json operator()(const std::vector<double>& xs) const { return {{"type", "vector"}, {"v", xs}}; }
    };
    return std::visit(Visitor{}, v);
}

FeatureValue value_from_json(const json& j) {
    if (j.is_null()) return std::monostate{};
    const std::string type = j.at("type").get<std::string>();
    const json& v = j.at("v");
    if (type == "float64") return v.get<double>();
    if (type == "int64") return v.get<std::int64_t>();
    if (type == "box4") return core::Box{v.at(0).get<int>(), v.at(1).get<int>(), v.at(2).get<int>(), v.at(3).get<int>()};
    if (type == "vector") return v.get<std::vector<double>>();
    throw ParseError("unknown feature value type: " + type);
}

}  // namespace

FeatureRecord FeatureRecord::make_template(const core::ObjectKey& item_key, std::uint32_t schema_version,
                                           const std::vector<std::string>& names) {
    FeatureRecord r;
    r.item_key = item_key;
    r.schema_version = schema_version;
    for (const auto& n : names) r.features.emplace(n, FeatureSlot{});
    return r;
}

void FeatureRecord::fill(const std::string& name, FeatureSlot slot) {
    auto it = features.find(name);
    if (it == features.end()) throw StateError("feature " + name + " not in template");
    if (it->second.status != FeatureStatus::empty) throw StateError("feature " + name + " already filled");
    if (slot.status == FeatureStatus::empty) throw StateError("feature " + name + " cannot be refilled as empty");
    it->second = std::move(slot);
}

bool FeatureRecord::complete() const {
    for (const auto& [_, s] : features)
        if (s.status == FeatureStatus::empty) return false;
    return true;
}

std::string FeatureRecord::to_json() const {
    json f = json::object();
    for (const auto& [name, s] : features) {
        json j = {{"status", to_string(s.status)}, {"value", value_to_json(s.value)}, {"cost_ms", s.cost_ms}};
        if (!s.reason.empty()) j["reason"] = s.reason;
        f[name] = std::move(j);
    }
    return json{{"item_key", item_key.path()}, {"schema_version", schema_version}, {"features", f}}.dump(1);
}

FeatureRecord FeatureRecord::from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        FeatureRecord r;
        r.item_key = core::parse_key(j.at("item_key").get<std::string>());
        r.schema_version = j.at("schema_version").get<std::uint32_t>();
        for (const auto& [name, s] : j.at("features").items()) {
            FeatureSlot slot;
            slot.status = parse_status(s.at("status").get<std::string>());
            slot.value = value_from_json(s.at("value"));
            slot.cost_ms = s.at("cost_ms").get<double>();
            slot.reason = s.value("reason", "");
            r.features.emplace(name, std::move(slot));
        }
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("feature record: ") + e.what());
    }
}

std::string feature_path(const core::ObjectKey& item_key, std::uint32_t schema_version) {
    return item_key.with_zone(core::Zone::features).path() + ".v" + std::to_string(schema_version);
}

}  // namespace avs::pipeline
