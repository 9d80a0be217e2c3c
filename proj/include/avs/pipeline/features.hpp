#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "avs/core/types.hpp"

namespace avs::pipeline {

enum class FeatureStatus { empty, computed, failed };
std::string_view to_string(FeatureStatus s);

using FeatureValue = std::variant<std::monostate, double, std::int64_t, core::Box, std::vector<double>>;

struct FeatureSlot {
    FeatureStatus status = FeatureStatus::empty;
    FeatureValue value;
    double cost_ms = 0;
    std::string reason;

    friend bool operator==(const FeatureSlot&, const FeatureSlot&) = default;
};

/// Per-item metadata object. Created with every applicable feature empty;
/// slots only move empty -> computed | failed.
struct FeatureRecord {
    core::ObjectKey item_key;
    std::uint32_t schema_version = 1;
    std::map<std::string, FeatureSlot> features;

    static FeatureRecord make_template(const core::ObjectKey& item_key, std::uint32_t schema_version,
                                       const std::vector<std::string>& feature_names);
    /// Throws StateError unless the slot is empty.
    void fill(const std::string& name, FeatureSlot slot);
    bool complete() const;

    std::string to_json() const;
    static FeatureRecord from_json(std::string_view text);

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

/// <item path in zone features>.v<version>
std::string feature_path(const core::ObjectKey& item_key, std::uint32_t schema_version);

}  // namespace avs::pipeline
