#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "avs/core/types.hpp"

namespace avs::core {

/// One reading from the bedside vitals monitor. HR/RR are continuous; SpO2 and
/// blood pressure come from spot checks and are usually absent.
struct VitalsRecord {
    TimestampMs timestamp = 0;
    double hr = 0;
    double rr = 0;
    std::optional<double> spo2;
    std::optional<double> bp_systolic;
    std::optional<double> bp_diastolic;

    void validate() const;

    /// Two-line CSV: fixed header, then one row. Missing optionals are empty cells.
    std::string to_csv() const;
    static VitalsRecord from_csv(std::string_view csv);

    friend bool operator==(const VitalsRecord&, const VitalsRecord&) = default;
};

inline constexpr std::string_view kVitalsCsvHeader = "timestamp_ms,hr,rr,spo2,bp_systolic,bp_diastolic";

enum class Gender { female, male, other, unknown };
std::string_view to_string(Gender g);
Gender parse_gender(std::string_view s);

struct ObfuscatedBody {
    std::string age_range;
    std::string weight_range;
    std::string height_range;

    friend bool operator==(const ObfuscatedBody&, const ObfuscatedBody&) = default;
};

/// Discretizes exact age (years), weight (kg) and height (cm) to 10-unit
/// buckets: "40-49", "80-89 kg", "170-179 cm".
ObfuscatedBody obfuscate(double exact_age, double exact_weight, double exact_height);

/// Research-visible health record. Holds bucket strings only.
struct HealthRecord {
    std::string subject_id;
    std::string age_range;
    Gender gender = Gender::unknown;
    std::string weight_range;
    std::string height_range;
    std::vector<std::string> conditions;

    friend bool operator==(const HealthRecord&, const HealthRecord&) = default;
};

HealthRecord make_health_record(std::string subject_id, double age, Gender gender, double weight, double height,
                                std::vector<std::string> conditions);

/// Column or field names reserved for identifying information. Research
/// schemas may not use them.
bool is_pii_name(std::string_view name);

}  // namespace avs::core
