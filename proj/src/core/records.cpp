#include "avs/core/records.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "avs/core/errors.hpp"

namespace avs::core {
namespace {

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::string_view s) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("vitals csv: field " + std::string(field) + " '" + std::string(s) + "' is not a number");
    return v;
}

std::optional<double> parse_opt(std::string_view field, std::string_view s) {
    if (s.empty()) return std::nullopt;
    return parse_double(field, s);
}

std::string bucket(double v) {
    const long lo = static_cast<long>(std::floor(v / 10.0)) * 10;
    return std::to_string(lo) + "-" + std::to_string(lo + 9);
}

}  // namespace

void VitalsRecord::validate() const {
    if (!(hr > 0) || !std::isfinite(hr)) throw ValidationError("hr", "must be positive");
    if (!(rr > 0) || !std::isfinite(rr)) throw ValidationError("rr", "must be positive");
    if (spo2 && !(*spo2 >= 0 && *spo2 <= 100)) throw ValidationError("spo2", "must be within [0, 100]");
    if (bp_systolic && !(*bp_systolic > 0)) throw ValidationError("bp_systolic", "must be positive");
    if (bp_diastolic && !(*bp_diastolic > 0)) throw ValidationError("bp_diastolic", "must be positive");
    if (bp_systolic && bp_diastolic && !(*bp_systolic > *bp_diastolic))
        throw ValidationError("bp_systolic", "must exceed bp_diastolic");
}

std::string VitalsRecord::to_csv() const {
    std::string out(kVitalsCsvHeader);
    out += '\n';
    out += std::to_string(timestamp) + "," + fmt_num(hr) + "," + fmt_num(rr) + "," + fmt_opt(spo2) + "," +
           fmt_opt(bp_systolic) + "," + fmt_opt(bp_diastolic) + "\n";
    return out;
}

VitalsRecord VitalsRecord::from_csv(std::string_view csv) {
    const auto lines = split(csv, '\n');
    if (lines.size() < 2 || lines[0] != kVitalsCsvHeader) throw ParseError("vitals csv: missing or wrong header");
    const auto cells = split(lines[1], ',');
    if (cells.size() != 6) throw ParseError("vitals csv: expected 6 cells, got " + std::to_string(cells.size()));
    VitalsRecord r;
    std::int64_t ts = 0;
    const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), ts);
    if (ec != std::errc{} || ptr != cells[0].data() + cells[0].size())
        throw ParseError("vitals csv: bad timestamp '" + std::string(cells[0]) + "'");
    r.timestamp = ts;
    r.hr = parse_double("hr", cells[1]);
    r.rr = parse_double("rr", cells[2]);
    r.spo2 = parse_opt("spo2", cells[3]);
    r.bp_systolic = parse_opt("bp_systolic", cells[4]);
    r.bp_diastolic = parse_opt("bp_diastolic", cells[5]);
    r.validate();
    return r;
}

std::string_view to_string(Gender g) {
    switch (g) {
        case Gender::female: return "female";
        case Gender::male: return "male";
        case Gender::other: return "other";
        case Gender::unknown: return "unknown";
    }
    return "unknown";
}

Gender parse_gender(std::string_view s) {
    for (Gender g : {Gender::female, Gender::male, Gender::other, Gender::unknown})
        if (to_string(g) == s) return g;
    throw ValidationError("gender", "unknown value '" + std::string(s) + "'");
}

ObfuscatedBody obfuscate(double exact_age, double exact_weight, double exact_height) {
    if (!std::isfinite(exact_age) || exact_age < 0 || exact_age > 120)
        throw ValidationError("age", "must be within [0, 120] years");
    if (!std::isfinite(exact_weight) || exact_weight <= 0 || exact_weight > 400)
        throw ValidationError("weight", "must be within (0, 400] kg");
    if (!std::isfinite(exact_height) || exact_height <= 0 || exact_height > 250)
        throw ValidationError("height", "must be within (0, 250] cm");
    return {bucket(exact_age), bucket(exact_weight) + " kg", bucket(exact_height) + " cm"};
}

HealthRecord make_health_record(std::string subject_id, double age, Gender gender, double weight, double height,
                                std::vector<std::string> conditions) {
    require_identifier("subject_id", subject_id);
    auto body = obfuscate(age, weight, height);
    return HealthRecord{std::move(subject_id), std::move(body.age_range), gender,
                        std::move(body.weight_range), std::move(body.height_range), std::move(conditions)};
}

bool is_pii_name(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower.starts_with("pii_") || lower.starts_with("pii.") || lower == "pii") return true;
    static constexpr std::array<std::string_view, 14> kReserved{
        "patient_name", "full_name",     "first_name", "last_name", "name",          "ssn",   "mrn",
        "address",      "phone",         "email",      "dob",       "date_of_birth", "exact_age", "identity"};
    return std::find(kReserved.begin(), kReserved.end(), lower) != kReserved.end();
}

}  // namespace avs::core
