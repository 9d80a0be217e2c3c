#include "avs/core/registries.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"

namespace avs::core {

namespace fs = std::filesystem;
using nlohmann::json;

IdentityStore::IdentityStore(fs::path dir, SecretKey coordinator_key)
    : dir_(std::move(dir)), key_(coordinator_key) {
    fs::create_directories(dir_);
}

fs::path IdentityStore::blob_path(const std::string& subject_id) const {
    require_identifier("subject_id", subject_id);
    return dir_ / (subject_id + ".pii");
}

void IdentityStore::put(const std::string& subject_id, std::string_view pii) {
    write_file_atomic(blob_path(subject_id), seal(key_, as_bytes(pii), "identity/" + subject_id));
}

std::string IdentityStore::get(const std::string& subject_id) const {
    const Bytes plain = open_sealed(key_, read_file(blob_path(subject_id)), "identity/" + subject_id);
    return {plain.begin(), plain.end()};
}

std::vector<std::string> IdentityStore::subjects() const {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(dir_))
        if (e.path().extension() == ".pii") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

void HealthStore::save(const std::vector<HealthRecord>& records) const {
    json arr = json::array();
    for (const auto& r : records)
        arr.push_back({{"subject_id", r.subject_id},
                       {"age_range", r.age_range},
                       {"gender", to_string(r.gender)},
                       {"weight_range", r.weight_range},
                       {"height_range", r.height_range},
                       {"conditions", r.conditions}});
    write_file_atomic(file_, arr.dump(1) + "\n");
}

std::vector<HealthRecord> HealthStore::load() const {
    std::vector<HealthRecord> out;
    if (!exists()) return out;
    try {
        for (const auto& j : json::parse(read_text(file_))) {
            HealthRecord r;
            r.subject_id = j.at("subject_id").get<std::string>();
            r.age_range = j.at("age_range").get<std::string>();
            r.gender = parse_gender(j.at("gender").get<std::string>());
            r.weight_range = j.at("weight_range").get<std::string>();
            r.height_range = j.at("height_range").get<std::string>();
            r.conditions = j.at("conditions").get<std::vector<std::string>>();
            out.push_back(std::move(r));
        }
    } catch (const json::exception& ex) {
        throw ParseError(file_.string() + ": " + ex.what());
    }
    return out;
}

}  // namespace avs::core
