#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avs/core/crypto.hpp"
#include "avs/core/records.hpp"

namespace avs::core {

/// Coordinator-only mapping from study subject id to identifying information.
/// Blobs are encrypted under the coordinator key and kept in a directory that
/// no research-facing component is given.
class IdentityStore {
public:
    IdentityStore(std::filesystem::path dir, SecretKey coordinator_key);

    void put(const std::string& subject_id, std::string_view pii);
    std::string get(const std::string& subject_id) const;
    std::vector<std::string> subjects() const;

private:
    std::filesystem::path blob_path(const std::string& subject_id) const;

    std::filesystem::path dir_;
    SecretKey key_;
};

/// Obfuscated health records, the research-visible half of the roster.
class HealthStore {
public:
    explicit HealthStore(std::filesystem::path file) : file_(std::move(file)) {}

    void save(const std::vector<HealthRecord>& records) const;
    std::vector<HealthRecord> load() const;
    bool exists() const { return std::filesystem::exists(file_); }

private:
    std::filesystem::path file_;
};

}  // namespace avs::core
