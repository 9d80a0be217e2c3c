#include "avs/transfer/object_store.hpp"

#include <algorithm>

#include "avs/core/errors.hpp"
#include "avs/core/fs.hpp"

namespace avs::transfer {

namespace fs = std::filesystem;
using core::Bytes;

namespace {

void check_path(const std::string& path) {
    if (path.empty() || path.front() == '/' || path.back() == '/') throw ValidationError("path", "invalid: " + path);
    std::size_t start = 0;
    while (start <= path.size()) {
        const std::size_t end = std::min(path.find('/', start), path.size());
        if (!core::is_valid_identifier(std::string_view(path).substr(start, end - start)))
            throw ValidationError("path", "invalid component in " + path);
        start = end + 1;
    }
}

bool is_temp(const fs::path& p) { return p.filename().string().find(".tmp-") != std::string::npos; }

std::vector<std::string> walk(const fs::path& root, const fs::path& base) {
    std::vector<std::string> out;
    if (!fs::exists(base)) return out;
    for (const auto& e : fs::recursive_directory_iterator(base)) {
        if (!e.is_regular_file() || is_temp(e.path())) continue;
        out.push_back(fs::relative(e.path(), root).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

ObjectStore::ObjectStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path ObjectStore::file_for(const std::string& path) const {
    check_path(path);
    return root_ / path;
}

std::mutex& ObjectStore::lock_for(const std::string& path) const {
    return stripes_[std::hash<std::string>{}(path) % stripes_.size()];
}

bool ObjectStore::is_raw_path(const std::string& path) {
    try {
        return core::parse_key(path).zone == core::Zone::raw;
    } catch (const ParseError&) {
        return false;
    }
}

PutOutcome ObjectStore::put(const std::string& path, core::ByteSpan data) {
    const fs::path file = file_for(path);
    PutOutcome outcome;
    {
        std::lock_guard lk(lock_for(path));
        if (fs::exists(file)) {
            const Bytes existing = core::read_file(file);
            if (std::equal(existing.begin(), existing.end(), data.begin(), data.end())) return PutOutcome::identical;
            if (is_raw_path(path)) throw WriteOnceViolation("raw object " + path + " is write-once");
            outcome = PutOutcome::replaced;
        } else {
            outcome = PutOutcome::created;
        }
        core::write_file_atomic(file, data);
    }
    if (outcome == PutOutcome::created) {
        std::function<void(const std::string&)> hook;
        {
            std::lock_guard lk(hook_mu_);
            hook = on_created_;
        }
        if (hook) hook(path);
    }
    return outcome;
}

Bytes ObjectStore::get(const std::string& path) const {
    auto b = try_get(path);
    if (!b) throw IoError("no such object: " + path);
    return std::move(*b);
}

std::optional<Bytes> ObjectStore::try_get(const std::string& path) const {
    const fs::path file = file_for(path);
    std::lock_guard lk(lock_for(path));
    if (!fs::exists(file)) return std::nullopt;
    return core::read_file(file);
}

bool ObjectStore::exists(const std::string& path) const {
    const fs::path file = file_for(path);
    std::lock_guard lk(lock_for(path));
    return fs::is_regular_file(file);
}

std::uint64_t ObjectStore::size_of(const std::string& path) const {
    const fs::path file = file_for(path);
    std::lock_guard lk(lock_for(path));
    if (!fs::exists(file)) throw IoError("no such object: " + path);
    return fs::file_size(file);
}

void ObjectStore::remove(const std::string& path) {
    const fs::path file = file_for(path);
    std::lock_guard lk(lock_for(path));
    fs::remove(file);
}

std::vector<std::string> ObjectStore::list(const std::string& prefix) const {
    std::string dir = prefix;
    while (!dir.empty() && dir.back() == '/') dir.pop_back();
    auto all = walk(root_, dir.empty() ? root_ : root_ / dir);
    if (dir.empty()) {
        std::erase_if(all, [](const std::string& p) { return p.front() == '.'; });
    }
    return all;
}

std::vector<core::ObjectKey> ObjectStore::list_zone(core::Zone z) const {
    std::vector<core::ObjectKey> out;
    for (const auto& p : list()) {
        if (p.starts_with(kQuarantinePrefix)) continue;
        try {
            core::ObjectKey k = core::parse_key(p);
            if (k.zone == z) out.push_back(std::move(k));
        } catch (const ParseError&) {
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ObjectStore::set_on_created(std::function<void(const std::string&)> fn) {
    std::lock_guard lk(hook_mu_);
    on_created_ = std::move(fn);
}

ColdStore::ColdStore(fs::path root, double retrieval_delay_s) : root_(std::move(root)), delay_(retrieval_delay_s) {
    if (!(retrieval_delay_s >= 0)) throw ValidationError("retrieval_delay_s", "must be non-negative");
    fs::create_directories(root_);
}

bool ColdStore::put(const std::string& path, core::ByteSpan data) {
    check_path(path);
    std::lock_guard lk(mu_);
    const fs::path file = root_ / path;
    if (fs::exists(file)) {
        const Bytes existing = core::read_file(file);
        if (std::equal(existing.begin(), existing.end(), data.begin(), data.end())) return false;
        throw WriteOnceViolation("cold copy of " + path + " differs");
    }
    core::write_file_atomic(file, data);
    return true;
}

bool ColdStore::contains(const std::string& path) const {
    check_path(path);
    std::lock_guard lk(mu_);
    return fs::is_regular_file(root_ / path);
}

Bytes ColdStore::retrieve(const std::string& path, double& elapsed_s) const {
    check_path(path);
    std::lock_guard lk(mu_);
    const fs::path file = root_ / path;
    if (!fs::exists(file)) throw IoError("no cold copy of " + path);
    elapsed_s += delay_;
    return core::read_file(file);
}

std::vector<std::string> ColdStore::list() const {
    std::lock_guard lk(mu_);
    return walk(root_, root_);
}

std::size_t archive(const ObjectStore& store, ColdStore& cold) {
    std::size_t copied = 0;
    for (const auto& k : store.list_zone(core::Zone::raw)) {
        const std::string cold_path = k.with_zone(core::Zone::archive).path();
        if (cold.contains(cold_path)) continue;
        if (cold.put(cold_path, store.get(k.path()))) ++copied;
    }
    return copied;
}

}  // namespace avs::transfer
