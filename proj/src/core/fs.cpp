#include "avs/core/fs.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "avs/core/errors.hpp"

namespace avs::core {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open " + p.string());
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0);
    Bytes out(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size)))
        throw IoError("short read on " + p.string());
    return out;
}

std::string read_text(const fs::path& p) {
    const Bytes b = read_file(p);
    return {b.begin(), b.end()};
}

void write_file_atomic(const fs::path& p, ByteSpan data) {
    static std::atomic<std::uint64_t> counter{0};
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
    fs::path tmp = p;
    tmp += ".tmp-" + std::to_string(tid % 1000000) + "-" + std::to_string(counter.fetch_add(1));
    {
        std::FILE* f = std::fopen(tmp.c_str(), "wb");
        if (!f) throw IoError("cannot create " + tmp.string());
        const bool ok = data.empty() || std::fwrite(data.data(), 1, data.size(), f) == data.size();
        const bool flushed = std::fflush(f) == 0;
        std::fclose(f);
        if (!ok || !flushed) {
            fs::remove(tmp);
            throw IoError("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, p, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("rename to " + p.string() + " failed: " + ec.message());
    }
}

void write_file_atomic(const fs::path& p, std::string_view text) { write_file_atomic(p, as_bytes(text)); }

}  // namespace avs::core
