#pragma once

#include <filesystem>
#include <string_view>

#include "avs/core/digest.hpp"

namespace avs::core {

Bytes read_file(const std::filesystem::path& p);
std::string read_text(const std::filesystem::path& p);

/// Writes to a sibling temp file, flushes, then renames over `p`. Readers see
/// either the previous content or the complete new content.
void write_file_atomic(const std::filesystem::path& p, ByteSpan data);
void write_file_atomic(const std::filesystem::path& p, std::string_view text);

}  // namespace avs::core
