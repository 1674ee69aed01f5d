#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace citelens::fsutil {

/// Writes via a temporary sibling and rename so readers never see a torn file.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::optional<std::string> read_file(const std::filesystem::path& path);

}  // namespace citelens::fsutil
