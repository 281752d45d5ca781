#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pairgen {

using Json = nlohmann::json;

// Writes `text` to path via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& rows);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace pairgen
