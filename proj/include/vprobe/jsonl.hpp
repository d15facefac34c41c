#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vprobe {

std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, const std::string& content);

// One JSON value per non-empty line. Parse errors name the file and line.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

// Append-only JSONL sink; each line is flushed before append() returns.
class JsonlAppender {
 public:
  JsonlAppender(const std::filesystem::path& path, bool truncate);

  void append(const nlohmann::json& value);

 private:
  std::mutex mutex_;
  std::ofstream out_;
  std::filesystem::path path_;
};

}  // namespace vprobe
