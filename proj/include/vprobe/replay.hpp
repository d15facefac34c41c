#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "vprobe/jsonl.hpp"

namespace vprobe {

// JSONL record of every final HTTP exchange:
//   {trial_id, backend_id, attempts, status, latency_ms, request, response}
// `request` is the JSON body sent, `response` the raw body text received.
class ReplayLog {
 public:
  explicit ReplayLog(const std::filesystem::path& path, bool truncate = false);

  void record(const std::string& trial_id, const std::string& backend_id, int attempts, int status,
              double latency_ms, const std::string& request_body, const std::string& response_body);

 private:
  JsonlAppender sink_;
};

}  // namespace vprobe
