#include "vprobe/manifest.hpp"

#include <algorithm>

#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"

namespace vprobe {

nlohmann::json to_json(const TrialRecord& record) {
  nlohmann::json placements = nlohmann::json::array();
  for (const auto& p : record.placements) {
    nlohmann::json pj = {{"label", p.label},
                         {"text", p.text},
                         {"bbox", {p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h}},
                         {"rate", p.rate}};
    if (p.spacing != 0) pj["spacing"] = p.spacing;
    placements.push_back(std::move(pj));
  }
  return {{"trial_id", record.trial_id},
          {"suite", to_string(record.suite)},
          {"profile", record.profile},
          {"params", record.params},
          {"ground_truth", record.ground_truth},
          {"prompt", record.prompt},
          {"placements", placements},
          {"image", record.image}};
}

TrialRecord trial_from_json(const nlohmann::json& j) {
  try {
    TrialRecord r;
    r.trial_id = j.at("trial_id").get<std::string>();
    r.suite = suite_kind_from_string(j.at("suite").get<std::string>());
    r.profile = j.at("profile").get<std::string>();
    r.params = j.at("params");
    r.ground_truth = j.at("ground_truth").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.image = j.at("image").get<std::string>();
    for (const auto& p : j.at("placements")) {
      const auto& b = p.at("bbox");
      r.placements.push_back({p.at("label").get<std::string>(), p.at("text").get<std::string>(),
                              {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()},
                              p.value("rate", 8), p.value("spacing", 0)});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed trial record: ") + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, std::vector<TrialRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial_id < b.trial_id; });
  std::string body;
  for (const auto& r : records) {
    body += to_json(r).dump();
    body += '\n';
  }
  atomic_write(path, body);
}

std::vector<TrialRecord> read_manifest(const std::filesystem::path& path) {
  std::vector<TrialRecord> out;
  for (const auto& j : read_jsonl(path)) out.push_back(trial_from_json(j));
  return out;
}

}  // namespace vprobe
