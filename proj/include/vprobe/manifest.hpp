#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "vprobe/probeforge.hpp"

namespace vprobe {

// {trial_id, suite, profile, params, ground_truth, prompt,
//  placements: [{label, text, bbox: [x,y,w,h], rate}], image}
nlohmann::json to_json(const TrialRecord& record);
TrialRecord trial_from_json(const nlohmann::json& j);

// Sorted by trial_id, one object per line, written atomically.
void write_manifest(const std::filesystem::path& path, std::vector<TrialRecord> records);
std::vector<TrialRecord> read_manifest(const std::filesystem::path& path);

}  // namespace vprobe
