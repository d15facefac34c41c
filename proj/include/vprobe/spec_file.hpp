#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vprobe/patchgeom.hpp"
#include "vprobe/probeforge.hpp"

namespace vprobe {

// A generate spec:
// {
//   "master_seed": 7,
//   "parallelism": 4,
//   "profiles_file": "profiles.json",        optional, relative to the spec
//   "profile": "llava-1.5",                  default for suites without one
//   "suites": [{"kind": "quality", "trials_per_cell": 10, ...}]
// }
// Suite fields left out take the reference protocol defaults for their kind.
struct ExperimentSpec {
  std::uint64_t master_seed = 0;
  int parallelism = 1;
  std::vector<ModelProfile> extra_profiles;
  std::vector<SuiteSpec> suites;
};

// Command-line flags win over the document.
struct SpecOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> profile;
  std::optional<int> parallelism;
};

// Errors are kValidation with "<source>:<line>: <json pointer>: <reason>".
ExperimentSpec parse_spec(std::string_view text, const std::string& source, const SpecOverrides& overrides = {},
                          const std::filesystem::path& base_dir = {});
ExperimentSpec load_spec(const std::filesystem::path& path, const SpecOverrides& overrides = {});

}  // namespace vprobe
