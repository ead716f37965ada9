#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "ecoval/ecoval.hpp"
#include "ecoval/gmm.hpp"
#include "ecoval/shapley.hpp"
#include "ecoval/utility.hpp"

namespace ecoval::cli {

// Raised for anything wrong with the configuration itself (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path embeddings;
  std::filesystem::path meta;
  std::array<double, 4> fractions{0.5, 0.25, 0.25, 0.0};
  std::uint64_t split_seed = 0;
  UtilitySpec utility;
  ClusterConfig clustering;
  TmcConfig tmc;
  EcoValConfig ecoval;
  double audit_slack = 0.02;
  std::filesystem::path output_dir = "out";
};

// Relative paths resolve against the config file's directory. Unknown keys
// are rejected so that typos do not silently fall back to defaults.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace ecoval::cli
