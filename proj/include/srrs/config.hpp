#pragma once

// Flat key=value experiment configuration and the embedded table recipes.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "srrs/detectors.hpp"
#include "srrs/estimators.hpp"
#include "srrs/models.hpp"
#include "srrs/montecarlo.hpp"

namespace srrs {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment. `command` selects what runs: gamma-const, powerone, arl,
/// delay, calibrate or hist-g. Keys irrelevant to the command are ignored.
struct ExperimentConfig {
  std::string command = "gamma-const";
  std::string family = "gamma";
  double theta0 = 1.0;
  std::string scheme = "srrs";
  std::string estimator = "mom";
  double s = 0.0;
  double t = 0.0;
  double theta = 1.0;                 // Fixed estimator / sr-fixed scheme
  double theta1 = 0.0, theta2 = 0.0;  // pair-mixture
  std::optional<Clamp> clamp;
  int channels = 1;
  bool daily = false;
  double b = 5.0;
  double b0 = 10.0, b1 = 15.0;
  double A = 1.0;
  double target_arl = 1000.0;
  std::vector<double> theta_post;  // empty = baseline
  std::int64_t nu = 1;
  std::int64_t runs = 1000;
  std::int64_t n_max = 100000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::int64_t n_big = 10000;
  double bin_width = 0.1;
  std::string output;  // empty = stdout

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses `key=value` lines; '#' starts a comment. Missing keys keep their
/// defaults (or the values in `base`). Throws ConfigError.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});

/// Applies one key=value assignment. Throws ConfigError on unknown keys or
/// malformed values.
void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Renders every key, one per line, doubles with 17 significant digits.
std::string render_config(const ExperimentConfig& cfg);

/// The known key names in render order.
const std::vector<std::string>& config_keys();

ModelSpec model_of(const ExperimentConfig& cfg);
EstimatorSpec estimator_of(const ExperimentConfig& cfg);
DetectorSpec detector_of(const ExperimentConfig& cfg);
RunConfig run_config_of(const ExperimentConfig& cfg);

/// Configs for table1, table2, table3, table4 or figure1. `scale` multiplies
/// run counts (minimum 1 run). Throws ConfigError on unknown names.
std::vector<ExperimentConfig> recipe(std::string_view name, double scale = 1.0);

const std::vector<std::string>& recipe_names();

}  // namespace srrs
