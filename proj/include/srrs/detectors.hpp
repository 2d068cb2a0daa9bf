#pragma once

// Shiryaev-Roberts type changepoint statistics.
//
// Origin-based schemes (SRRS, NormalMixture, Multi) keep one likelihood-ratio
// accumulator per candidate changepoint k = 1..n and cost O(n * channels)
// per step. SRFixed and PairMixture use the O(1) recursion
// R_n = (1 + R_{n-1}) f_theta(x_n) / f_theta0(x_n) and keep no origins.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srrs/estimators.hpp"
#include "srrs/models.hpp"
#include "srrs/powerone.hpp"

namespace srrs {

inline constexpr int kDaysPerWeek = 7;

/// Malformed or unsupported checkpoint record.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SchemeKind { SRRS, SRFixed, PairMixture, NormalMixture, Multi };

std::string_view to_string(SchemeKind kind);
SchemeKind parse_scheme(std::string_view name);

struct DetectorSpec {
  ModelSpec model;
  SchemeKind scheme = SchemeKind::SRRS;
  EstimatorSpec estimator;                        // SRRS, daily SRRS, Multi default
  std::vector<EstimatorSpec> channel_estimators;  // Multi; empty means `estimator` everywhere
  int channels = 1;                               // Multi: observations per step
  bool daily = false;  // SRRS on a daily stream, estimating each weekday from its own past
  double theta = 0.0;                  // SRFixed
  double theta1 = 0.0, theta2 = 0.0;   // PairMixture
  double mix_s = 0.0, mix_t = 0.0;     // NormalMixture
  double threshold = 1.0;              // A
  std::optional<double> prune_margin;  // drop origins with log Lambda < log A - margin

  static DetectorSpec srrs(const ModelSpec& model, const EstimatorSpec& est, double A);
  static DetectorSpec daily_srrs(const ModelSpec& model, const EstimatorSpec& est, double A);
  static DetectorSpec sr_fixed(const ModelSpec& model, double theta, double A);
  static DetectorSpec pair_mixture(const ModelSpec& model, double theta1, double theta2, double A);
  static DetectorSpec normal_mixture(const ModelSpec& model, double s, double t, double A);
  static DetectorSpec multi(const ModelSpec& model, const EstimatorSpec& est, int m, double A);
  static DetectorSpec multi(const ModelSpec& model, std::vector<EstimatorSpec> per_channel, double A);

  /// Number of observations consumed per step.
  int observation_width() const { return scheme == SchemeKind::Multi ? channels : 1; }

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;

  friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

class Detector {
 public:
  explicit Detector(DetectorSpec spec);

  const DetectorSpec& spec() const { return spec_; }

  /// Univariate step; validates support.
  void step(double x);
  /// One row of observation_width() values; validates support.
  void step(std::span<const double> row);
  /// Prepared observations (simulation path; support already guaranteed).
  void step(std::span<const Observation> row);
  void step(const Observation& obs) { step(std::span<const Observation>(&obs, 1)); }

  std::int64_t n() const { return n_; }
  double r() const { return r_; }
  double log_r() const { return log_r_; }
  bool stopped() const { return stopped_; }

  /// Origin indices k and log Lambda_{n,k}, oldest first (origin schemes only).
  std::span<const std::int64_t> origin_indices() const { return origin_k_; }
  std::span<const double> origin_log_lambdas() const { return log_lambda_; }
  /// Estimator states of origin i (one per channel / weekday).
  std::span<const EstimatorState> origin_states(std::size_t i) const;

  /// Portable, version-tagged text record; restore() of it continues
  /// bit-identically.
  std::string checkpoint() const;
  static Detector restore(std::string_view record);

 private:
  bool origin_based() const;
  void step_origins(std::span<const Observation> row);
  void step_recursive(const Observation& obs);
  double origin_increment(EstimatorState* states, std::span<const Observation> row, int day) const;
  double mixture_log_lambda(const EstimatorState& st);
  void prune();

  DetectorSpec spec_;
  std::vector<Estimator> channel_est_;
  std::vector<EstimatorState> fixed_states_;  // SRFixed / PairMixture
  int width_ = 1;
  std::int64_t n_ = 0;
  std::vector<std::int64_t> origin_k_;
  std::vector<double> log_lambda_;
  std::vector<EstimatorState> states_;
  double r_ = 0.0;
  double log_r_ = -std::numeric_limits<double>::infinity();
  double log_r1_ = -std::numeric_limits<double>::infinity();
  double log_r2_ = -std::numeric_limits<double>::infinity();
  bool stopped_ = false;
  // NormalMixture per-count constants, index = count
  std::vector<double> mix_offset_, mix_scale_;
  double mix_var_ = 0.0;
};

/// Runs a fresh detector over `next()` until R_n >= A or n_max steps.
/// `next` returns an Observation or a span of them.
template <class Source>
StoppingRecord run_detector(const DetectorSpec& spec, Source&& next, std::int64_t n_max) {
  Detector det(spec);
  const double log_a = std::log(spec.threshold);
  while (det.n() < n_max) {
    det.step(next());
    if (det.stopped()) return {det.n(), false, det.log_r(), det.log_r() - log_a};
  }
  return {n_max, true, det.log_r(), det.log_r() - log_a};
}

}  // namespace srrs
