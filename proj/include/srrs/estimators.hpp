#pragma once

// Nonanticipating estimator sequences.
//
// The estimate held in an EstimatorState is always a function of the
// observations already passed to update(); the observation about to be scored
// never enters it. Every statistic in this library scores x_n with the
// estimate built from x_k, ..., x_{n-1} and only then folds x_n in.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "srrs/models.hpp"
#include "srrs/special.hpp"

namespace srrs {

enum class EstimatorKind { MomGamma, MleGamma, Fixed, NormalMean, BernoulliBeta };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

struct Clamp {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const Clamp&, const Clamp&) = default;
};

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::MomGamma;
  double s = 0.0;
  double t = 0.0;
  double theta = 0.0;  // Fixed only
  std::optional<Clamp> clamp;

  static EstimatorSpec mom_gamma(double s, double t);
  static EstimatorSpec mle_gamma(double s = 0.0, double t = 0.0);
  static EstimatorSpec fixed(double theta);
  static EstimatorSpec normal_mean(double s, double t);
  static EstimatorSpec bernoulli_beta(double s, double t);

  EstimatorSpec with_clamp(double lo, double hi) const;

  /// Checks the kind's own constraints and compatibility with `model`.
  /// Throws std::invalid_argument.
  void validate(const ModelSpec& model) const;

  friend bool operator==(const EstimatorSpec&, const EstimatorSpec&) = default;
};

struct EstimatorState {
  std::int64_t count = 0;  // observations folded in (n - k)
  double acc = 0.0;        // sum of x, or sum of log x for MleGamma
  double raw = 0.0;        // unclamped estimate (Newton warm start for MLE)
  double value = 0.0;      // reported estimate, clamp applied
  double log_gamma_value = 0.0;  // log Gamma(value), Gamma family only

  friend bool operator==(const EstimatorState&, const EstimatorState&) = default;
};

/// An estimator spec bound to a model, with the per-model constants cached.
class Estimator {
 public:
  Estimator(const EstimatorSpec& spec, const ModelSpec& model);

  const EstimatorSpec& spec() const { return spec_; }
  const ModelSpec& model() const { return model_; }

  EstimatorState init() const;

  /// Folds `obs` into the state. The caller is responsible for scoring obs
  /// with the pre-update state first.
  void update(EstimatorState& state, const Observation& obs) const {
    if (spec_.kind == EstimatorKind::Fixed) {
      ++state.count;
      return;
    }
    ++state.count;
    const double n = static_cast<double>(state.count);
    switch (spec_.kind) {
      case EstimatorKind::MomGamma:
      case EstimatorKind::NormalMean:
      case EstimatorKind::BernoulliBeta:
        state.acc += obs.x;
        state.raw = (state.acc + spec_.s) / (n + spec_.t);
        break;
      case EstimatorKind::MleGamma:
        state.acc += obs.log_x;
        state.raw = digamma_inverse((spec_.s + state.acc) / (spec_.t + n), state.raw);
        break;
      case EstimatorKind::Fixed:
        break;
    }
    set_value(state);
  }

  /// log f_est(x) - log f_baseline(x) using the state's current estimate.
  double score(const EstimatorState& state, const Observation& obs) const {
    switch (model_.family) {
      case Family::GammaShape:
        return gamma_log_ratio(state.value, model_.baseline, obs.log_x, log_gamma_baseline_,
                               state.log_gamma_value);
      case Family::NormalMean: {
        const double mu0 = model_.baseline;
        return (state.value - mu0) * obs.x - 0.5 * (state.value * state.value - mu0 * mu0);
      }
      case Family::Bernoulli: {
        const double p0 = model_.baseline;
        return obs.x == 1.0 ? std::log(state.value / p0)
                            : std::log1p(-state.value) - std::log1p(-p0);
      }
    }
    return 0.0;
  }

  static double estimate(const EstimatorState& state) { return state.value; }

  double log_gamma_baseline() const { return log_gamma_baseline_; }

 private:
  void set_value(EstimatorState& state) const {
    double v = state.raw;
    if (spec_.clamp) v = std::fmin(std::fmax(v, spec_.clamp->lo), spec_.clamp->hi);
    if (model_.family == Family::GammaShape) {
      // Simulated draws at tiny shapes can underflow to x == 0.
      v = std::fmax(v, 0x1.0p-1022);
      state.log_gamma_value = log_gamma(v);
    }
    state.value = v;
  }

  EstimatorSpec spec_;
  ModelSpec model_;
  double log_gamma_baseline_ = 0.0;
};

}  // namespace srrs
