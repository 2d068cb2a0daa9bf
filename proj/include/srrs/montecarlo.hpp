#pragma once

// Monte Carlo engine: Q-measure sampling, the ladder-averaged estimate of
// the overshoot constant gamma, ARL / delay estimation and threshold
// calibration.
//
// Every run draws from its own counter-based stream keyed by (seed, run
// index) and results are folded in run order, so estimates are bit-identical
// for any worker count and for the serial reference path.

#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <omp.h>

#include "srrs/detectors.hpp"
#include "srrs/estimators.hpp"
#include "srrs/models.hpp"
#include "srrs/powerone.hpp"
#include "srrs/random.hpp"

namespace srrs {

enum class Execution { Serial, Parallel };

struct RunConfig {
  std::uint64_t seed = 1;
  std::int64_t runs = 1000;
  std::int64_t n_max = 100000;
  int workers = 1;
  Execution execution = Execution::Parallel;
};

/// Evaluates per_run(i) for i = 0..runs-1 and returns the results in run
/// order. The serial path is the reference implementation; the parallel path
/// must agree with it exactly.
template <class Result, class F>
std::vector<Result> map_runs(const RunConfig& cfg, F&& per_run) {
  std::vector<Result> out(static_cast<std::size_t>(cfg.runs));
  if (cfg.execution == Execution::Serial || cfg.workers <= 1) {
    for (std::int64_t i = 0; i < cfg.runs; ++i) out[i] = per_run(i);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers)
  for (std::int64_t i = 0; i < cfg.runs; ++i) {
    try {
      out[i] = per_run(i);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Sample mean with standard error.
struct MeanEstimate {
  double mean = 0.0;
  double std_err = 0.0;
  std::int64_t runs = 0;       // samples entering the mean
  std::int64_t truncated = 0;  // runs that hit n_max
};

MeanEstimate summarize(std::span<const double> values, std::int64_t truncated = 0);

/// Draws one observation from the family at parameter `param`.
Observation draw(const ModelSpec& model, double param, RandomStream& rng);

/// The adaptive measure Q: each observation is drawn using the current
/// estimate as the true parameter, then folded into the estimator.
class QSampler {
 public:
  QSampler(const Estimator& estimator, RandomStream& rng)
      : estimator_(&estimator), rng_(&rng), state_(estimator.init()) {}

  Observation operator()() {
    const Observation obs = draw(estimator_->model(), state_.value, *rng_);
    estimator_->update(state_, obs);
    return obs;
  }

  const EstimatorState& state() const { return state_; }

 private:
  const Estimator* estimator_;
  RandomStream* rng_;
  EstimatorState state_;
};

struct LadderEstimate {
  double gamma_hat = 0.0;
  double std_err = 0.0;
  double b0 = 0.0;
  double b1 = 0.0;
  std::int64_t runs = 0;
  std::int64_t truncated_b1 = 0;  // reached b0 but not b1
  std::int64_t truncated_b0 = 0;  // never reached b0
};

/// Per-run ladder-averaged value of exp(-overshoot) over b in (b0, b1].
struct LadderRun {
  double value = 1.0;
  bool reached_b0 = false;
  bool reached_b1 = false;
};

/// Ladder average for one log-statistic path fed incrementally.
class LadderAccumulator {
 public:
  LadderAccumulator(double b0, double b1) : b0_(b0), b1_(b1), prev_(b0) {}

  /// Feeds log Lambda_n; returns true once b1 has been crossed.
  bool push(double log_lambda);
  LadderRun finish() const;

 private:
  double b0_, b1_;
  double record_ = 0.0;  // running max of the path, log Lambda_0 = 0
  double prev_;          // last ladder variable in (b0, b1], or b0
  double sum_ = 0.0;
  bool reached_b0_ = false;
  bool done_ = false;
};

/// gamma estimate by ladder averaging over [b0, b1] under Q.
LadderEstimate estimate_gamma_const(const ModelSpec& model, const EstimatorSpec& spec, double b0,
                                    double b1, const RunConfig& cfg);

/// Power-one test runs under the parameter `sampling_param` (the null when
/// equal to the baseline).
std::vector<StoppingRecord> simulate_power_one(const ModelSpec& model, const EstimatorSpec& spec,
                                               double b, double sampling_param, const RunConfig& cfg);

/// Fraction of null runs that stop before n_max.
struct RejectionRate {
  double rate = 0.0;
  std::int64_t runs = 0;
  std::int64_t rejections = 0;
};

RejectionRate estimate_rejection_rate(const ModelSpec& model, const EstimatorSpec& spec, double b,
                                      const RunConfig& cfg);

/// Same for the normal-mean test whose estimate includes the scored
/// observation.
RejectionRate anticipating_rejection_rate(double b, const RunConfig& cfg);

/// Stream with a changepoint: steps n < nu use the baseline, steps n >= nu
/// the post-change parameters (one per channel, one per weekday in daily
/// mode, or a single value broadcast).
class ChangepointSource {
 public:
  ChangepointSource(const DetectorSpec& spec, std::vector<double> post, std::int64_t nu,
                    RandomStream& rng);
  std::span<const Observation> operator()();

 private:
  const DetectorSpec* spec_;
  std::vector<double> post_;
  std::int64_t nu_;
  RandomStream* rng_;
  std::int64_t n_ = 0;
  std::vector<Observation> row_;
};

inline constexpr std::int64_t kNoChange = -1;

std::vector<StoppingRecord> simulate_detector(const DetectorSpec& spec, std::span<const double> post,
                                              std::int64_t nu, const RunConfig& cfg);

/// ARL to false alarm: mean of N_A with no change. Truncated runs count as n_max.
MeanEstimate estimate_arl(const DetectorSpec& spec, const RunConfig& cfg);

/// Mean of N_A - nu + 1 over runs with N_A >= nu.
MeanEstimate estimate_delay(const DetectorSpec& spec, std::span<const double> post,
                            std::int64_t nu, const RunConfig& cfg);

struct CalibrationOptions {
  std::optional<double> gamma_hat;  // starting point A0 = B * gamma_hat
  bool conservative = false;        // return A = B without simulating
  int max_iterations = 8;
};

struct CalibrationResult {
  double threshold = 0.0;
  MeanEstimate arl;
  int iterations = 0;
  bool converged = false;
};

/// Finds A with ARL(A) ~ target by secant steps on log A, reusing the same
/// random streams (common random numbers) at every iterate.
CalibrationResult calibrate_threshold(const DetectorSpec& templ, double target_arl,
                                      const RunConfig& cfg, const CalibrationOptions& opts = {});

struct GHistogram {
  double bin_width = 0.1;
  std::map<std::int64_t, std::int64_t> counts;  // bin index -> count, bin = [i w, (i+1) w)
  std::vector<double> values;                   // terminal estimates, one per path
};

/// Distribution of the estimate after n_big steps under Q.
GHistogram simulate_G_histogram(const ModelSpec& model, const EstimatorSpec& spec, std::int64_t n_big,
                                const RunConfig& cfg, double bin_width);

}  // namespace srrs
