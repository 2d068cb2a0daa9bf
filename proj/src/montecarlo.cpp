#include "srrs/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace srrs {

MeanEstimate summarize(std::span<const double> values, std::int64_t truncated) {
  MeanEstimate est;
  est.runs = static_cast<std::int64_t>(values.size());
  est.truncated = truncated;
  if (values.empty()) {
    est.mean = std::numeric_limits<double>::quiet_NaN();
    est.std_err = std::numeric_limits<double>::quiet_NaN();
    return est;
  }
  // Welford, in run order for reproducibility.
  double mean = 0.0, m2 = 0.0;
  std::int64_t k = 0;
  for (double v : values) {
    ++k;
    const double delta = v - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (v - mean);
  }
  est.mean = mean;
  est.std_err = k > 1 ? std::sqrt(m2 / static_cast<double>(k - 1) / static_cast<double>(k)) : 0.0;
  return est;
}

Observation draw(const ModelSpec& model, double param, RandomStream& rng) {
  switch (model.family) {
    case Family::GammaShape: {
      const auto g = rng.gamma(param);
      return {g.value, g.log_value};
    }
    case Family::NormalMean: return {param + rng.normal(), 0.0};
    case Family::Bernoulli: return {rng.bernoulli(param) ? 1.0 : 0.0, 0.0};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Ladder averaging

bool LadderAccumulator::push(double log_lambda) {
  if (done_) return true;
  if (log_lambda > record_) {
    record_ = log_lambda;
    if (log_lambda > b0_) {
      reached_b0_ = true;
      sum_ += 1.0 - std::exp(prev_ - log_lambda);
      if (log_lambda > b1_) {
        sum_ += std::exp(b1_ - log_lambda) - 1.0;
        done_ = true;
        return true;
      }
      prev_ = log_lambda;
    }
  }
  return false;
}

LadderRun LadderAccumulator::finish() const {
  if (done_) return {sum_ / (b1_ - b0_), true, true};
  if (reached_b0_) return {sum_ / (prev_ - b0_), true, false};
  return {1.0, false, false};
}

LadderEstimate estimate_gamma_const(const ModelSpec& model, const EstimatorSpec& spec, double b0,
                                    double b1, const RunConfig& cfg) {
  if (!(b0 > 0.0) || !(b0 < b1)) throw std::invalid_argument("estimate_gamma_const: need 0 < b0 < b1");
  const Estimator estimator(spec, model);
  auto runs = map_runs<LadderRun>(cfg, [&](std::int64_t run) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    LadderAccumulator ladder(b0, b1);
    TestState state = init_test(estimator);
    // Under Q the sampling parameter is the test's own current estimate.
    while (state.n < cfg.n_max) {
      const Observation obs = draw(model, state.est.value, rng);
      test_step(estimator, state, obs);
      if (ladder.push(state.log_lambda)) break;
    }
    return ladder.finish();
  });

  LadderEstimate out;
  out.b0 = b0;
  out.b1 = b1;
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& r : runs) {
    values.push_back(r.value);
    if (!r.reached_b0) ++out.truncated_b0;
    else if (!r.reached_b1) ++out.truncated_b1;
  }
  const MeanEstimate m = summarize(values);
  out.gamma_hat = m.mean;
  out.std_err = m.std_err;
  out.runs = m.runs;
  return out;
}

// ---------------------------------------------------------------------------
// Power-one tests

std::vector<StoppingRecord> simulate_power_one(const ModelSpec& model, const EstimatorSpec& spec,
                                               double b, double sampling_param, const RunConfig& cfg) {
  if (!model.valid_parameter(sampling_param))
    throw std::invalid_argument("simulate_power_one: sampling parameter invalid for the family");
  const Estimator estimator(spec, model);
  return map_runs<StoppingRecord>(cfg, [&](std::int64_t run) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    return run_tau_b(estimator, b, [&] { return draw(model, sampling_param, rng); }, cfg.n_max);
  });
}

namespace {

RejectionRate count_rejections(const std::vector<StoppingRecord>& records) {
  RejectionRate out;
  out.runs = static_cast<std::int64_t>(records.size());
  for (const auto& r : records) out.rejections += r.truncated ? 0 : 1;
  out.rate = out.runs ? static_cast<double>(out.rejections) / static_cast<double>(out.runs) : 0.0;
  return out;
}

}  // namespace

RejectionRate estimate_rejection_rate(const ModelSpec& model, const EstimatorSpec& spec, double b,
                                      const RunConfig& cfg) {
  return count_rejections(simulate_power_one(model, spec, b, model.baseline, cfg));
}

RejectionRate anticipating_rejection_rate(double b, const RunConfig& cfg) {
  auto records = map_runs<StoppingRecord>(cfg, [&](std::int64_t run) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    return run_tau_b_anticipating(b, [&] { return rng.normal(); }, cfg.n_max);
  });
  return count_rejections(records);
}

// ---------------------------------------------------------------------------
// Detectors

ChangepointSource::ChangepointSource(const DetectorSpec& spec, std::vector<double> post,
                                     std::int64_t nu, RandomStream& rng)
    : spec_(&spec), post_(std::move(post)), nu_(nu), rng_(&rng),
      row_(static_cast<std::size_t>(spec.observation_width())) {
  const std::size_t width = row_.size();
  const std::size_t allowed = spec.daily ? kDaysPerWeek : width;
  if (nu_ != kNoChange) {
    if (nu_ < 1) throw std::invalid_argument("changepoint index must be >= 1");
    if (post_.empty() || (post_.size() != 1 && post_.size() != allowed))
      throw std::invalid_argument("post-change parameters: expected 1 or " + std::to_string(allowed));
    for (double p : post_) {
      if (!spec.model.valid_parameter(p))
        throw std::invalid_argument("post-change parameter invalid for the family");
    }
  }
}

std::span<const Observation> ChangepointSource::operator()() {
  ++n_;
  const bool changed = nu_ != kNoChange && n_ >= nu_;
  for (std::size_t j = 0; j < row_.size(); ++j) {
    double param = spec_->model.baseline;
    if (changed) {
      std::size_t idx = 0;
      if (post_.size() > 1) idx = spec_->daily ? static_cast<std::size_t>(n_ % kDaysPerWeek) : j;
      param = post_[idx];
    }
    row_[j] = draw(spec_->model, param, *rng_);
  }
  return row_;
}

std::vector<StoppingRecord> simulate_detector(const DetectorSpec& spec, std::span<const double> post,
                                              std::int64_t nu, const RunConfig& cfg) {
  spec.validate();
  const std::vector<double> post_params(post.begin(), post.end());
  // Validate the source once up front so errors surface outside the workers.
  {
    RandomStream probe(cfg.seed, 0);
    ChangepointSource check(spec, post_params, nu, probe);
  }
  return map_runs<StoppingRecord>(cfg, [&](std::int64_t run) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    ChangepointSource source(spec, post_params, nu, rng);
    return run_detector(spec, source, cfg.n_max);
  });
}

MeanEstimate estimate_arl(const DetectorSpec& spec, const RunConfig& cfg) {
  const auto records = simulate_detector(spec, {}, kNoChange, cfg);
  std::vector<double> times;
  times.reserve(records.size());
  std::int64_t truncated = 0;
  for (const auto& r : records) {
    times.push_back(static_cast<double>(r.stop_time));
    truncated += r.truncated ? 1 : 0;
  }
  return summarize(times, truncated);
}

MeanEstimate estimate_delay(const DetectorSpec& spec, std::span<const double> post, std::int64_t nu,
                            const RunConfig& cfg) {
  if (nu < 1) throw std::invalid_argument("estimate_delay: nu must be >= 1");
  const auto records = simulate_detector(spec, post, nu, cfg);
  std::vector<double> delays;
  std::int64_t truncated = 0;
  for (const auto& r : records) {
    if (r.stop_time < nu) continue;
    delays.push_back(static_cast<double>(r.stop_time - nu + 1));
    truncated += r.truncated ? 1 : 0;
  }
  return summarize(delays, truncated);
}

CalibrationResult calibrate_threshold(const DetectorSpec& templ, double target_arl, const RunConfig& cfg,
                                      const CalibrationOptions& opts) {
  if (!(target_arl > 1.0)) throw std::invalid_argument("calibrate_threshold: target ARL must exceed 1");
  CalibrationResult best;
  if (opts.conservative) {
    best.threshold = target_arl;
    best.converged = true;
    return best;
  }
  auto arl_at = [&](double a) {
    DetectorSpec spec = templ;
    spec.threshold = a;
    return estimate_arl(spec, cfg);
  };
  auto miss = [&](const MeanEstimate& m) { return std::fabs(m.mean - target_arl); };

  double a_prev = opts.gamma_hat ? target_arl * *opts.gamma_hat : target_arl;
  MeanEstimate m_prev = arl_at(a_prev);
  best = {a_prev, m_prev, 1, miss(m_prev) <= 2.0 * m_prev.std_err};
  if (best.converged) return best;

  // ARL is close to proportional to A, so the first move rescales A.
  double a_cur = a_prev * target_arl / m_prev.mean;
  for (int iter = 2; iter <= opts.max_iterations; ++iter) {
    const MeanEstimate m_cur = arl_at(a_cur);
    if (miss(m_cur) < miss(best.arl)) best = {a_cur, m_cur, iter, false};
    best.iterations = iter;
    if (miss(m_cur) <= 2.0 * m_cur.std_err) {
      best = {a_cur, m_cur, iter, true};
      return best;
    }
    // Secant on f(log A) = log ARL(A) - log target.
    const double x0 = std::log(a_prev), x1 = std::log(a_cur);
    const double f0 = std::log(m_prev.mean / target_arl), f1 = std::log(m_cur.mean / target_arl);
    double x2 = (f1 != f0) ? x1 - f1 * (x1 - x0) / (f1 - f0) : x1 - f1;
    // Keep each move within a factor of two.
    x2 = std::clamp(x2, x1 - std::log(2.0), x1 + std::log(2.0));
    a_prev = a_cur;
    m_prev = m_cur;
    a_cur = std::exp(x2);
  }
  return best;
}

GHistogram simulate_G_histogram(const ModelSpec& model, const EstimatorSpec& spec, std::int64_t n_big,
                                const RunConfig& cfg, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("simulate_G_histogram: bin width must be positive");
  if (n_big < 0) throw std::invalid_argument("simulate_G_histogram: n_big must be nonnegative");
  const Estimator estimator(spec, model);
  GHistogram hist;
  hist.bin_width = bin_width;
  hist.values = map_runs<double>(cfg, [&](std::int64_t run) {
    RandomStream rng(cfg.seed, static_cast<std::uint64_t>(run));
    QSampler q(estimator, rng);
    for (std::int64_t i = 0; i < n_big; ++i) q();
    return Estimator::estimate(q.state());
  });
  for (double v : hist.values) {
    ++hist.counts[static_cast<std::int64_t>(std::floor(v / bin_width))];
  }
  return hist;
}

}  // namespace srrs
