#include "srrs/detectors.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "json.hpp"

namespace srrs {

std::string_view to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::SRRS: return "srrs";
    case SchemeKind::SRFixed: return "sr-fixed";
    case SchemeKind::PairMixture: return "pair-mixture";
    case SchemeKind::NormalMixture: return "normal-mixture";
    case SchemeKind::Multi: return "multi";
  }
  return "unknown";
}

SchemeKind parse_scheme(std::string_view name) {
  if (name == "srrs") return SchemeKind::SRRS;
  if (name == "sr-fixed") return SchemeKind::SRFixed;
  if (name == "pair-mixture") return SchemeKind::PairMixture;
  if (name == "normal-mixture") return SchemeKind::NormalMixture;
  if (name == "multi") return SchemeKind::Multi;
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

DetectorSpec DetectorSpec::srrs(const ModelSpec& model, const EstimatorSpec& est, double A) {
  DetectorSpec spec;
  spec.model = model;
  spec.scheme = SchemeKind::SRRS;
  spec.estimator = est;
  spec.threshold = A;
  return spec;
}

DetectorSpec DetectorSpec::daily_srrs(const ModelSpec& model, const EstimatorSpec& est, double A) {
  DetectorSpec spec = srrs(model, est, A);
  spec.daily = true;
  return spec;
}

DetectorSpec DetectorSpec::sr_fixed(const ModelSpec& model, double theta, double A) {
  DetectorSpec spec;
  spec.model = model;
  spec.scheme = SchemeKind::SRFixed;
  spec.theta = theta;
  spec.threshold = A;
  return spec;
}

DetectorSpec DetectorSpec::pair_mixture(const ModelSpec& model, double theta1, double theta2, double A) {
  DetectorSpec spec;
  spec.model = model;
  spec.scheme = SchemeKind::PairMixture;
  spec.theta1 = theta1;
  spec.theta2 = theta2;
  spec.threshold = A;
  return spec;
}

DetectorSpec DetectorSpec::normal_mixture(const ModelSpec& model, double s, double t, double A) {
  DetectorSpec spec;
  spec.model = model;
  spec.scheme = SchemeKind::NormalMixture;
  spec.mix_s = s;
  spec.mix_t = t;
  spec.threshold = A;
  return spec;
}

DetectorSpec DetectorSpec::multi(const ModelSpec& model, const EstimatorSpec& est, int m, double A) {
  DetectorSpec spec = srrs(model, est, A);
  spec.scheme = SchemeKind::Multi;
  spec.channels = m;
  return spec;
}

DetectorSpec DetectorSpec::multi(const ModelSpec& model, std::vector<EstimatorSpec> per_channel, double A) {
  DetectorSpec spec;
  spec.model = model;
  spec.scheme = SchemeKind::Multi;
  spec.channels = static_cast<int>(per_channel.size());
  if (!per_channel.empty()) spec.estimator = per_channel.front();
  spec.channel_estimators = std::move(per_channel);
  spec.threshold = A;
  return spec;
}

void DetectorSpec::validate() const {
  model.validate();
  auto fail = [](const std::string& why) { throw std::invalid_argument("detector: " + why); };
  if (!(threshold > 0.0)) fail("threshold A must be positive");
  if (prune_margin && !(*prune_margin > 0.0)) fail("prune margin must be positive");
  if (daily && scheme != SchemeKind::SRRS) fail("daily mode applies to the srrs scheme only");
  switch (scheme) {
    case SchemeKind::SRRS: estimator.validate(model); break;
    case SchemeKind::SRFixed:
      if (!model.valid_parameter(theta)) fail("sr-fixed parameter invalid for the family");
      break;
    case SchemeKind::PairMixture:
      if (!model.valid_parameter(theta1) || !model.valid_parameter(theta2))
        fail("pair-mixture parameters invalid for the family");
      if (!(theta1 <= theta2)) fail("pair-mixture requires theta1 <= theta2");
      break;
    case SchemeKind::NormalMixture:
      if (model.family != Family::NormalMean) fail("normal-mixture requires the normal family");
      if (!(mix_t > 0.0)) fail("normal-mixture requires t > 0");
      break;
    case SchemeKind::Multi:
      if (channels < 1) fail("multi requires at least one channel");
      if (!channel_estimators.empty() && static_cast<int>(channel_estimators.size()) != channels)
        fail("multi: one estimator per channel expected");
      if (channel_estimators.empty()) estimator.validate(model);
      for (const auto& e : channel_estimators) e.validate(model);
      break;
  }
}

Detector::Detector(DetectorSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  switch (spec_.scheme) {
    case SchemeKind::SRRS:
      channel_est_.emplace_back(spec_.estimator, spec_.model);
      width_ = spec_.daily ? kDaysPerWeek : 1;
      break;
    case SchemeKind::Multi:
      width_ = spec_.channels;
      for (int j = 0; j < width_; ++j) {
        const EstimatorSpec& e =
            spec_.channel_estimators.empty() ? spec_.estimator : spec_.channel_estimators[j];
        channel_est_.emplace_back(e, spec_.model);
      }
      break;
    case SchemeKind::SRFixed:
      channel_est_.emplace_back(EstimatorSpec::fixed(spec_.theta), spec_.model);
      break;
    case SchemeKind::PairMixture:
      channel_est_.emplace_back(EstimatorSpec::fixed(spec_.theta1), spec_.model);
      channel_est_.emplace_back(EstimatorSpec::fixed(spec_.theta2), spec_.model);
      break;
    case SchemeKind::NormalMixture:
      mix_var_ = v2(spec_.mix_t);
      break;
  }
  if (!origin_based()) {
    for (const auto& e : channel_est_) fixed_states_.push_back(e.init());
  }
}

bool Detector::origin_based() const {
  return spec_.scheme == SchemeKind::SRRS || spec_.scheme == SchemeKind::Multi ||
         spec_.scheme == SchemeKind::NormalMixture;
}

std::span<const EstimatorState> Detector::origin_states(std::size_t i) const {
  if (spec_.scheme == SchemeKind::NormalMixture) return {states_.data() + i, 1};
  return {states_.data() + i * width_, static_cast<std::size_t>(width_)};
}

void Detector::step(double x) {
  const Observation obs = observe(spec_.model, x);
  step(std::span<const Observation>(&obs, 1));
}

void Detector::step(std::span<const double> row) {
  std::vector<Observation> obs;
  obs.reserve(row.size());
  for (double x : row) obs.push_back(observe(spec_.model, x));
  step(std::span<const Observation>(obs));
}

void Detector::step(std::span<const Observation> row) {
  if (stopped_) throw std::logic_error("detector already stopped; no further steps allowed");
  if (static_cast<int>(row.size()) != spec_.observation_width()) {
    throw std::invalid_argument("expected " + std::to_string(spec_.observation_width()) +
                                " observations per step, got " + std::to_string(row.size()));
  }
  if (origin_based()) {
    step_origins(row);
  } else {
    step_recursive(row[0]);
  }
}

namespace {

// log(1 + e^a)
double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

}  // namespace

void Detector::step_recursive(const Observation& obs) {
  ++n_;
  log_r1_ = softplus(log_r1_) + channel_est_[0].score(fixed_states_[0], obs);
  if (spec_.scheme == SchemeKind::PairMixture) {
    log_r2_ = softplus(log_r2_) + channel_est_[1].score(fixed_states_[1], obs);
    log_r_ = std::log(0.5) + log_add_exp(log_r1_, log_r2_);
  } else {
    log_r_ = log_r1_;
  }
  r_ = std::exp(log_r_);
  stopped_ = log_r_ >= std::log(spec_.threshold);
}

double Detector::origin_increment(EstimatorState* states, std::span<const Observation> row,
                                  int day) const {
  if (spec_.daily) {
    const Estimator& e = channel_est_[0];
    EstimatorState& st = states[day];
    const double inc = e.score(st, row[0]);
    e.update(st, row[0]);
    return inc;
  }
  double inc = 0.0;
  for (int j = 0; j < width_; ++j) {
    inc += channel_est_[j].score(states[j], row[j]);
    channel_est_[j].update(states[j], row[j]);
  }
  return inc;
}

double Detector::mixture_log_lambda(const EstimatorState& st) {
  const auto count = static_cast<std::size_t>(st.count);
  const double mean = spec_.mix_s / spec_.mix_t;
  while (mix_offset_.size() <= count) {
    const double spread = 1.0 + static_cast<double>(mix_offset_.size()) * mix_var_;
    mix_offset_.push_back(-0.5 * std::log(spread) - mean * mean / (2.0 * mix_var_));
    mix_scale_.push_back(1.0 / (2.0 * mix_var_ * spread));
  }
  const double shifted = st.acc * mix_var_ + mean;
  return mix_offset_[count] + mix_scale_[count] * shifted * shifted;
}

void Detector::step_origins(std::span<const Observation> row) {
  const std::int64_t n = n_ + 1;
  const std::size_t origins = log_lambda_.size();

  if (spec_.scheme == SchemeKind::NormalMixture) {
    const double x = row[0].x - spec_.model.baseline;
    for (std::size_t i = 0; i < origins; ++i) {
      EstimatorState& st = states_[i];
      ++st.count;
      st.acc += x;
      log_lambda_[i] = mixture_log_lambda(st);
    }
    EstimatorState fresh;
    fresh.count = 1;
    fresh.acc = x;
    states_.push_back(fresh);
    log_lambda_.push_back(mixture_log_lambda(fresh));
  } else if (width_ == 1) {
    const Estimator& e = channel_est_[0];
    const Observation& obs = row[0];
    for (std::size_t i = 0; i < origins; ++i) {
      EstimatorState& st = states_[i];
      log_lambda_[i] += e.score(st, obs);
      e.update(st, obs);
    }
    EstimatorState fresh = e.init();
    const double inc = e.score(fresh, obs);
    e.update(fresh, obs);
    states_.push_back(fresh);
    log_lambda_.push_back(inc);
  } else {
    const int day = static_cast<int>(n % kDaysPerWeek);
    for (std::size_t i = 0; i < origins; ++i) {
      log_lambda_[i] += origin_increment(states_.data() + i * width_, row, day);
    }
    for (int j = 0; j < width_; ++j) {
      states_.push_back(channel_est_[spec_.daily ? 0 : j].init());
    }
    log_lambda_.push_back(origin_increment(states_.data() + origins * width_, row, day));
  }
  origin_k_.push_back(n);
  n_ = n;

  if (spec_.prune_margin) prune();

  double r = 0.0;
  for (double l : log_lambda_) r += std::exp(l);
  r_ = r;
  if (std::isinf(r)) {
    double acc = -std::numeric_limits<double>::infinity();
    for (double l : log_lambda_) acc = log_add_exp(acc, l);
    log_r_ = acc;
  } else {
    log_r_ = std::log(r);
  }
  stopped_ = r_ >= spec_.threshold;
}

void Detector::prune() {
  const double floor = std::log(spec_.threshold) - *spec_.prune_margin;
  const std::size_t per = spec_.scheme == SchemeKind::NormalMixture ? 1 : width_;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < log_lambda_.size(); ++i) {
    if (log_lambda_[i] < floor) continue;
    if (kept != i) {
      log_lambda_[kept] = log_lambda_[i];
      origin_k_[kept] = origin_k_[i];
      std::copy_n(states_.begin() + i * per, per, states_.begin() + kept * per);
    }
    ++kept;
  }
  log_lambda_.resize(kept);
  origin_k_.resize(kept);
  states_.resize(kept * per);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;
constexpr const char* kCheckpointFormat = "srrs-detector";

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double unhex(const json& j) {
  if (!j.is_string()) throw CheckpointError("checkpoint: expected hex-float string");
  const std::string s = j.get<std::string>();
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw CheckpointError("checkpoint: bad number '" + s + "'");
  return v;
}

json encode(const EstimatorSpec& e) {
  json j{{"kind", std::string(to_string(e.kind))}, {"s", hex(e.s)}, {"t", hex(e.t)},
         {"theta", hex(e.theta)}};
  j["clamp"] = e.clamp ? json::array({hex(e.clamp->lo), hex(e.clamp->hi)}) : json(nullptr);
  return j;
}

EstimatorSpec decode_estimator(const json& j) {
  EstimatorSpec e;
  e.kind = parse_estimator_kind(j.at("kind").get<std::string>());
  e.s = unhex(j.at("s"));
  e.t = unhex(j.at("t"));
  e.theta = unhex(j.at("theta"));
  if (!j.at("clamp").is_null()) e.clamp = Clamp{unhex(j.at("clamp").at(0)), unhex(j.at("clamp").at(1))};
  return e;
}

json encode(const DetectorSpec& s) {
  json channels = json::array();
  for (const auto& e : s.channel_estimators) channels.push_back(encode(e));
  return {{"family", std::string(to_string(s.model.family))},
          {"baseline", hex(s.model.baseline)},
          {"scheme", std::string(to_string(s.scheme))},
          {"estimator", encode(s.estimator)},
          {"channel_estimators", channels},
          {"channels", s.channels},
          {"daily", s.daily},
          {"theta", hex(s.theta)},
          {"theta1", hex(s.theta1)},
          {"theta2", hex(s.theta2)},
          {"mix_s", hex(s.mix_s)},
          {"mix_t", hex(s.mix_t)},
          {"threshold", hex(s.threshold)},
          {"prune_margin", s.prune_margin ? json(hex(*s.prune_margin)) : json(nullptr)}};
}

DetectorSpec decode_spec(const json& j) {
  DetectorSpec s;
  s.model.family = parse_family(j.at("family").get<std::string>());
  s.model.baseline = unhex(j.at("baseline"));
  s.scheme = parse_scheme(j.at("scheme").get<std::string>());
  s.estimator = decode_estimator(j.at("estimator"));
  for (const auto& e : j.at("channel_estimators")) s.channel_estimators.push_back(decode_estimator(e));
  s.channels = j.at("channels").get<int>();
  s.daily = j.at("daily").get<bool>();
  s.theta = unhex(j.at("theta"));
  s.theta1 = unhex(j.at("theta1"));
  s.theta2 = unhex(j.at("theta2"));
  s.mix_s = unhex(j.at("mix_s"));
  s.mix_t = unhex(j.at("mix_t"));
  s.threshold = unhex(j.at("threshold"));
  if (!j.at("prune_margin").is_null()) s.prune_margin = unhex(j.at("prune_margin"));
  return s;
}

}  // namespace

std::string Detector::checkpoint() const {
  json states = json::array();
  for (const auto& st : states_) {
    states.push_back(json::array({st.count, hex(st.acc), hex(st.raw), hex(st.value), hex(st.log_gamma_value)}));
  }
  json log_lambda = json::array();
  for (double l : log_lambda_) log_lambda.push_back(hex(l));
  json record{{"format", kCheckpointFormat},
              {"version", kCheckpointVersion},
              {"spec", encode(spec_)},
              {"n", n_},
              {"stopped", stopped_},
              {"r", hex(r_)},
              {"log_r", hex(log_r_)},
              {"log_r1", hex(log_r1_)},
              {"log_r2", hex(log_r2_)},
              {"origin_k", origin_k_},
              {"log_lambda", log_lambda},
              {"states", states}};
  return record.dump();
}

Detector Detector::restore(std::string_view record) {
  json j;
  try {
    j = json::parse(record);
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: parse error: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", std::string{}) != kCheckpointFormat)
      throw CheckpointError("checkpoint: not a detector record");
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));

    Detector det(decode_spec(j.at("spec")));
    det.n_ = j.at("n").get<std::int64_t>();
    det.stopped_ = j.at("stopped").get<bool>();
    det.r_ = unhex(j.at("r"));
    det.log_r_ = unhex(j.at("log_r"));
    det.log_r1_ = unhex(j.at("log_r1"));
    det.log_r2_ = unhex(j.at("log_r2"));
    det.origin_k_ = j.at("origin_k").get<std::vector<std::int64_t>>();
    for (const auto& l : j.at("log_lambda")) det.log_lambda_.push_back(unhex(l));
    for (const auto& s : j.at("states")) {
      EstimatorState st;
      st.count = s.at(0).get<std::int64_t>();
      st.acc = unhex(s.at(1));
      st.raw = unhex(s.at(2));
      st.value = unhex(s.at(3));
      st.log_gamma_value = unhex(s.at(4));
      det.states_.push_back(st);
    }
    const std::size_t per = det.spec_.scheme == SchemeKind::NormalMixture ? 1 : det.width_;
    if (det.origin_k_.size() != det.log_lambda_.size() ||
        det.states_.size() != det.log_lambda_.size() * (det.origin_based() ? per : 0)) {
      throw CheckpointError("checkpoint: inconsistent origin arrays");
    }
    return det;
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: invalid content: ") + e.what());
  }
}

}  // namespace srrs
