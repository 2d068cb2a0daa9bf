#include "srrs/estimators.hpp"

#include <stdexcept>
#include <string>

namespace srrs {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::MomGamma: return "mom";
    case EstimatorKind::MleGamma: return "mle";
    case EstimatorKind::Fixed: return "fixed";
    case EstimatorKind::NormalMean: return "normal-mean";
    case EstimatorKind::BernoulliBeta: return "bernoulli-beta";
  }
  return "unknown";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "mom") return EstimatorKind::MomGamma;
  if (name == "mle") return EstimatorKind::MleGamma;
  if (name == "fixed") return EstimatorKind::Fixed;
  if (name == "normal-mean") return EstimatorKind::NormalMean;
  if (name == "bernoulli-beta") return EstimatorKind::BernoulliBeta;
  throw std::invalid_argument("unknown estimator '" + std::string(name) + "'");
}

EstimatorSpec EstimatorSpec::mom_gamma(double s, double t) {
  return {EstimatorKind::MomGamma, s, t, 0.0, std::nullopt};
}

EstimatorSpec EstimatorSpec::mle_gamma(double s, double t) {
  return {EstimatorKind::MleGamma, s, t, 0.0, std::nullopt};
}

EstimatorSpec EstimatorSpec::fixed(double theta) {
  return {EstimatorKind::Fixed, 0.0, 0.0, theta, std::nullopt};
}

EstimatorSpec EstimatorSpec::normal_mean(double s, double t) {
  return {EstimatorKind::NormalMean, s, t, 0.0, std::nullopt};
}

EstimatorSpec EstimatorSpec::bernoulli_beta(double s, double t) {
  return {EstimatorKind::BernoulliBeta, s, t, 0.0, std::nullopt};
}

EstimatorSpec EstimatorSpec::with_clamp(double lo, double hi) const {
  EstimatorSpec copy = *this;
  copy.clamp = Clamp{lo, hi};
  return copy;
}

void EstimatorSpec::validate(const ModelSpec& model) const {
  model.validate();
  auto fail = [&](const std::string& why) {
    throw std::invalid_argument(std::string(to_string(kind)) + " estimator: " + why);
  };
  switch (kind) {
    case EstimatorKind::MomGamma:
    case EstimatorKind::MleGamma:
      if (model.family != Family::GammaShape) fail("requires the gamma family");
      if (!(s >= 0.0) || !(t >= 0.0)) fail("s and t must be nonnegative");
      break;
    case EstimatorKind::NormalMean:
      if (model.family != Family::NormalMean) fail("requires the normal family");
      if (!(t >= 0.0) || !std::isfinite(s)) fail("t must be nonnegative and s finite");
      if (t == 0.0 && s != 0.0) fail("s must be 0 when t = 0");
      break;
    case EstimatorKind::BernoulliBeta:
      if (model.family != Family::Bernoulli) fail("requires the bernoulli family");
      if (!(s > 0.0) || !(t > s)) fail("requires 0 < s < t");
      break;
    case EstimatorKind::Fixed:
      if (!model.valid_parameter(theta)) fail("fixed parameter outside the family's range");
      break;
  }
  if (clamp) {
    if (!(clamp->lo < clamp->hi)) fail("clamp bounds must satisfy lo < hi");
    if (model.family != Family::NormalMean && !(clamp->lo > 0.0)) fail("clamp bounds must be positive");
    if (model.family == Family::Bernoulli && !(clamp->hi < 1.0)) fail("clamp must lie inside (0, 1)");
  }
}

Estimator::Estimator(const EstimatorSpec& spec, const ModelSpec& model) : spec_(spec), model_(model) {
  spec_.validate(model_);
  if (model_.family == Family::GammaShape) log_gamma_baseline_ = log_gamma(model_.baseline);
}

EstimatorState Estimator::init() const {
  EstimatorState state;
  switch (spec_.kind) {
    case EstimatorKind::MomGamma:
      state.raw = (spec_.s > 0.0 && spec_.t > 0.0) ? spec_.s / spec_.t : model_.baseline;
      break;
    case EstimatorKind::MleGamma:
      state.raw = model_.baseline;
      break;
    case EstimatorKind::Fixed:
      state.raw = spec_.theta;
      break;
    case EstimatorKind::NormalMean:
      state.raw = spec_.t > 0.0 ? spec_.s / spec_.t : model_.baseline;
      break;
    case EstimatorKind::BernoulliBeta:
      state.raw = spec_.s / spec_.t;
      break;
  }
  set_value(state);
  return state;
}

}  // namespace srrs
