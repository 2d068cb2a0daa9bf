#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "srrs/detectors.hpp"
#include "srrs/montecarlo.hpp"
#include "srrs/special.hpp"

using namespace srrs;

namespace {

const ModelSpec kGamma = ModelSpec::gamma_shape(1.0);

std::vector<double> gamma_path(std::uint64_t seed, int n, double shape) {
  RandomStream rng(seed, 0);
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(rng.gamma(shape).value);
  return xs;
}

// Log-density ratio of one observation under `theta` vs the baseline.
double llr(const ModelSpec& m, double theta, double x) { return log_likelihood_ratio(m, theta, x); }

// Moment estimate of origin k (0-based) at time i from x_k..x_{i-1}.
double mom_estimate(const std::vector<double>& xs, std::size_t k, std::size_t i, double s, double t,
                    double baseline) {
  if (i == k) return (s > 0 && t > 0) ? s / t : baseline;
  double sum = 0.0;
  for (std::size_t j = k; j < i; ++j) sum += xs[j];
  return (sum + s) / static_cast<double>(i - k + t);
}

double mle_estimate(const std::vector<double>& xs, std::size_t k, std::size_t i, double baseline) {
  if (i == k) return baseline;
  double sum = 0.0;
  for (std::size_t j = k; j < i; ++j) sum += std::log(xs[j]);
  return digamma_inverse(sum / static_cast<double>(i - k));
}

bool rel_close(double a, double b, double rel) { return std::fabs(a - b) <= rel * std::fabs(b); }

}  // namespace

TEST_CASE("first step of the moment scheme") {
  Detector det(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(0, 0), 100.0));
  det.step(2.3);
  CHECK(det.r() == 1.0);
  CHECK(det.n() == 1);
  CHECK(det.origin_indices().size() == 1);
  CHECK(det.origin_indices()[0] == 1);
}

TEST_CASE("incremental R_n equals the from-scratch origin sum") {
  const auto xs = gamma_path(7, 200, 1.4);
  SUBCASE("moments") {
    for (double t : {0.0, 0.5, 1.0}) {
      Detector det(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(t, t), 1e300));
      for (std::size_t n = 1; n <= xs.size(); ++n) {
        det.step(xs[n - 1]);
        if (n % 20 != 0 && n > 5) continue;
        double r = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          double l = 0.0;
          for (std::size_t i = k; i < n; ++i) l += llr(kGamma, mom_estimate(xs, k, i, t, t, 1.0), xs[i]);
          r += std::exp(l);
        }
        INFO("t " << t << " n " << n);
        CHECK(rel_close(det.r(), r, 1e-9));
      }
    }
  }
  SUBCASE("likelihood") {
    Detector det(DetectorSpec::srrs(kGamma, EstimatorSpec::mle_gamma(), 1e300));
    for (std::size_t n = 1; n <= 120; ++n) det.step(xs[n - 1]);
    double r = 0.0;
    for (std::size_t k = 0; k < 120; ++k) {
      double l = 0.0;
      for (std::size_t i = k; i < 120; ++i) l += llr(kGamma, mle_estimate(xs, k, i, 1.0), xs[i]);
      r += std::exp(l);
    }
    CHECK(rel_close(det.r(), r, 1e-9));
  }
  SUBCASE("daily stream") {
    Detector det(DetectorSpec::daily_srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 1e300));
    for (std::size_t n = 1; n <= 150; ++n) det.step(xs[n - 1]);
    double r = 0.0;
    for (std::size_t k = 0; k < 150; ++k) {
      double l = 0.0;
      for (std::size_t i = k; i < 150; ++i) {
        // same weekday, origin k onwards
        double sum = 0.0;
        int count = 0;
        for (std::size_t j = k; j < i; ++j) {
          if ((j + 1) % 7 == (i + 1) % 7) {
            sum += xs[j];
            ++count;
          }
        }
        CHECK(count == static_cast<int>((i - k) / 7));
        l += llr(kGamma, (sum + 1.0) / (count + 1.0), xs[i]);
      }
      r += std::exp(l);
    }
    CHECK(rel_close(det.r(), r, 1e-9));
  }
}

TEST_CASE("known-parameter recursion equals the origin sum with a fixed estimate") {
  const auto xs = gamma_path(9, 300, 1.0);
  Detector rec(DetectorSpec::sr_fixed(kGamma, 1.7, 1e300));
  Detector org(DetectorSpec::srrs(kGamma, EstimatorSpec::fixed(1.7), 1e300));
  for (double x : xs) {
    rec.step(x);
    org.step(x);
    CHECK(rel_close(rec.r(), org.r(), 1e-9));
  }
  CHECK(rec.origin_indices().empty());
}

TEST_CASE("pair mixture") {
  SUBCASE("first step from densities") {
    Detector det(DetectorSpec::pair_mixture(kGamma, 0.5, 2.0, 1e9));
    det.step(1.0);
    CHECK(det.r() == doctest::Approx(0.5 / std::sqrt(kPi) + 0.5).epsilon(1e-14));
  }
  SUBCASE("degenerate pair equals the single recursion") {
    const auto xs = gamma_path(10, 200, 1.0);
    Detector pm(DetectorSpec::pair_mixture(kGamma, 1.3, 1.3, 1e300));
    Detector sr(DetectorSpec::sr_fixed(kGamma, 1.3, 1e300));
    for (double x : xs) {
      pm.step(x);
      sr.step(x);
      CHECK(rel_close(pm.r(), sr.r(), 1e-12));
    }
  }
  SUBCASE("average of the two recursions") {
    const auto xs = gamma_path(12, 150, 1.0);
    Detector pm(DetectorSpec::pair_mixture(kGamma, 0.65, 1.5, 1e300));
    Detector a(DetectorSpec::sr_fixed(kGamma, 0.65, 1e300));
    Detector b(DetectorSpec::sr_fixed(kGamma, 1.5, 1e300));
    for (double x : xs) {
      pm.step(x);
      a.step(x);
      b.step(x);
      CHECK(rel_close(pm.r(), 0.5 * a.r() + 0.5 * b.r(), 1e-12));
    }
  }
  CHECK_THROWS_AS(Detector(DetectorSpec::pair_mixture(kGamma, 2.0, 0.5, 10.0)), std::invalid_argument);
}

TEST_CASE("multichannel scheme") {
  SUBCASE("one channel is the univariate scheme") {
    const auto xs = gamma_path(13, 250, 0.8);
    Detector multi(DetectorSpec::multi(kGamma, EstimatorSpec::mom_gamma(1, 1), 1, 1e300));
    Detector uni(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 1e300));
    for (double x : xs) {
      multi.step(std::span<const double>(&x, 1));
      uni.step(x);
      CHECK(rel_close(multi.r(), uni.r(), 1e-9));
    }
  }
  SUBCASE("channels multiply, each with its own estimator") {
    const std::vector<EstimatorSpec> per = {EstimatorSpec::mom_gamma(1, 1), EstimatorSpec::mle_gamma(),
                                            EstimatorSpec::mom_gamma(0, 0)};
    Detector det(DetectorSpec::multi(kGamma, per, 1e300));
    std::vector<std::vector<double>> cols = {gamma_path(1, 60, 1.0), gamma_path(2, 60, 2.0),
                                             gamma_path(3, 60, 0.5)};
    for (int n = 1; n <= 60; ++n) {
      const double row[3] = {cols[0][n - 1], cols[1][n - 1], cols[2][n - 1]};
      det.step(std::span<const double>(row, 3));
    }
    double r = 0.0;
    for (std::size_t k = 0; k < 60; ++k) {
      double l = 0.0;
      for (std::size_t i = k; i < 60; ++i) {
        l += llr(kGamma, mom_estimate(cols[0], k, i, 1, 1, 1.0), cols[0][i]);
        l += llr(kGamma, mle_estimate(cols[1], k, i, 1.0), cols[1][i]);
        l += llr(kGamma, mom_estimate(cols[2], k, i, 0, 0, 1.0), cols[2][i]);
      }
      r += std::exp(l);
    }
    CHECK(rel_close(det.r(), r, 1e-9));
  }
}

TEST_CASE("origin bookkeeping") {
  Detector det(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(0, 0), 1e300));
  const auto xs = gamma_path(14, 100, 1.2);
  for (std::size_t n = 1; n <= xs.size(); ++n) {
    det.step(xs[n - 1]);
    CHECK(det.origin_indices().size() == n);
    CHECK(det.r() >= 1.0);
    CHECK(det.origin_log_lambdas().back() == 0.0);
    // partial sums over the newest origins never exceed R_n
    double tail = 0.0;
    const auto ll = det.origin_log_lambdas();
    for (std::size_t j = ll.size(); j-- > 0;) {
      tail += std::exp(ll[j]);
      CHECK(tail <= det.r() * (1 + 1e-12));
    }
  }
  CHECK(det.origin_states(0)[0].count == 100);
}

TEST_CASE("Bernoulli moment scheme equals the Beta mixture for every short sequence") {
  const ModelSpec bern = ModelSpec::bernoulli(0.3);
  const double s = 1.0, t = 2.0;
  const auto log_beta = [](double a, double b) { return log_gamma(a) + log_gamma(b) - log_gamma(a + b); };
  int checked = 0;
  for (int len = 1; len <= 12; ++len) {
    for (int bits = 0; bits < (1 << len); ++bits) {
      Detector det(DetectorSpec::srrs(bern, EstimatorSpec::bernoulli_beta(s, t), 1e300));
      int ones = 0;
      for (int i = 0; i < len; ++i) {
        const int x = (bits >> i) & 1;
        ones += x;
        det.step(static_cast<double>(x));
      }
      const int zeros = len - ones;
      const double mixture = log_beta(s + ones, t - s + zeros) - log_beta(s, t - s) -
                             ones * std::log(0.3) - zeros * std::log(0.7);
      const double lambda_n1 = det.origin_log_lambdas()[0];
      CHECK(std::fabs(std::exp(lambda_n1) - std::exp(mixture)) <= 1e-10 * std::exp(mixture));
      ++checked;
    }
  }
  CHECK(checked == (1 << 13) - 2);
}

TEST_CASE("normal mixture detector") {
  const ModelSpec normal = ModelSpec::normal_mean(0.0);
  Detector det(DetectorSpec::normal_mixture(normal, 0.0, 0.42626, 1e300));
  RandomStream rng(15, 0);
  std::vector<double> xs;
  for (int i = 0; i < 80; ++i) xs.push_back(rng.normal() + 0.3);
  for (double x : xs) det.step(x);
  double r = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double sum = 0.0;
    for (std::size_t i = k; i < xs.size(); ++i) sum += xs[i];
    r += std::exp(normal_mixture_log_stat(static_cast<std::int64_t>(xs.size() - k), sum, 0.0, 0.42626));
  }
  CHECK(rel_close(det.r(), r, 1e-9));
}

TEST_CASE("stopping and errors") {
  SUBCASE("A <= 1 alarms at the first step") {
    RandomStream rng(1, 0);
    auto src = [&] { return draw(kGamma, 1.0, rng); };
    const auto rec = run_detector(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(0, 0), 1.0), src, 100);
    CHECK(rec.stop_time == 1);
    CHECK_FALSE(rec.truncated);
  }
  Detector det(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(0, 0), 0.5));
  CHECK_THROWS_AS(det.step(-1.0), std::domain_error);
  CHECK(det.n() == 0);
  det.step(1.0);
  CHECK(det.stopped());
  CHECK_THROWS_AS(det.step(1.0), std::logic_error);

  Detector multi(DetectorSpec::multi(kGamma, EstimatorSpec::mom_gamma(1, 1), 3, 10.0));
  const double two[2] = {1.0, 2.0};
  CHECK_THROWS_AS(multi.step(std::span<const double>(two, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Detector(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(Detector(DetectorSpec::normal_mixture(kGamma, 0, 1, 10.0)), std::invalid_argument);
}

TEST_CASE("checkpoints") {
  const auto xs = gamma_path(16, 200, 1.1);
  const std::vector<DetectorSpec> specs = {
      DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 1e300),
      DetectorSpec::srrs(kGamma, EstimatorSpec::mle_gamma().with_clamp(0.2, 5.0), 1e300),
      DetectorSpec::daily_srrs(kGamma, EstimatorSpec::mom_gamma(0.5, 0.5), 1e300),
      DetectorSpec::pair_mixture(kGamma, 0.5, 2.0, 1e300),
      DetectorSpec::sr_fixed(kGamma, 1.5, 1e300),
      DetectorSpec::multi(kGamma, EstimatorSpec::mom_gamma(1, 1), 2, 1e300)};
  for (const auto& spec : specs) {
    INFO("scheme " << to_string(spec.scheme));
    Detector a(spec);
    const int w = spec.observation_width();
    std::size_t pos = 0;
    auto next = [&] { return std::span<const double>(xs.data() + (pos++ % 100) * w, w); };
    for (int i = 0; i < 50; ++i) a.step(next());
    Detector b = Detector::restore(a.checkpoint());
    CHECK(b.spec() == a.spec());
    CHECK(b.checkpoint() == a.checkpoint());
    for (int i = 0; i < 50; ++i) {
      const auto row = next();
      a.step(row);
      b.step(row);
      CHECK(a.r() == b.r());
      CHECK(a.log_r() == b.log_r());
    }
  }
  SUBCASE("empty state") {
    Detector fresh(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 578.0));
    Detector back = Detector::restore(fresh.checkpoint());
    CHECK(back.n() == 0);
    CHECK(back.checkpoint() == fresh.checkpoint());
  }
  SUBCASE("normal mixture") {
    const ModelSpec normal = ModelSpec::normal_mean(0.0);
    Detector a(DetectorSpec::normal_mixture(normal, 0.0, 0.42626, 1e300));
    for (int i = 0; i < 30; ++i) a.step(0.1 * i - 1.0);
    Detector b = Detector::restore(a.checkpoint());
    a.step(0.7);
    b.step(0.7);
    CHECK(a.r() == b.r());
  }
  SUBCASE("rejections") {
    Detector fresh(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 578.0));
    std::string rec = fresh.checkpoint();
    const auto at = rec.find("\"version\":1");
    REQUIRE(at != std::string::npos);
    std::string future = rec;
    future.replace(at, 11, "\"version\":2");
    CHECK_THROWS_AS(Detector::restore(future), CheckpointError);
    CHECK_THROWS_AS(Detector::restore("not json"), CheckpointError);
    CHECK_THROWS_AS(Detector::restore("{\"format\":\"srrs-detector\"}"), CheckpointError);
    CHECK_THROWS_AS(Detector::restore(rec.substr(0, rec.size() / 2)), CheckpointError);
  }
}

TEST_CASE("optional pruning keeps the statistic close") {
  const auto xs = gamma_path(17, 400, 1.0);
  DetectorSpec spec = DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 1000.0);
  Detector full(spec);
  spec.prune_margin = 40.0;
  Detector pruned(spec);
  for (double x : xs) {
    full.step(x);
    pruned.step(x);
    CHECK(rel_close(pruned.r(), full.r(), 1e-12));
  }
  CHECK(pruned.origin_indices().size() <= full.origin_indices().size());
}
