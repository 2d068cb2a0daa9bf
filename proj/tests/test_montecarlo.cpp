#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "srrs/montecarlo.hpp"
#include "srrs/special.hpp"

using namespace srrs;

namespace {

const ModelSpec kGamma = ModelSpec::gamma_shape(1.0);
const ModelSpec kNormal = ModelSpec::normal_mean(0.0);

RunConfig config(std::uint64_t seed, std::int64_t runs, std::int64_t n_max, int workers = 1) {
  RunConfig c;
  c.seed = seed;
  c.runs = runs;
  c.n_max = n_max;
  c.workers = workers;
  return c;
}

double feed(std::initializer_list<double> path, double b0 = 10, double b1 = 15) {
  LadderAccumulator acc(b0, b1);
  for (double v : path) {
    if (acc.push(v)) break;
  }
  return acc.finish().value;
}

}  // namespace

TEST_CASE("summaries") {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto m = summarize(v, 1);
  CHECK(m.mean == 2.5);
  CHECK(m.std_err == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(m.runs == 4);
  CHECK(m.truncated == 1);
}

TEST_CASE("ladder averaging rules") {
  const double e = std::exp(1.0);
  // records 11 and 12 inside (10, 15], then 16 crosses 15
  CHECK(feed({5, 11, 9, 12, 16}) ==
        doctest::Approx(((1 - 1 / e) + (1 - 1 / e) + (1 - std::exp(12.0 - 16)) + std::exp(-1.0) - 1) / 5));
  // b1 never reached: divide by the largest ladder variable minus b0
  CHECK(feed({5, 11, 13}) == doctest::Approx(((1 - 1 / e) + (1 - std::exp(-2.0))) / 3.0));
  // b0 never reached
  CHECK(feed({5, 9.9, 3}) == 1.0);
  // one step over both boundaries
  CHECK(feed({20}) == doctest::Approx((1 - std::exp(-10.0) + std::exp(-5.0) - 1) / 5));
  // ties are not new records
  CHECK(feed({11, 11, 16}) == feed({11, 16}));
  // the run stops at the first record above b1
  LadderAccumulator acc(10, 15);
  CHECK_FALSE(acc.push(12));
  CHECK(acc.push(15.5));
  CHECK(acc.push(30));
  CHECK(acc.finish().reached_b1);
}

TEST_CASE("serial and parallel runs are bit-identical") {
  const auto est = EstimatorSpec::mom_gamma(1, 1);
  RunConfig serial = config(77, 64, 20000, 1);
  serial.execution = Execution::Serial;
  RunConfig parallel = config(77, 64, 20000, 8);
  const auto a = estimate_gamma_const(kGamma, est, 10, 15, serial);
  const auto b = estimate_gamma_const(kGamma, est, 10, 15, parallel);
  CHECK(a.gamma_hat == b.gamma_hat);
  CHECK(a.std_err == b.std_err);
  CHECK(a.truncated_b1 == b.truncated_b1);

  const auto det = DetectorSpec::srrs(kGamma, est, 50.0);
  const auto arl_s = estimate_arl(det, serial);
  const auto arl_p = estimate_arl(det, parallel);
  CHECK(arl_s.mean == arl_p.mean);
  CHECK(arl_s.std_err == arl_p.std_err);

  const double post = 2.0;
  const auto d_s = estimate_delay(det, std::span<const double>(&post, 1), 3, serial);
  const auto d_p = estimate_delay(det, std::span<const double>(&post, 1), 3, parallel);
  CHECK(d_s.mean == d_p.mean);

  const auto h_s = simulate_G_histogram(kGamma, est, 500, serial, 0.1);
  const auto h_p = simulate_G_histogram(kGamma, est, 500, parallel, 0.1);
  CHECK(h_s.values == h_p.values);
}

TEST_CASE("failures inside workers propagate") {
  RunConfig cfg = config(1, 16, 10, 4);
  CHECK_THROWS_AS(map_runs<int>(cfg, [](std::int64_t i) -> int {
                    if (i == 7) throw std::runtime_error("boom");
                    return 0;
                  }),
                  std::runtime_error);
}

TEST_CASE("Q sampler") {
  SUBCASE("fixed estimate is an iid stream") {
    const Estimator fixed(EstimatorSpec::fixed(2.5), kGamma);
    RandomStream a(3, 0), b(3, 0);
    QSampler q(fixed, a);
    for (int i = 0; i < 100; ++i) {
      const auto g = b.gamma(2.5);
      CHECK(q().x == g.value);
    }
  }
  SUBCASE("normal limit has unit variance at t = 0.42626") {
    const auto hist = simulate_G_histogram(kNormal, EstimatorSpec::normal_mean(0, 0.42626), 2000,
                                           config(5, 10000, 1), 0.1);
    double m = 0, m2 = 0;
    for (double v : hist.values) {
      m += v;
      m2 += v * v;
    }
    const double n = static_cast<double>(hist.values.size());
    const double var = m2 / n - (m / n) * (m / n);
    CHECK(std::fabs(var - 1.0) < 0.05);
  }
  SUBCASE("moment estimate is a martingale") {
    const auto hist =
        simulate_G_histogram(kGamma, EstimatorSpec::mom_gamma(1, 1), 10000, config(6, 2000, 1), 0.1);
    const auto m = summarize(hist.values);
    CHECK(std::fabs(m.mean - 1.0) <= 3.0 * m.std_err);
    std::int64_t total = 0;
    for (const auto& [bin, count] : hist.counts) {
      CHECK(bin >= 0);
      total += count;
    }
    CHECK(total == 2000);
  }
  SUBCASE("fixed estimate fills one bin") {
    const auto hist = simulate_G_histogram(kGamma, EstimatorSpec::fixed(1.25), 100, config(1, 50, 1), 0.1);
    CHECK(hist.counts.size() == 1);
    CHECK(hist.counts.begin()->first == 12);
  }
}

TEST_CASE("limit of the normal estimate is standard normal") {
  const auto hist = simulate_G_histogram(kNormal, EstimatorSpec::normal_mean(0, 0.42626), 10000,
                                         config(8, 10000, 1), 0.1);
  std::vector<double> v = hist.values;
  std::sort(v.begin(), v.end());
  double ks = 0.0;
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = normal_cdf(v[i]);
    ks = std::max({ks, std::fabs(f - i / n), std::fabs(f - (i + 1) / n)});
  }
  CHECK(ks < 0.02);
}

TEST_CASE("ladder estimate for a known mean matches nu(mu)") {
  for (double mu : {0.5, 1.0, 2.0}) {
    const auto est = estimate_gamma_const(kNormal, EstimatorSpec::fixed(mu), 10, 15, config(31, 4000, 100000));
    INFO("mu " << mu << " gamma_hat " << est.gamma_hat << " se " << est.std_err);
    CHECK(std::fabs(est.gamma_hat - nu_of_mu(mu)) <= 2.0 * est.std_err);
    CHECK(est.truncated_b0 == 0);
  }
}

TEST_CASE("ladder estimate agrees with the quadrature value for the normal scheme") {
  const auto est = estimate_gamma_const(kNormal, EstimatorSpec::normal_mean(0, 0.42626), 10, 15,
                                        config(32, 4000, 100000));
  const double quad = gamma_const_quadrature_normal(0, 0.42626);
  INFO("gamma_hat " << est.gamma_hat << " se " << est.std_err << " quad " << quad);
  // ladder over [10, 15] sits about 0.005 above the limit
  CHECK(std::fabs(est.gamma_hat - quad) <= 2.0 * est.std_err + 0.01);
  CHECK(est.gamma_hat > 0.0);
  CHECK(est.gamma_hat <= 1.0 + 3.0 * est.std_err);
}

TEST_CASE("gamma estimates are stable across boundary intervals") {
  const auto spec = EstimatorSpec::mom_gamma(1, 1);
  const auto a = estimate_gamma_const(kGamma, spec, 10, 15, config(41, 1500, 50000));
  const auto b = estimate_gamma_const(kGamma, spec, 15, 20, config(42, 1500, 75000));
  const auto c = estimate_gamma_const(kGamma, spec, 20, 25, config(43, 1500, 100000));
  auto agree = [](const LadderEstimate& x, const LadderEstimate& y) {
    return std::fabs(x.gamma_hat - y.gamma_hat) <= 3.0 * std::hypot(x.std_err, y.std_err);
  };
  CHECK(agree(a, b));
  CHECK(agree(b, c));
  CHECK(agree(a, c));
  CHECK_THROWS_AS(estimate_gamma_const(kGamma, spec, 15, 10, config(1, 1, 1)), std::invalid_argument);
}

TEST_CASE("false alarm rate: E N_A >= A") {
  for (double A : {20.0, 100.0}) {
    const auto m = estimate_arl(DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), A),
                                config(51, 2000, 100000));
    CHECK(m.mean >= A - 2.0 * m.std_err);
    CHECK(m.truncated == 0);
  }
  const auto pm = estimate_arl(DetectorSpec::pair_mixture(kGamma, 0.5, 2.0, 100.0), config(52, 2000, 100000));
  CHECK(pm.mean >= 100.0 - 2.0 * pm.std_err);
}

TEST_CASE("worst delay is at the start") {
  const auto det = DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 578.0);
  const double post = 2.0;
  const auto first = estimate_delay(det, std::span<const double>(&post, 1), 1, config(61, 2000, 30000));
  const auto later = estimate_delay(det, std::span<const double>(&post, 1), 5, config(62, 2000, 30000));
  CHECK(first.mean >= later.mean - 2.0 * std::hypot(first.std_err, later.std_err));
}

TEST_CASE("known-parameter delay grows like log A over the information number") {
  const double A = 1e20;
  const auto det = DetectorSpec::sr_fixed(kGamma, 2.0, A);
  const double post = 2.0;
  const auto d = estimate_delay(det, std::span<const double>(&post, 1), 1, config(71, 2000, 100000));
  CHECK(d.mean / (std::log(A) / kl_gamma(2.0, 1.0)) == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("changepoint source") {
  const auto det = DetectorSpec::daily_srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 10.0);
  RandomStream rng(1, 0), ref(1, 0);
  std::vector<double> post = {0.5, 1, 1.5, 2, 2.5, 3, 3.5};
  ChangepointSource src(det, post, 3, rng);
  for (int n = 1; n <= 20; ++n) {
    const auto row = src();
    const double param = n < 3 ? 1.0 : post[n % 7];
    CHECK(row[0].x == ref.gamma(param).value);
  }
  RandomStream r2(1, 0);
  CHECK_THROWS_AS(ChangepointSource(det, {1.0, 2.0}, 3, r2), std::invalid_argument);
  CHECK_THROWS_AS(ChangepointSource(det, {-1.0}, 3, r2), std::invalid_argument);
  CHECK_THROWS_AS(ChangepointSource(det, {2.0}, 0, r2), std::invalid_argument);
  CHECK_NOTHROW(ChangepointSource(det, {}, kNoChange, r2));

  const auto multi = DetectorSpec::multi(kGamma, EstimatorSpec::mom_gamma(1, 1), 3, 10.0);
  RandomStream r3(2, 0), ref3(2, 0);
  ChangepointSource msrc(multi, {0.5, 1.0, 2.0}, 1, r3);
  const auto row = msrc();
  CHECK(row.size() == 3);
  CHECK(row[0].x == ref3.gamma(0.5).value);
  CHECK(row[1].x == ref3.gamma(1.0).value);
  CHECK(row[2].x == ref3.gamma(2.0).value);
}

TEST_CASE("threshold calibration") {
  const auto templ = DetectorSpec::srrs(kGamma, EstimatorSpec::mom_gamma(1, 1), 1.0);
  CalibrationOptions conservative;
  conservative.conservative = true;
  const auto c = calibrate_threshold(templ, 1000.0, config(1, 10, 10), conservative);
  CHECK(c.threshold == 1000.0);
  CHECK(c.iterations == 0);

  CalibrationOptions opts;
  opts.gamma_hat = 0.6;
  const auto r = calibrate_threshold(templ, 150.0, config(81, 2000, 100000), opts);
  CHECK(r.converged);
  CHECK(std::fabs(r.arl.mean - 150.0) <= 2.0 * r.arl.std_err);
  CHECK(r.threshold / 150.0 == doctest::Approx(0.6).epsilon(0.15));
  CHECK_THROWS_AS(calibrate_threshold(templ, 0.5, config(1, 10, 10)), std::invalid_argument);
}
