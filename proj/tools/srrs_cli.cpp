// srrs: command-line front end.
//
// Exit status: 0 success, 1 runtime failure (bad input data, unreadable
// stream), 2 configuration or usage error, 3 alarm raised by `detect`.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "srrs/config.hpp"
#include "srrs/detectors.hpp"
#include "srrs/models.hpp"
#include "srrs/montecarlo.hpp"
#include "srrs/powerone.hpp"
#include "srrs/special.hpp"

namespace {

using namespace srrs;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAlarm = 3;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Registers a string flag that, when given, sets config key `key`.
void key_flag(CLI::App* app, Overrides& ov, const std::string& flag, const std::string& key,
              const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&ov, key](const std::string& v) { ov.emplace_back(key, v); }, help);
}

void model_flags(CLI::App* app, Overrides& ov) {
  key_flag(app, ov, "--family", "family", "gamma | normal | bernoulli");
  key_flag(app, ov, "--theta0", "theta0", "in-control parameter");
  key_flag(app, ov, "--estimator", "estimator", "mom | mle | fixed | normal-mean | bernoulli-beta");
  key_flag(app, ov, "--s", "s", "prior sum");
  key_flag(app, ov, "--t", "t", "prior count");
  key_flag(app, ov, "--theta", "theta", "Fixed estimator / sr-fixed parameter");
  key_flag(app, ov, "--clamp", "clamp", "lo,hi bounds on the estimate");
  key_flag(app, ov, "--runs", "runs", "Monte Carlo runs");
  key_flag(app, ov, "--nmax", "n_max", "truncation per run");
}

void detector_flags(CLI::App* app, Overrides& ov) {
  key_flag(app, ov, "--scheme", "scheme", "srrs | sr-fixed | pair-mixture | normal-mixture | multi");
  key_flag(app, ov, "--theta1", "theta1", "pair-mixture lower parameter");
  key_flag(app, ov, "--theta2", "theta2", "pair-mixture upper parameter");
  key_flag(app, ov, "--channels", "channels", "multi: observations per step");
  key_flag(app, ov, "--daily", "daily", "true: weekday-wise estimation on a daily stream");
  key_flag(app, ov, "--A", "A", "alarm threshold");
}

void write_header(std::ostream& out, const ExperimentConfig& cfg) {
  std::istringstream lines(render_config(cfg));
  std::string line;
  while (std::getline(lines, line)) out << "# " << line << '\n';
}

const char* kSummaryColumns =
    "kind,scheme,family,theta0,s,t,b0,b1,A,theta_post,nu,estimate,std_err,runs,truncated\n";

std::string post_list(const ExperimentConfig& cfg) {
  std::string out;
  for (std::size_t i = 0; i < cfg.theta_post.size(); ++i) out += (i ? ";" : "") + num(cfg.theta_post[i]);
  return out;
}

void summary_row(std::ostream& out, const ExperimentConfig& cfg, const std::string& kind, double estimate,
                 double std_err, std::int64_t runs, std::int64_t truncated) {
  const bool detector = kind != "gamma-const";
  out << kind << ',' << (detector ? cfg.scheme : cfg.estimator) << ',' << cfg.family << ','
      << num(cfg.theta0) << ',' << num(cfg.s) << ',' << num(cfg.t) << ','
      << (detector ? "" : num(cfg.b0)) << ',' << (detector ? "" : num(cfg.b1)) << ','
      << (detector ? num(cfg.A) : "") << ',' << post_list(cfg) << ','
      << (kind == "delay" ? std::to_string(cfg.nu) : "") << ',' << num(estimate) << ',' << num(std_err)
      << ',' << runs << ',' << truncated << '\n';
}

struct CalibrateFlags {
  std::optional<double> gamma_hat;
  bool conservative = false;
};

// Runs one summary-producing experiment and appends its CSV row.
void run_summary(std::ostream& out, const ExperimentConfig& cfg, const CalibrateFlags& cal) {
  const RunConfig rc = run_config_of(cfg);
  if (cfg.command == "gamma-const") {
    const auto est = estimate_gamma_const(model_of(cfg), estimator_of(cfg), cfg.b0, cfg.b1, rc);
    summary_row(out, cfg, "gamma-const", est.gamma_hat, est.std_err, est.runs,
                est.truncated_b0 + est.truncated_b1);
  } else if (cfg.command == "arl") {
    const auto m = estimate_arl(detector_of(cfg), rc);
    summary_row(out, cfg, "arl", m.mean, m.std_err, m.runs, m.truncated);
  } else if (cfg.command == "delay") {
    if (cfg.nu == kNoChange) throw ConfigError("delay needs a finite nu");
    std::vector<double> post = cfg.theta_post;
    if (post.empty()) throw ConfigError("delay needs theta_post");
    const auto m = estimate_delay(detector_of(cfg), post, cfg.nu, rc);
    summary_row(out, cfg, "delay", m.mean, m.std_err, m.runs, m.truncated);
  } else if (cfg.command == "calibrate") {
    CalibrationOptions opts;
    opts.gamma_hat = cal.gamma_hat;
    opts.conservative = cal.conservative;
    const auto res = calibrate_threshold(detector_of(cfg), cfg.target_arl, rc, opts);
    out << "# converged=" << (res.converged ? "true" : "false") << '\n'
        << "# iterations=" << res.iterations << '\n';
    ExperimentConfig shown = cfg;
    shown.A = res.threshold;
    summary_row(out, shown, "calibrate", res.arl.mean, res.arl.std_err, res.arl.runs, res.arl.truncated);
  } else {
    throw ConfigError("command '" + cfg.command + "' does not produce a summary row");
  }
}

void run_histogram(std::ostream& out, const ExperimentConfig& cfg) {
  const auto hist = simulate_G_histogram(model_of(cfg), estimator_of(cfg), cfg.n_big, run_config_of(cfg),
                                         cfg.bin_width);
  out << "bin_left,count\n";
  for (const auto& [bin, count] : hist.counts)
    out << num(static_cast<double>(bin) * cfg.bin_width) << ',' << count << '\n';
}

void run_powerone(std::ostream& out, const ExperimentConfig& cfg) {
  const ModelSpec model = model_of(cfg);
  const double param = cfg.theta_post.empty() ? model.baseline : cfg.theta_post.front();
  const auto records = simulate_power_one(model, estimator_of(cfg), cfg.b, param, run_config_of(cfg));
  out << "run_id,stop_time,overshoot,truncated\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << i << ',' << r.stop_time << ',' << (r.truncated ? "" : num(r.overshoot)) << ','
        << (r.truncated ? 1 : 0) << '\n';
  }
}

// Splits one input line on commas and/or whitespace.
std::vector<double> parse_row(const std::string& line, std::int64_t lineno) {
  std::vector<double> row;
  std::string field;
  auto flush = [&] {
    if (field.empty()) return;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size())
      throw std::runtime_error("line " + std::to_string(lineno) + ": not a number: '" + field + "'");
    row.push_back(v);
    field.clear();
  };
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') flush();
    else field += c;
  }
  flush();
  return row;
}

int run_detect(const ExperimentConfig& cfg, const std::string& input, const std::string& resume,
               const std::string& save) {
  std::optional<Detector> det;
  if (!resume.empty()) {
    std::ifstream f(resume);
    if (!f) throw std::runtime_error("cannot read checkpoint " + resume);
    std::stringstream ss;
    ss << f.rdbuf();
    det.emplace(Detector::restore(ss.str()));
  } else {
    det.emplace(detector_of(cfg));
  }
  std::ifstream file;
  std::istream* in = &std::cin;
  if (!input.empty() && input != "-") {
    file.open(input);
    if (!file) throw std::runtime_error("cannot read input " + input);
    in = &file;
  }
  const int width = det->spec().observation_width();
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    const auto row = parse_row(line, lineno);
    if (row.empty()) continue;
    if (static_cast<int>(row.size()) != width)
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                               " values");
    if (width == 1) det->step(row.front());
    else det->step(std::span<const double>(row));
    if (det->stopped()) {
      std::cout << "ALARM n=" << det->n() << " R=" << num(det->r()) << std::endl;
      return kExitAlarm;
    }
  }
  if (in->bad()) throw std::runtime_error("read error on input stream");
  if (!save.empty()) {
    std::ofstream f(save);
    f << det->checkpoint();
    if (!f) throw std::runtime_error("cannot write checkpoint " + save);
  }
  std::cout << "END n=" << det->n() << " R=" << num(det->r()) << std::endl;
  return 0;
}

struct TheoryFlags {
  std::vector<double> nu, v2, r, g, h, kl, ess, gamma_quad;
};

void run_theory(std::ostream& out, const TheoryFlags& f) {
  out << "quantity,argument,value\n";
  for (double mu : f.nu) out << "nu," << num(mu) << ',' << num(nu_of_mu(mu)) << '\n';
  for (double t : f.v2) out << "v2," << num(t) << ',' << num(v2(t)) << '\n';
  for (double t : f.r) out << "r," << num(t) << ',' << num(r_const(t)) << '\n';
  for (double t : f.g) out << "g," << num(t) << ',' << num(ess_g(t)) << '\n';
  for (double t : f.h) out << "h," << num(t) << ',' << num(ess_h(t)) << '\n';
  if (!f.kl.empty()) {
    if (f.kl.size() != 2) throw ConfigError("--kl expects theta,phi");
    out << "kl," << num(f.kl[0]) << ';' << num(f.kl[1]) << ',' << num(kl_gamma(f.kl[0], f.kl[1])) << '\n';
  }
  if (!f.ess.empty()) {
    if (f.ess.size() != 3) throw ConfigError("--ess expects mu,s,t");
    out << "ess-difference," << num(f.ess[0]) << ';' << num(f.ess[1]) << ';' << num(f.ess[2]) << ','
        << num(ess_difference(f.ess[0], f.ess[1], f.ess[2])) << '\n';
  }
  if (!f.gamma_quad.empty()) {
    if (f.gamma_quad.size() != 2) throw ConfigError("--gamma-quad expects s,t");
    out << "gamma-quad," << num(f.gamma_quad[0]) << ';' << num(f.gamma_quad[1]) << ','
        << num(gamma_const_quadrature_normal(f.gamma_quad[0], f.gamma_quad[1])) << '\n';
  }
}

void run_anticipating(std::ostream& out, const ExperimentConfig& cfg) {
  const RunConfig rc = run_config_of(cfg);
  const ModelSpec model = ModelSpec::normal_mean(0.0);
  const auto honest = estimate_rejection_rate(model, EstimatorSpec::normal_mean(0.0, 0.0), cfg.b, rc);
  const auto cheat = anticipating_rejection_rate(cfg.b, rc);
  out << "estimator,b,runs,n_max,rejections,rate,bound\n";
  out << "nonanticipating," << num(cfg.b) << ',' << honest.runs << ',' << cfg.n_max << ','
      << honest.rejections << ',' << num(honest.rate) << ',' << num(std::exp(-cfg.b)) << '\n';
  out << "anticipating," << num(cfg.b) << ',' << cheat.runs << ',' << cfg.n_max << ','
      << cheat.rejections << ',' << num(cheat.rate) << ',' << num(std::exp(-cfg.b)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential changepoint detection and power-one tests with nonanticipating estimation"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, recipe_name, output_path;
  double scale = 1.0;
  Overrides global;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--recipe", recipe_name, "table1 | table2 | table3 | table4 | figure1");
  app.add_option("--scale", scale, "multiply recipe run counts")->check(CLI::PositiveNumber);
  app.add_option("--output,-o", output_path, "write CSV here instead of stdout");
  key_flag(&app, global, "--seed", "seed", "64-bit seed");
  key_flag(&app, global, "--workers", "workers", "worker threads (default $SRRS_WORKERS or 1)");

  Overrides ov;
  CalibrateFlags cal;
  TheoryFlags theory;
  std::string input, resume, save;

  auto* theory_cmd = app.add_subcommand("theory", "analytic constants");
  theory_cmd->add_option("--nu", theory.nu, "nu(mu)")->delimiter(',');
  theory_cmd->add_option("--v2", theory.v2, "v2(t)")->delimiter(',');
  theory_cmd->add_option("--r", theory.r, "r_t")->delimiter(',');
  theory_cmd->add_option("--ess-g", theory.g, "g(t)")->delimiter(',');
  theory_cmd->add_option("--ess-h", theory.h, "h(t)")->delimiter(',');
  theory_cmd->add_option("--kl", theory.kl, "theta,phi")->delimiter(',');
  theory_cmd->add_option("--ess", theory.ess, "mu,s,t")->delimiter(',');
  theory_cmd->add_option("--gamma-quad", theory.gamma_quad, "s,t")->delimiter(',');

  auto* powerone_cmd = app.add_subcommand("powerone", "power-one test runs, one CSV row each");
  model_flags(powerone_cmd, ov);
  key_flag(powerone_cmd, ov, "--b", "b", "log boundary");
  key_flag(powerone_cmd, ov, "--theta-post", "theta_post", "sampling parameter (default baseline)");

  auto* gamma_cmd = app.add_subcommand("gamma-const", "ladder Monte Carlo estimate of gamma");
  model_flags(gamma_cmd, ov);
  key_flag(gamma_cmd, ov, "--b0", "b0", "interval start");
  key_flag(gamma_cmd, ov, "--b1", "b1", "interval end");

  auto* arl_cmd = app.add_subcommand("arl", "ARL to false alarm");
  model_flags(arl_cmd, ov);
  detector_flags(arl_cmd, ov);

  auto* delay_cmd = app.add_subcommand("delay", "mean detection delay");
  model_flags(delay_cmd, ov);
  detector_flags(delay_cmd, ov);
  key_flag(delay_cmd, ov, "--theta-post", "theta_post", "post-change parameter(s), comma separated");
  key_flag(delay_cmd, ov, "--nu", "nu", "changepoint index");

  auto* cal_cmd = app.add_subcommand("calibrate", "find A for a target ARL");
  model_flags(cal_cmd, ov);
  detector_flags(cal_cmd, ov);
  key_flag(cal_cmd, ov, "--target-arl", "target_arl", "target ARL to false alarm");
  cal_cmd->add_option("--gamma-hat", cal.gamma_hat, "start at A = target * gamma_hat");
  cal_cmd->add_flag("--conservative", cal.conservative, "return A = target without simulating");

  auto* detect_cmd = app.add_subcommand("detect", "stream observations; exit 3 on alarm");
  model_flags(detect_cmd, ov);
  detector_flags(detect_cmd, ov);
  detect_cmd->add_option("--input", input, "observation file (default stdin)");
  detect_cmd->add_option("--resume", resume, "restore detector from a checkpoint file");
  detect_cmd->add_option("--checkpoint", save, "write a checkpoint at end of stream");

  auto* hist_cmd = app.add_subcommand("hist-g", "histogram of the limiting estimate under Q");
  model_flags(hist_cmd, ov);
  key_flag(hist_cmd, ov, "--n-big", "n_big", "steps per path");
  key_flag(hist_cmd, ov, "--bin-width", "bin_width", "bin width");

  auto* demo_cmd = app.add_subcommand("demo-anticipating", "level of an estimator that sees x_n");
  key_flag(demo_cmd, ov, "--b", "b", "log boundary");
  key_flag(demo_cmd, ov, "--runs", "runs", "Monte Carlo runs");
  key_flag(demo_cmd, ov, "--nmax", "n_max", "truncation per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    ExperimentConfig base;
    if (const char* env = std::getenv("SRRS_WORKERS")) set_config_key(base, "workers", env);
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError("cannot read config " + config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      base = parse_config(ss.str(), base);
    }
    if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
      const std::string name = sub->get_name();
      if (name != "theory" && name != "detect" && name != "demo-anticipating") base.command = name;
    }
    for (const auto& [k, v] : global) set_config_key(base, k, v);
    for (const auto& [k, v] : ov) set_config_key(base, k, v);
    if (!output_path.empty()) base.output = output_path;

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!base.output.empty()) {
      file.open(base.output);
      if (!file) throw ConfigError("cannot write " + base.output);
      out = &file;
    }

    if (!recipe_name.empty()) {
      if (!app.get_subcommands().empty()) throw ConfigError("--recipe runs on its own, without a subcommand");
      auto cells = recipe(recipe_name, scale);
      *out << "# recipe=" << recipe_name << "\n# scale=" << num(scale) << '\n';
      for (auto& c : cells) {
        c.workers = base.workers;
        for (const auto& [k, v] : global) set_config_key(c, k, v);
      }
      if (recipe_name == "figure1") {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          *out << "# cell=" << i << '\n';
          write_header(*out, cells[i]);
          run_histogram(*out, cells[i]);
        }
      } else {
        for (std::size_t i = 0; i < cells.size(); ++i) {
          *out << "# cell=" << i << '\n';
          write_header(*out, cells[i]);
        }
        *out << kSummaryColumns;
        for (const auto& c : cells) {
          run_summary(*out, c, {});
          out->flush();
        }
      }
      return 0;
    }

    const std::string sub = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    if (sub == "theory") {
      run_theory(*out, theory);
    } else if (sub == "detect") {
      return run_detect(base, input, resume, save);
    } else if (sub == "demo-anticipating") {
      write_header(*out, base);
      run_anticipating(*out, base);
    } else if (base.command == "powerone") {
      write_header(*out, base);
      run_powerone(*out, base);
    } else if (base.command == "hist-g") {
      write_header(*out, base);
      run_histogram(*out, base);
    } else {
      if (sub.empty() && config_path.empty()) throw ConfigError("nothing to do: give a subcommand, --config or --recipe");
      write_header(*out, base);
      *out << kSummaryColumns;
      run_summary(*out, base, cal);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
