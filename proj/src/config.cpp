#include "srrs/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace srrs {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("config key '" + std::string(key) + "' value '" + std::string(value) + "': " +
                    std::string(why));
}

double to_double(std::string_view key, std::string_view value) {
  const std::string v(value);
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(d))
    bad(key, value, "expected a finite real");
  return d;
}

long long to_int(std::string_view key, std::string_view value) {
  const std::string v(value);
  char* end = nullptr;
  errno = 0;
  const long long i = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) bad(key, value, "expected an integer");
  return i;
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  const std::string v(value);
  char* end = nullptr;
  errno = 0;
  if (!v.empty() && v[0] == '-') bad(key, value, "expected a nonnegative integer");
  const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    bad(key, value, "expected a nonnegative integer");
  return u;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad(key, value, "expected true or false");
}

std::vector<double> to_list(std::string_view key, std::string_view value) {
  std::vector<double> out;
  if (value.empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = value.find(',', pos);
    out.push_back(to_double(key, trim(value.substr(pos, comma - pos))));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(double d) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", d);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt(v[i]);
  }
  return out;
}

const std::vector<std::string> kCommands = {"gamma-const", "powerone", "arl", "delay", "calibrate", "hist-g"};

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "command", "family",  "theta0",     "scheme", "estimator", "s",     "t",     "theta",
      "theta1",  "theta2",  "clamp",      "channels", "daily",   "b",     "b0",    "b1",
      "A",       "target_arl", "theta_post", "nu",   "runs",      "n_max", "seed",  "workers",
      "n_big",   "bin_width", "output"};
  return keys;
}

void set_config_key(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "command") {
    if (std::find(kCommands.begin(), kCommands.end(), value) == kCommands.end())
      bad(key, value, "unknown command");
    cfg.command = value;
  } else if (key == "family") {
    try {
      parse_family(value);
    } catch (const std::exception& e) {
      bad(key, value, e.what());
    }
    cfg.family = value;
  } else if (key == "theta0") {
    cfg.theta0 = to_double(key, value);
  } else if (key == "scheme") {
    try {
      parse_scheme(value);
    } catch (const std::exception& e) {
      bad(key, value, e.what());
    }
    cfg.scheme = value;
  } else if (key == "estimator") {
    try {
      parse_estimator_kind(value);
    } catch (const std::exception& e) {
      bad(key, value, e.what());
    }
    cfg.estimator = value;
  } else if (key == "s") {
    cfg.s = to_double(key, value);
  } else if (key == "t") {
    cfg.t = to_double(key, value);
  } else if (key == "theta") {
    cfg.theta = to_double(key, value);
  } else if (key == "theta1") {
    cfg.theta1 = to_double(key, value);
  } else if (key == "theta2") {
    cfg.theta2 = to_double(key, value);
  } else if (key == "clamp") {
    if (value.empty() || value == "none") {
      cfg.clamp.reset();
    } else {
      const auto v = to_list(key, value);
      if (v.size() != 2) bad(key, value, "expected lo,hi");
      cfg.clamp = Clamp{v[0], v[1]};
    }
  } else if (key == "channels") {
    const auto m = to_int(key, value);
    if (m < 1 || m > 1000000) bad(key, value, "expected a positive channel count");
    cfg.channels = static_cast<int>(m);
  } else if (key == "daily") {
    cfg.daily = to_bool(key, value);
  } else if (key == "b") {
    cfg.b = to_double(key, value);
  } else if (key == "b0") {
    cfg.b0 = to_double(key, value);
  } else if (key == "b1") {
    cfg.b1 = to_double(key, value);
  } else if (key == "A") {
    cfg.A = to_double(key, value);
  } else if (key == "target_arl") {
    cfg.target_arl = to_double(key, value);
  } else if (key == "theta_post") {
    cfg.theta_post = to_list(key, value);
  } else if (key == "nu") {
    if (value == "inf") {
      cfg.nu = kNoChange;
    } else {
      cfg.nu = to_int(key, value);
      if (cfg.nu < 1) bad(key, value, "expected a positive index or inf");
    }
  } else if (key == "runs") {
    cfg.runs = to_int(key, value);
    if (cfg.runs < 1) bad(key, value, "expected runs >= 1");
  } else if (key == "n_max") {
    cfg.n_max = to_int(key, value);
    if (cfg.n_max < 1) bad(key, value, "expected n_max >= 1");
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "workers") {
    const auto w = to_int(key, value);
    if (w < 1 || w > 4096) bad(key, value, "expected workers >= 1");
    cfg.workers = static_cast<int>(w);
  } else if (key == "n_big") {
    cfg.n_big = to_int(key, value);
    if (cfg.n_big < 0) bad(key, value, "expected n_big >= 0");
  } else if (key == "bin_width") {
    cfg.bin_width = to_double(key, value);
    if (!(cfg.bin_width > 0.0)) bad(key, value, "expected a positive width");
  } else if (key == "output") {
    cfg.output = value;
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_key(cfg, trim(std::string_view(body).substr(0, eq)),
                   trim(std::string_view(body).substr(eq + 1)));
  }
  return cfg;
}

std::string render_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "command=" << cfg.command << '\n'
      << "family=" << cfg.family << '\n'
      << "theta0=" << fmt(cfg.theta0) << '\n'
      << "scheme=" << cfg.scheme << '\n'
      << "estimator=" << cfg.estimator << '\n'
      << "s=" << fmt(cfg.s) << '\n'
      << "t=" << fmt(cfg.t) << '\n'
      << "theta=" << fmt(cfg.theta) << '\n'
      << "theta1=" << fmt(cfg.theta1) << '\n'
      << "theta2=" << fmt(cfg.theta2) << '\n'
      << "clamp=" << (cfg.clamp ? fmt(cfg.clamp->lo) + "," + fmt(cfg.clamp->hi) : "none") << '\n'
      << "channels=" << cfg.channels << '\n'
      << "daily=" << (cfg.daily ? "true" : "false") << '\n'
      << "b=" << fmt(cfg.b) << '\n'
      << "b0=" << fmt(cfg.b0) << '\n'
      << "b1=" << fmt(cfg.b1) << '\n'
      << "A=" << fmt(cfg.A) << '\n'
      << "target_arl=" << fmt(cfg.target_arl) << '\n'
      << "theta_post=" << fmt_list(cfg.theta_post) << '\n'
      << "nu=" << (cfg.nu == kNoChange ? std::string("inf") : std::to_string(cfg.nu)) << '\n'
      << "runs=" << cfg.runs << '\n'
      << "n_max=" << cfg.n_max << '\n'
      << "seed=" << cfg.seed << '\n'
      << "workers=" << cfg.workers << '\n'
      << "n_big=" << cfg.n_big << '\n'
      << "bin_width=" << fmt(cfg.bin_width) << '\n'
      << "output=" << cfg.output << '\n';
  return out.str();
}

ModelSpec model_of(const ExperimentConfig& cfg) {
  ModelSpec model{parse_family(cfg.family), cfg.theta0};
  model.validate();
  return model;
}

EstimatorSpec estimator_of(const ExperimentConfig& cfg) {
  EstimatorSpec spec;
  switch (parse_estimator_kind(cfg.estimator)) {
    case EstimatorKind::MomGamma: spec = EstimatorSpec::mom_gamma(cfg.s, cfg.t); break;
    case EstimatorKind::MleGamma: spec = EstimatorSpec::mle_gamma(cfg.s, cfg.t); break;
    case EstimatorKind::Fixed: spec = EstimatorSpec::fixed(cfg.theta); break;
    case EstimatorKind::NormalMean: spec = EstimatorSpec::normal_mean(cfg.s, cfg.t); break;
    case EstimatorKind::BernoulliBeta: spec = EstimatorSpec::bernoulli_beta(cfg.s, cfg.t); break;
  }
  if (cfg.clamp) spec = spec.with_clamp(cfg.clamp->lo, cfg.clamp->hi);
  spec.validate(model_of(cfg));
  return spec;
}

DetectorSpec detector_of(const ExperimentConfig& cfg) {
  const ModelSpec model = model_of(cfg);
  DetectorSpec spec;
  switch (parse_scheme(cfg.scheme)) {
    case SchemeKind::SRRS:
      spec = cfg.daily ? DetectorSpec::daily_srrs(model, estimator_of(cfg), cfg.A)
                       : DetectorSpec::srrs(model, estimator_of(cfg), cfg.A);
      break;
    case SchemeKind::SRFixed: spec = DetectorSpec::sr_fixed(model, cfg.theta, cfg.A); break;
    case SchemeKind::PairMixture:
      spec = DetectorSpec::pair_mixture(model, cfg.theta1, cfg.theta2, cfg.A);
      break;
    case SchemeKind::NormalMixture: spec = DetectorSpec::normal_mixture(model, cfg.s, cfg.t, cfg.A); break;
    case SchemeKind::Multi: spec = DetectorSpec::multi(model, estimator_of(cfg), cfg.channels, cfg.A); break;
  }
  spec.validate();
  return spec;
}

RunConfig run_config_of(const ExperimentConfig& cfg) {
  RunConfig rc;
  rc.seed = cfg.seed;
  rc.runs = cfg.runs;
  rc.n_max = cfg.n_max;
  rc.workers = cfg.workers;
  return rc;
}

const std::vector<std::string>& recipe_names() {
  static const std::vector<std::string> names = {"table1", "table2", "table3", "table4", "figure1"};
  return names;
}

std::vector<ExperimentConfig> recipe(std::string_view name, double scale) {
  if (!(scale > 0.0)) throw ConfigError("scale must be positive");
  auto scaled = [&](std::int64_t runs) {
    return std::max<std::int64_t>(1, std::llround(static_cast<double>(runs) * scale));
  };
  std::vector<ExperimentConfig> out;
  const double ts[] = {0.0, 0.5, 1.0};

  if (name == "table1") {
    const double intervals[3][2] = {{10, 15}, {15, 20}, {20, 25}};
    const std::int64_t n_max[] = {50000, 75000, 100000};
    for (double t : ts) {
      for (int i = 0; i < 3; ++i) {
        ExperimentConfig c;
        c.command = "gamma-const";
        c.estimator = "mom";
        c.s = c.t = t;
        c.b0 = intervals[i][0];
        c.b1 = intervals[i][1];
        c.runs = scaled(5000);
        c.n_max = n_max[i];
        out.push_back(c);
      }
    }
  } else if (name == "table2") {
    const double A[3][3] = {{221, 320, 440}, {275, 410, 555}, {309, 456, 578}};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        ExperimentConfig c;
        c.command = "arl";
        c.scheme = "srrs";
        c.estimator = "mom";
        c.s = c.t = ts[i];
        c.A = A[i][j];
        c.nu = kNoChange;
        c.runs = scaled(10000);
        c.n_max = static_cast<std::int64_t>(50 * c.A);
        out.push_back(c);
      }
    }
  } else if (name == "table3") {
    const double thetas[] = {0.35, 0.5, 0.65, 0.8, 1.25, 1.5, 1.75, 2, 2.5, 3};
    const double mom_A[] = {440, 555, 578};
    std::vector<ExperimentConfig> procs;
    for (int i = 0; i < 3; ++i) {
      ExperimentConfig c;
      c.scheme = "srrs";
      c.estimator = "mom";
      c.s = c.t = ts[i];
      c.A = mom_A[i];
      procs.push_back(c);
    }
    {
      ExperimentConfig c;
      c.scheme = "srrs";
      c.estimator = "mle";
      c.A = 632;
      procs.push_back(c);
    }
    const double pairs[3][3] = {{0.8, 1.25, 838}, {0.65, 1.5, 700}, {0.5, 2, 565}};
    for (const auto& p : pairs) {
      ExperimentConfig c;
      c.scheme = "pair-mixture";
      c.theta1 = p[0];
      c.theta2 = p[1];
      c.A = p[2];
      procs.push_back(c);
    }
    for (const auto& proc : procs) {
      for (double th : thetas) {
        ExperimentConfig c = proc;
        c.command = "delay";
        c.theta_post = {th};
        c.nu = 1;
        c.runs = scaled(10000);
        c.n_max = static_cast<std::int64_t>(50 * c.A);
        out.push_back(c);
      }
    }
  } else if (name == "table4") {
    const double As[] = {400, 450, 500, 550, 600, 650, 700};
    const double mus[] = {0, 0.25, 0.5, 0.75, 1, 1.5, 2, 3};
    for (double a : As) {
      for (double mu : mus) {
        for (const char* scheme : {"srrs", "normal-mixture"}) {
          ExperimentConfig c;
          c.family = "normal";
          c.theta0 = 0.0;
          c.scheme = scheme;
          c.estimator = "normal-mean";
          c.s = 0.0;
          c.t = 0.42626;
          c.A = a;
          c.runs = scaled(40000);
          c.n_max = static_cast<std::int64_t>(50 * a);
          if (mu == 0.0) {
            c.command = "arl";
            c.nu = kNoChange;
          } else {
            c.command = "delay";
            c.theta_post = {mu};
            c.nu = 1;
          }
          out.push_back(c);
        }
      }
    }
  } else if (name == "figure1") {
    for (double t : ts) {
      ExperimentConfig c;
      c.command = "hist-g";
      c.estimator = "mom";
      c.s = c.t = t;
      c.n_big = 10000;
      c.runs = scaled(10000);
      c.bin_width = 0.1;
      out.push_back(c);
    }
  } else {
    throw ConfigError("unknown recipe '" + std::string(name) + "'");
  }
  return out;
}

}  // namespace srrs
