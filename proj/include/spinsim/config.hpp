// Run configuration for the command-line tool.
//
// Settings travel as flat key -> string maps until they are resolved into a
// RunConfig. Layers are merged in increasing precedence:
//   experiment defaults < preset < config file < environment < command line.
// The resolved config is rendered back into a canonical map (only the keys
// the experiment reads, numbers in shortest round-trip form), which is what
// the manifest stores and what a replay feeds back in.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "spinsim/dynamics.hpp"
#include "spinsim/experiments.hpp"
#include "spinsim/geom3.hpp"
#include "spinsim/integrator.hpp"

namespace spinsim {

/// Invalid user input; the tool exits with code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Settings = std::map<std::string, std::string>;

enum class Experiment { Align, Rate, L2Decay, Tail, Strato, Hitting, Hysteresis };

inline std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::Align: return "align";
    case Experiment::Rate: return "rate";
    case Experiment::L2Decay: return "l2decay";
    case Experiment::Tail: return "tail";
    case Experiment::Strato: return "strato";
    case Experiment::Hitting: return "hitting";
    case Experiment::Hysteresis: return "hysteresis";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Value formatting and parsing

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string format_vec3(const Vec3& v) {
  return format_double(v.x1) + "," + format_double(v.x2) + "," +
         format_double(v.x3);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] inline void bad_value(std::string_view key, std::string_view value,
                                   std::string_view why) {
  throw ConfigError("invalid value for '" + std::string(key) + "': '" +
                    std::string(value) + "' (" + std::string(why) + ")");
}

}  // namespace detail

inline double parse_double(std::string_view key, std::string_view text) {
  const std::string_view s = detail::trim(text);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    detail::bad_value(key, text, "expected a number");
  if (!std::isfinite(v)) detail::bad_value(key, text, "must be finite");
  return v;
}

inline std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  const std::string_view s = detail::trim(text);
  std::uint64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    detail::bad_value(key, text, "expected a non-negative integer");
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  const std::string_view s = detail::trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  detail::bad_value(key, text, "expected true or false");
}

inline Vec3 parse_vec3(std::string_view key, std::string_view text) {
  Vec3 v;
  std::string_view rest = text;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto comma = rest.find(',');
    if ((i < 2) == (comma == std::string_view::npos))
      detail::bad_value(key, text, "expected three comma-separated numbers");
    v[i] = parse_double(key, rest.substr(0, comma));
    if (comma != std::string_view::npos) rest = rest.substr(comma + 1);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Known keys

struct KeyInfo {
  std::string_view key;
  std::string_view help;
};

inline const std::vector<KeyInfo>& known_keys() {
  static const std::vector<KeyInfo> keys = {
      {"experiment", "align | rate | l2decay | tail | strato | hitting | hysteresis"},
      {"mode", "coupled | normalized (constant-field Ito experiments)"},
      {"alpha", "damping parameter"},
      {"eps", "noise magnitude"},
      {"b", "external field x,y,z (hysteresis: ramp direction, unit)"},
      {"b-mag", "rescale b to this magnitude"},
      {"mu0", "initial state: minus-b | plus-b | orthogonal | x,y,z"},
      {"t1", "time horizon"},
      {"dt", "time step"},
      {"record-stride", "record every n-th grid point"},
      {"n-paths", "number of Monte Carlo paths"},
      {"seed", "64-bit base seed"},
      {"threads", "worker threads (0: all cores)"},
      {"out", "output path prefix"},
      {"single-path", "also dump path 0 as t,value"},
      {"tail-start", "align: start of the tail window"},
      {"tail-level", "align: level the tail minimum must reach"},
      {"tail-fraction", "align: required fraction of paths"},
      {"rate-tol", "rate: relative tolerance on the limit"},
      {"l2-ratio", "l2decay: maximal value at T relative to T/100"},
      {"beta", "tail: time exponent in [0, 1/2)"},
      {"eta-thresh", "tail: exceedance threshold"},
      {"tail-max", "tail: maximal exceedance frequency at T"},
      {"strato-margin", "strato: required gap between |b| and the mean at T"},
      {"delta", "hitting: level of the cap mu . b <= delta"},
      {"t-max", "hitting: censoring horizon"},
      {"survival-stride", "hitting: survival curve every n-th step"},
      {"max-censored", "hitting: maximal censored fraction"},
      {"eta", "hysteresis: ramp time scale"},
      {"direction", "hysteresis: forward | backward"},
  };
  return keys;
}

inline bool is_known_key(std::string_view k) {
  for (const auto& ki : known_keys())
    if (ki.key == k) return true;
  return false;
}

inline void require_known(const Settings& s, std::string_view origin) {
  for (const auto& [k, v] : s)
    if (!is_known_key(k))
      throw ConfigError("unknown key '" + k + "' in " + std::string(origin));
}

/// Later layers override earlier ones.
inline Settings merge(std::initializer_list<const Settings*> layers) {
  Settings out;
  for (const Settings* l : layers)
    for (const auto& [k, v] : *l) out[k] = v;
  return out;
}

// ---------------------------------------------------------------------------
// Config files and environment

/// Flat `key = value` lines; `#` starts a comment; blank lines are skipped.
inline Settings parse_config_text(std::istream& in, std::string_view origin) {
  Settings out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos)
      s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    const std::string where = std::string(origin) + ":" + std::to_string(lineno);
    if (eq == std::string_view::npos)
      throw ConfigError(where + ": expected 'key = value'");
    const std::string key(detail::trim(s.substr(0, eq)));
    const std::string value(detail::trim(s.substr(eq + 1)));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!is_known_key(key))
      throw ConfigError(where + ": unknown key '" + key + "'");
    if (out.count(key)) throw ConfigError(where + ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

inline Settings load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config_text(in, path);
}

/// SPINSIM_SEED and SPINSIM_THREADS.
inline Settings environment_settings(
    const char* (*get)(const char*) = [](const char* n) -> const char* {
      return std::getenv(n);
    }) {
  Settings out;
  if (const char* s = get("SPINSIM_SEED"); s && *s) out["seed"] = s;
  if (const char* s = get("SPINSIM_THREADS"); s && *s) out["threads"] = s;
  return out;
}

// ---------------------------------------------------------------------------
// Presets

struct PresetRun {
  std::string tag;  // file-name suffix within a batch; empty for single runs
  Settings settings;
};

inline const std::vector<std::string_view>& preset_names() {
  static const std::vector<std::string_view> names = {
      "figure1", "figure2", "figure3", "figure4", "figure5"};
  return names;
}

/// Parameters read off the figures; horizons and path counts are filled
/// with this tool's defaults.
inline std::vector<PresetRun> preset(std::string_view name) {
  const Settings field = {{"eps", "0.1"}, {"b", "0,0,1"}, {"mu0", "minus-b"}};
  if (name == "figure1") {
    std::vector<PresetRun> runs;
    for (const char* a : {"0.5", "1", "2"}) {
      Settings s = field;
      s.insert({{"experiment", "align"}, {"mode", "coupled"}, {"alpha", a},
                {"t1", "100"}, {"dt", "0.01"}, {"record-stride", "10"},
                {"n-paths", "100"}, {"single-path", "true"}});
      runs.push_back({std::string("alpha") + a, s});
    }
    return runs;
  }
  if (name == "figure2") {
    std::vector<PresetRun> runs;
    for (const char* a : {"0.5", "1", "2"}) {
      Settings s = field;
      s.insert({{"experiment", "rate"}, {"mode", "coupled"}, {"alpha", a},
                {"t1", "10000"}, {"dt", "0.01"}, {"record-stride", "100"},
                {"n-paths", "100"}});
      runs.push_back({std::string("alpha") + a, s});
    }
    return runs;
  }
  if (name == "figure3") {
    std::vector<PresetRun> runs;
    for (const char* d : {"forward", "backward"}) {
      runs.push_back(
          {d,
           {{"experiment", "hysteresis"}, {"alpha", "1"}, {"eps", "0.005"},
            {"eta", "0.01"}, {"b", "0,0,1"}, {"direction", d}, {"dt", "1e-4"},
            {"record-stride", "10"}, {"n-paths", "100"},
            {"single-path", "true"}}});
    }
    return runs;
  }
  if (name == "figure4" || name == "figure5") {
    // figure5 is the zoom of figure4 near t = 1/2: same run, finer record.
    return {{"",
             {{"experiment", "hysteresis"}, {"alpha", "1"}, {"eps", "0.01"},
              {"eta", "3.1e-5"}, {"b", "0,0,1"}, {"direction", "forward"},
              {"dt", "2e-6"},
              {"record-stride", name == "figure4" ? "500" : "50"},
              {"n-paths", "100"}, {"single-path", "true"}}}};
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Resolved configuration

struct RunConfig {
  Experiment experiment = Experiment::Align;
  Mode mode = Mode::CoupledIto;
  ModelParams params;
  std::string mu0_spec = "minus-b";
  Vec3 mu0 = -e3;
  GridSpec grid;
  EnsembleOptions ensemble;
  std::string out;
  bool single_path = false;

  // align
  double tail_start = 50.0;
  double tail_level = 0.9;
  double tail_fraction = 0.95;
  // rate, l2decay, tail
  double rate_tol = 0.1;
  double l2_ratio = 0.1;
  TailSpec tail;
  double tail_max = 0.05;
  // strato
  double strato_margin = 0.005;
  // hitting
  double delta = 0.95;
  double t_max = 500.0;
  std::size_t survival_stride = 100;
  double max_censored = 0.1;
  // hysteresis
  double eta = 0.01;
  Direction direction = Direction::Forward;

  Settings canonical;  // resolved settings, as stored in manifests

  EnsembleConfig ensemble_config() const {
    EnsembleConfig c;
    c.mode = experiment == Experiment::Strato ? Mode::StratonovichIto : mode;
    c.params = params;
    c.mu0 = mu0;
    c.grid = grid;
    c.ensemble = ensemble;
    return c;
  }

  HittingConfig hitting_config() const {
    HittingConfig c;
    c.params = params;
    c.mu0 = mu0;
    c.delta = delta;
    c.t_max = t_max;
    c.dt = grid.dt;
    c.survival_stride = survival_stride;
    c.ensemble = ensemble;
    return c;
  }

  HysteresisConfig hysteresis_config() const {
    HysteresisConfig c;
    c.params = params;
    c.bhat = params.b;
    c.eta = eta;
    c.direction = direction;
    c.grid = grid;
    c.lambda0 = mu0;
    c.ensemble = ensemble;
    return c;
  }
};

namespace detail {

inline Experiment parse_experiment(std::string_view v) {
  for (Experiment e :
       {Experiment::Align, Experiment::Rate, Experiment::L2Decay,
        Experiment::Tail, Experiment::Strato, Experiment::Hitting,
        Experiment::Hysteresis})
    if (to_string(e) == v) return e;
  bad_value("experiment", v,
            "expected align, rate, l2decay, tail, strato, hitting or hysteresis");
}

inline Settings experiment_defaults(Experiment e) {
  Settings s = {{"alpha", "1"},   {"eps", "0.1"},    {"b", "0,0,1"},
                {"mu0", "minus-b"}, {"seed", "1"},   {"threads", "0"},
                {"dt", "0.01"},   {"out", "spinsim-" + std::string(to_string(e))}};
  switch (e) {
    case Experiment::Align:
      s.insert({{"mode", "coupled"}, {"t1", "100"}, {"record-stride", "10"},
                {"n-paths", "100"}, {"single-path", "true"},
                {"tail-level", "0.9"}, {"tail-fraction", "0.95"}});
      break;
    case Experiment::Rate:
    case Experiment::L2Decay:
    case Experiment::Tail:
      s.insert({{"mode", "coupled"}, {"t1", "10000"}, {"record-stride", "100"},
                {"n-paths", "10000"}, {"single-path", "false"},
                {"rate-tol", "0.1"}, {"l2-ratio", "0.1"}, {"beta", "0.25"},
                {"eta-thresh", "0.5"}, {"tail-max", "0.05"}});
      break;
    case Experiment::Strato:
      s["mu0"] = "plus-b";
      s.insert({{"t1", "200"}, {"record-stride", "10"}, {"n-paths", "1000"},
                {"single-path", "false"}, {"strato-margin", "0.005"}});
      break;
    case Experiment::Hitting:
      s["eps"] = "0.3";
      s["mu0"] = "plus-b";
      s.insert({{"delta", "0.95"}, {"t-max", "500"}, {"n-paths", "1000"},
                {"survival-stride", "100"}, {"max-censored", "0.1"}});
      break;
    case Experiment::Hysteresis:
      s["eps"] = "0.005";
      s["dt"] = "1e-4";
      s["mu0"] = "plus-b";
      s.insert({{"eta", "0.01"}, {"direction", "forward"},
                {"record-stride", "10"}, {"n-paths", "100"},
                {"single-path", "true"}});
      break;
  }
  return s;
}

/// Keys each experiment reads; anything else given is reported and ignored.
inline std::set<std::string> relevant_keys(Experiment e) {
  std::set<std::string> k = {"experiment", "alpha", "eps", "b", "mu0", "dt",
                             "n-paths", "seed", "threads", "out"};
  switch (e) {
    case Experiment::Align:
      k.insert({"mode", "t1", "record-stride", "single-path", "tail-start",
                "tail-level", "tail-fraction"});
      break;
    case Experiment::Rate:
      k.insert({"mode", "t1", "record-stride", "single-path", "rate-tol"});
      break;
    case Experiment::L2Decay:
      k.insert({"mode", "t1", "record-stride", "single-path", "l2-ratio"});
      break;
    case Experiment::Tail:
      k.insert({"mode", "t1", "record-stride", "single-path", "beta",
                "eta-thresh", "tail-max"});
      break;
    case Experiment::Strato:
      k.insert({"t1", "record-stride", "single-path", "strato-margin"});
      break;
    case Experiment::Hitting:
      k.insert({"delta", "t-max", "survival-stride", "max-censored"});
      break;
    case Experiment::Hysteresis:
      k.insert({"eta", "direction", "record-stride", "single-path"});
      break;
  }
  return k;
}

inline Vec3 resolve_mu0(std::string_view spec, const Vec3& b) {
  const Vec3 bhat = b / norm(b);
  if (spec == "minus-b") return -bhat;
  if (spec == "plus-b") return bhat;
  if (spec == "orthogonal") {
    // Unit vector orthogonal to b, built from the axis least aligned with it.
    const Vec3 axis = std::abs(bhat.x1) <= std::abs(bhat.x2) &&
                              std::abs(bhat.x1) <= std::abs(bhat.x3)
                          ? e1
                          : (std::abs(bhat.x2) <= std::abs(bhat.x3) ? e2 : e3);
    const Vec3 o = cross(bhat, axis);
    return o / norm(o);
  }
  const Vec3 v = parse_vec3("mu0", spec);
  if (std::abs(norm(v) - 1.0) > kUnitTolerance)
    bad_value("mu0", spec, "must be a unit vector");
  return v;
}

inline std::size_t positive_count(std::string_view key, std::string_view v) {
  const std::uint64_t n = parse_u64(key, v);
  if (n == 0) bad_value(key, v, "must be >= 1");
  return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Resolves merged user settings (without defaults) into a validated config.
/// Warnings about ignored keys go to `log`.
inline RunConfig resolve(const Settings& user, std::ostream& log = std::cerr) {
  require_known(user, "settings");
  const auto exp_it = user.find("experiment");
  const Experiment exp = detail::parse_experiment(
      exp_it == user.end() ? std::string_view("align") : exp_it->second);
  const Settings defaults = detail::experiment_defaults(exp);
  const std::set<std::string> relevant = detail::relevant_keys(exp);
  Settings s = defaults;
  for (const auto& [k, v] : user) {
    if (k == "b-mag") continue;
    if (!relevant.count(k)) {
      log << "spinsim: note: key '" << k << "' is not used by experiment "
          << to_string(exp) << "\n";
      continue;
    }
    s[k] = v;
  }
  s["experiment"] = std::string(to_string(exp));
  auto get = [&](const char* k) -> const std::string& { return s.at(k); };

  RunConfig c;
  c.experiment = exp;

  c.params.alpha = parse_double("alpha", get("alpha"));
  c.params.eps = parse_double("eps", get("eps"));
  c.params.b = parse_vec3("b", get("b"));
  if (!(norm(c.params.b) > 0.0)) detail::bad_value("b", get("b"), "must be non-zero");
  if (const auto it = user.find("b-mag"); it != user.end()) {
    const double m = parse_double("b-mag", it->second);
    if (!(m > 0.0)) detail::bad_value("b-mag", it->second, "must be > 0");
    c.params.b = (m / norm(c.params.b)) * c.params.b;
  }
  if (!(c.params.eps > 0.0)) detail::bad_value("eps", get("eps"), "must be > 0");
  // alpha = 0 is admitted only for the alignment diagnostic.
  if (exp == Experiment::Align ? !(c.params.alpha >= 0.0) : !(c.params.alpha > 0.0))
    detail::bad_value("alpha", get("alpha"),
                      exp == Experiment::Align
                          ? "must be >= 0"
                          : "must be > 0 for this experiment");

  c.mu0_spec = get("mu0");
  c.mu0 = detail::resolve_mu0(c.mu0_spec, c.params.b);

  if (relevant.count("mode")) {
    const std::string& m = get("mode");
    if (m == "coupled") c.mode = Mode::CoupledIto;
    else if (m == "normalized") c.mode = Mode::NormalizedIto;
    else detail::bad_value("mode", m, "expected coupled or normalized");
  }

  c.grid.dt = parse_double("dt", get("dt"));
  if (!(c.grid.dt > 0.0)) detail::bad_value("dt", get("dt"), "must be > 0");
  c.grid.t0 = 0.0;
  c.grid.record_initial = true;
  c.grid.record_stride = 1;
  if (relevant.count("record-stride"))
    c.grid.record_stride = detail::positive_count("record-stride", get("record-stride"));
  if (relevant.count("t1")) {
    c.grid.t1 = parse_double("t1", get("t1"));
    if (!(c.grid.t1 > 0.0)) detail::bad_value("t1", get("t1"), "must be > 0");
  }

  c.ensemble.n_paths = detail::positive_count("n-paths", get("n-paths"));
  c.ensemble.seed = parse_u64("seed", get("seed"));
  const std::uint64_t th = parse_u64("threads", get("threads"));
  if (th > 4096) detail::bad_value("threads", get("threads"), "too many threads");
  c.ensemble.threads = static_cast<unsigned>(th);
  c.out = get("out");
  if (c.out.empty()) detail::bad_value("out", "", "must not be empty");
  if (relevant.count("single-path")) c.single_path = parse_bool("single-path", get("single-path"));

  auto in_unit = [&](const char* k, double& dst, bool open_low) {
    dst = parse_double(k, get(k));
    if (open_low ? !(dst > 0.0 && dst <= 1.0) : !(dst >= 0.0 && dst <= 1.0))
      detail::bad_value(k, get(k), "must lie in [0, 1]");
  };

  switch (exp) {
    case Experiment::Align:
      c.tail_start = s.count("tail-start") ? parse_double("tail-start", get("tail-start"))
                                           : 0.5 * c.grid.t1;
      if (!(c.tail_start >= 0.0 && c.tail_start <= c.grid.t1))
        detail::bad_value("tail-start", format_double(c.tail_start),
                          "must lie in [0, t1]");
      s["tail-start"] = format_double(c.tail_start);
      c.tail_level = parse_double("tail-level", get("tail-level"));
      in_unit("tail-fraction", c.tail_fraction, false);
      break;
    case Experiment::Rate:
      c.rate_tol = parse_double("rate-tol", get("rate-tol"));
      if (!(c.rate_tol > 0.0)) detail::bad_value("rate-tol", get("rate-tol"), "must be > 0");
      break;
    case Experiment::L2Decay:
      c.l2_ratio = parse_double("l2-ratio", get("l2-ratio"));
      if (!(c.l2_ratio > 0.0)) detail::bad_value("l2-ratio", get("l2-ratio"), "must be > 0");
      break;
    case Experiment::Tail:
      c.tail.beta = parse_double("beta", get("beta"));
      if (!(c.tail.beta >= 0.0 && c.tail.beta < 0.5))
        detail::bad_value("beta", get("beta"), "must lie in [0, 1/2)");
      c.tail.eta_thresh = parse_double("eta-thresh", get("eta-thresh"));
      in_unit("tail-max", c.tail_max, false);
      break;
    case Experiment::Strato:
      c.strato_margin = parse_double("strato-margin", get("strato-margin"));
      break;
    case Experiment::Hitting:
      c.delta = parse_double("delta", get("delta"));
      c.t_max = parse_double("t-max", get("t-max"));
      if (!(c.t_max > 0.0)) detail::bad_value("t-max", get("t-max"), "must be > 0");
      c.survival_stride = detail::positive_count("survival-stride", get("survival-stride"));
      in_unit("max-censored", c.max_censored, false);
      c.grid.t1 = c.t_max;
      break;
    case Experiment::Hysteresis: {
      c.eta = parse_double("eta", get("eta"));
      if (!(c.eta > 0.0)) detail::bad_value("eta", get("eta"), "must be > 0");
      const std::string& d = get("direction");
      if (d == "forward") c.direction = Direction::Forward;
      else if (d == "backward") c.direction = Direction::Backward;
      else detail::bad_value("direction", d, "expected forward or backward");
      if (std::abs(norm(c.params.b) - 1.0) > kUnitTolerance)
        detail::bad_value("b", format_vec3(c.params.b),
                          "hysteresis ramp direction must be a unit vector");
      c.grid.t1 = 1.0;
      break;
    }
  }

  // Module-level preconditions, reported as configuration errors.
  try {
    c.grid.validate();
    switch (exp) {
      case Experiment::Hitting: c.hitting_config().validate(); break;
      case Experiment::Hysteresis: {
        c.hysteresis_config().setup().validate(c.grid);
        require_unit(c.hysteresis_config().start());
        break;
      }
      default:
        c.ensemble_config().setup().validate(c.grid, exp == Experiment::Align);
        break;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }

  // Canonical form: numbers re-rendered so a replay parses identical values.
  s["alpha"] = format_double(c.params.alpha);
  s["eps"] = format_double(c.params.eps);
  s["b"] = format_vec3(c.params.b);
  s["dt"] = format_double(c.grid.dt);
  if (relevant.count("t1")) s["t1"] = format_double(c.grid.t1);
  for (auto it = s.begin(); it != s.end();)
    it = relevant.count(it->first) ? std::next(it) : s.erase(it);
  c.canonical = s;
  return c;
}

}  // namespace spinsim
