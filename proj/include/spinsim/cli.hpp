// Command-line front-end: runs resolved configs, writes CSV files and a JSON
// manifest, evaluates --assert checks and maps outcomes to exit codes.
//
// Requires CLI11, nlohmann/json and OpenSSL (libcrypto) in addition to the
// simulation headers.
#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "spinsim/config.hpp"
#include "spinsim/experiments.hpp"
#include "spinsim/rng.hpp"

namespace spinsim {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitPartial = 3,
  kExitAssert = 4,
  kExitIo = 5,
};

/// File-system failure; the tool exits with code 5.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i)
    os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Writes `content` to a temporary sibling and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path,
                         std::string_view content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory '" + path.parent_path().string() +
                    "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move data file into place at '" + path.string() + "'");
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// CSV rendering

/// t,observable,mean,stderr,n[,bound]; one row per (time, column).
inline std::string ensemble_csv(const EnsembleSeries& s,
                                const std::vector<double>* bound = nullptr) {
  std::string out = bound ? "t,observable,mean,stderr,n,bound\n"
                          : "t,observable,mean,stderr,n\n";
  for (std::size_t i = 0; i < s.t.size(); ++i)
    for (const auto& c : s.columns) {
      const Estimate& e = c.values[i];
      out += format_double(s.t[i]);
      out += ',';
      out += c.name;
      out += ',';
      out += format_double(e.mean);
      out += ',';
      out += format_double(e.std_error());
      out += ',';
      out += std::to_string(e.n);
      if (bound) {
        out += ',';
        out += format_double((*bound)[i]);
      }
      out += '\n';
    }
  return out;
}

/// t,value for a single path.
inline std::string path_csv(const RecordedSeries& r) {
  std::string out = "t,value\n";
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    out += format_double(r.t[i]);
    out += ',';
    out += format_double(r.columns.at(0)[i]);
    out += '\n';
  }
  return out;
}

/// Survival curve of a hitting-time run in the ensemble schema, with the
/// binomial standard error.
inline std::string survival_csv(const HittingResult& r) {
  std::string out = "t,observable,mean,stderr,n\n";
  const std::size_t n = r.samples.size();
  for (std::size_t i = 0; i < r.survival_t.size(); ++i) {
    const double p = r.survival[i];
    const double se =
        n > 1 ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
    out += format_double(r.survival_t[i]) + ",survival," + format_double(p) +
           "," + format_double(se) + "," + std::to_string(n) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running one config

struct Check {
  std::string name;
  bool ok = true;
  std::string detail;
};

struct OutputFile {
  std::string role;  // "ensemble" or "path"
  std::string path;
  std::string sha256;
};

struct RunOutcome {
  std::string tag;
  RunConfig config;
  std::vector<OutputFile> files;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  std::vector<Check> checks;
  std::size_t failed_paths = 0;

  bool partial() const { return failed_paths > 0; }
  bool checks_ok() const {
    for (const auto& c : checks)
      if (!c.ok) return false;
    return true;
  }
};

inline std::string output_stem(const RunConfig& c, const std::string& tag) {
  return tag.empty() ? c.out : c.out + "-" + tag;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

inline void add_failures(nlohmann::ordered_json& summary,
                         const std::vector<PathError>& failures) {
  summary["failed_paths"] = failures.size();
  if (failures.empty()) return;
  auto& arr = summary["failures"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < failures.size() && i < 10; ++i)
    arr.push_back({{"path", failures[i].path},
                   {"t", failures[i].t},
                   {"message", failures[i].message}});
}

}  // namespace detail

/// Runs `c`, writes its data files and evaluates its acceptance checks.
inline RunOutcome execute(const RunConfig& c, const std::string& tag,
                          std::ostream& log = std::cerr) {
  RunOutcome o;
  o.tag = tag;
  o.config = c;
  const std::string stem = output_stem(c, tag);
  std::vector<std::pair<OutputFile, std::string>> pending;
  auto emit = [&](const std::string& role, const std::string& path,
                  std::string content) {
    pending.push_back({{role, path, sha256_hex(content)}, std::move(content)});
  };
  auto& sum = o.summary;

  switch (c.experiment) {
    case Experiment::Align: {
      const auto r = estimate_alignment(c.ensemble_config(), c.tail_start);
      emit("ensemble", stem + ".csv", ensemble_csv(r.series));
      const Estimate& last = r.series.last("mu_dot_b");
      const double frac = r.fraction_tail_at_least(c.tail_level);
      sum["final_mean_mu_dot_b"] = last.mean;
      sum["final_stderr"] = last.std_error();
      sum["tail_start"] = r.tail_start;
      sum["fraction_tail_min_at_least_level"] = frac;
      detail::add_failures(sum, r.series.failures);
      o.failed_paths = r.series.failures.size();
      o.checks.push_back({"tail minimum", frac >= c.tail_fraction,
                          detail::fmt(frac) + " of paths keep mu.b >= " +
                              detail::fmt(c.tail_level) + " on [" +
                              detail::fmt(r.tail_start) + ", T] (need " +
                              detail::fmt(c.tail_fraction) + ")"});
      break;
    }
    case Experiment::Rate:
    case Experiment::L2Decay:
    case Experiment::Tail: {
      LongTimeColumns cols{c.experiment == Experiment::Rate,
                           c.experiment == Experiment::L2Decay, std::nullopt};
      if (c.experiment == Experiment::Tail) cols.tail = c.tail;
      const auto r = long_time_study(c.ensemble_config(), cols, log);
      emit("ensemble", stem + ".csv", ensemble_csv(r.series));
      const double T = c.grid.t1;
      detail::add_failures(sum, r.series.failures);
      o.failed_paths = r.series.failures.size();
      if (c.experiment == Experiment::Rate) {
        const Estimate& hg = r.series.last("h_gap");
        const Estimate& ns = r.series.last("rate_normalized");
        sum["limit"] = r.limit;
        sum["final_h_gap"] = hg.mean;
        sum["final_h_gap_stderr"] = hg.std_error();
        sum["final_rate_normalized"] = ns.mean;
        sum["final_rate_normalized_stderr"] = ns.std_error();
        sum["normalization_ratio_at_T"] = rate_normalization_ratio(c.params, T);
        const double dev = std::abs(hg.mean - r.limit);
        const double tol = c.rate_tol * r.limit + 3.0 * hg.std_error();
        o.checks.push_back({"rate limit", dev <= tol,
                            "E[h(T) gap] = " + detail::fmt(hg.mean) +
                                ", limit " + detail::fmt(r.limit) +
                                ", allowed deviation " + detail::fmt(tol)});
      } else if (c.experiment == Experiment::L2Decay) {
        const Estimate& end = r.series.last("h_gap_sq");
        const Estimate& early = r.series.at("h_gap_sq", T / 100.0);
        const double t_early = r.series.t[r.series.index_near(T / 100.0)];
        sum["final_h_gap_sq"] = end.mean;
        sum["final_h_gap_sq_stderr"] = end.std_error();
        sum["t_early"] = t_early;
        sum["h_gap_sq_at_t_early"] = early.mean;
        sum["ratio"] = end.mean / early.mean;
        o.checks.push_back({"l2 decay", end.mean <= c.l2_ratio * early.mean,
                            "value at T / value at t=" + detail::fmt(t_early) +
                                " = " + detail::fmt(end.mean / early.mean) +
                                " (need <= " + detail::fmt(c.l2_ratio) + ")"});
      } else {
        const Estimate& e = r.series.last("tail_exceed");
        const Interval w = wilson_interval(e.mean, e.n);
        sum["final_frequency"] = e.mean;
        sum["final_frequency_stderr"] = e.std_error();
        sum["wilson_low"] = w.lo;
        sum["wilson_high"] = w.hi;
        o.checks.push_back({"tail probability", e.mean <= c.tail_max,
                            "frequency at T = " + detail::fmt(e.mean) +
                                " (need <= " + detail::fmt(c.tail_max) + ")"});
      }
      break;
    }
    case Experiment::Strato: {
      const auto r = strato_equilibrium(c.ensemble_config());
      emit("ensemble", stem + ".csv", ensemble_csv(r.series));
      const Estimate& m = r.series.last("mu_dot_b");
      const Estimate& res = r.series.last("residual");
      const double nb = norm(c.params.b);
      sum["fixed_point"] = r.fixed_point;
      sum["final_mean_mu_dot_b"] = m.mean;
      sum["final_stderr"] = m.std_error();
      sum["final_residual"] = res.mean;
      sum["final_residual_stderr"] = res.std_error();
      if (r.initial_slope) sum["initial_slope"] = *r.initial_slope;
      else sum["initial_slope"] = nullptr;
      sum["initial_slope_reference"] = -c.params.noise_rate() * nb;
      detail::add_failures(sum, r.series.failures);
      o.failed_paths = r.series.failures.size();
      o.checks.push_back({"below the pole", m.mean < nb - c.strato_margin,
                          "mean at T = " + detail::fmt(m.mean)});
      o.checks.push_back({"stationarity residual",
                          std::abs(res.mean) <= 3.0 * res.std_error(),
                          "residual at T = " + detail::fmt(res.mean) + " +- " +
                              detail::fmt(res.std_error())});
      break;
    }
    case Experiment::Hitting: {
      const auto r = hitting_time(c.hitting_config());
      emit("ensemble", stem + ".csv", survival_csv(r));
      const bool grows = survival_grows_monotonically(r, c.t_max / 10.0);
      sum["l_threshold"] = r.l_threshold;
      sum["censored_fraction"] = r.censored_fraction;
      sum["mean_tau_lower_bound"] = r.mean_lower_bound;
      sum["horizon_too_short"] = r.horizon_too_short;
      sum["t_survival_monotone_growth"] = grows;
      detail::add_failures(sum, r.failures);
      o.failed_paths = r.failures.size();
      if (r.horizon_too_short)
        log << "spinsim: warning: more than half of the hitting times are "
               "censored; t-max is too small\n";
      o.checks.push_back({"censoring", r.censored_fraction < c.max_censored,
                          "censored fraction " + detail::fmt(r.censored_fraction)});
      o.checks.push_back({"t P(tau > t) bounded", !grows,
                          grows ? "grows over the last decade" : "no monotone growth"});
      break;
    }
    case Experiment::Hysteresis: {
      const HysteresisConfig hc = c.hysteresis_config();
      const auto r = hysteresis_sweep(hc);
      emit("ensemble", stem + ".csv", ensemble_csv(r.series, &r.bound));
      if (c.single_path)
        emit("path", stem + ".path.csv", path_csv(hysteresis_single_path(hc)));
      const double sign = c.direction == Direction::Forward ? 1.0 : -1.0;
      const auto& v = r.series.column("lambda_dot_bhat").values;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < v.size(); ++i)
        if (r.series.t[i] <= 0.5)
          worst = std::min(worst, sign * v[i].mean - r.bound[i] +
                                      3.0 * v[i].std_error());
      sum["direction"] = std::string(to_string(c.direction));
      sum["min_margin_over_bound"] = worst;
      if (r.crossing_time) sum["crossing_time"] = *r.crossing_time;
      else sum["crossing_time"] = nullptr;
      detail::add_failures(sum, r.series.failures);
      o.failed_paths = r.series.failures.size();
      o.checks.push_back({"bound for t <= 1/2", worst >= 0.0,
                          "min over t <= 1/2 of mean - bound + 3 stderr = " +
                              detail::fmt(worst)});
      break;
    }
  }

  if (c.single_path && c.experiment != Experiment::Hysteresis &&
      c.experiment != Experiment::Hitting)
    emit("path", stem + ".path.csv", path_csv(single_path(c.ensemble_config())));

  for (auto& [f, content] : pending) {
    write_atomic(f.path, content);
    o.files.push_back(f);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Manifests

inline nlohmann::ordered_json settings_json(const Settings& s) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s) j[k] = v;
  return j;
}

inline nlohmann::ordered_json manifest_json(const std::vector<RunOutcome>& runs,
                                            double seconds, int exit_code,
                                            const std::string& preset) {
  nlohmann::ordered_json m;
  m["tool"] = "spinsim";
  m["version"] = std::string(kToolVersion);
  m["rng"] = std::string(kRngAlgorithm);
  if (!preset.empty()) m["preset"] = preset;
  m["duration_seconds"] = seconds;
  m["exit_code"] = exit_code;
  auto& arr = m["runs"] = nlohmann::ordered_json::array();
  for (const auto& r : runs) {
    nlohmann::ordered_json j;
    j["tag"] = r.tag;
    j["experiment"] = std::string(to_string(r.config.experiment));
    j["config"] = settings_json(r.config.canonical);
    j["status"] = r.partial() ? "partial" : "ok";
    auto& files = j["files"] = nlohmann::ordered_json::array();
    for (const auto& f : r.files)
      files.push_back({{"role", f.role}, {"path", f.path}, {"sha256", f.sha256}});
    j["summary"] = r.summary;
    auto& checks = j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : r.checks)
      checks.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    arr.push_back(std::move(j));
  }
  return m;
}

/// Runs listed in a manifest, as (tag, settings) pairs.
inline std::vector<PresetRun> manifest_runs(const std::string& path) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("manifest '" + path + "' is not valid JSON: " + e.what());
  }
  if (!m.contains("runs") || !m["runs"].is_array() || m["runs"].empty())
    throw ConfigError("manifest '" + path + "' lists no runs");
  if (m.value("rng", "") != kRngAlgorithm)
    throw ConfigError("manifest '" + path + "' was produced with RNG '" +
                      m.value("rng", "") + "', this build uses '" +
                      std::string(kRngAlgorithm) + "'");
  std::vector<PresetRun> out;
  for (const auto& r : m["runs"]) {
    PresetRun pr;
    pr.tag = r.value("tag", "");
    if (!r.contains("config") || !r["config"].is_object())
      throw ConfigError("manifest run without a config object");
    for (const auto& [k, v] : r["config"].items()) {
      if (!v.is_string()) throw ConfigError("manifest value for '" + k + "' is not a string");
      pr.settings[k] = v.get<std::string>();
    }
    require_known(pr.settings, path);
    out.push_back(std::move(pr));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Entry point

/// Parses arguments and runs. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr,
                   const Settings& env = environment_settings()) {
  CLI::App app{"Monte Carlo simulator for a single magnetic moment driven by a "
               "stochastic Landau-Lifshitz equation",
               "spinsim"};
  app.set_version_flag("--version", std::string(kToolVersion));

  std::map<std::string, std::optional<std::string>> flags;
  for (const auto& k : known_keys())
    app.add_option("--" + std::string(k.key), flags[std::string(k.key)],
                   std::string(k.help));
  std::string config_file, preset_name, manifest_file;
  bool assert_checks = false, list_presets = false;
  app.add_option("--config", config_file, "flat key = value config file");
  app.add_option("--preset", preset_name, "figure1 | figure2 | figure3 | figure4 | figure5");
  app.add_option("--from-manifest", manifest_file,
                 "re-run every run recorded in a manifest");
  app.add_flag("--assert", assert_checks,
               "exit 4 when a run violates its acceptance threshold");
  app.add_flag("--list-presets", list_presets, "print the preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitConfig;
  }
  if (list_presets) {
    for (auto n : preset_names()) out << n << "\n";
    return kExitOk;
  }

  Settings cli;
  for (const auto& [k, v] : flags)
    if (v) cli[k] = *v;

  const auto start = std::chrono::steady_clock::now();
  std::vector<RunOutcome> outcomes;
  std::string manifest_path;
  try {
    require_known(env, "environment");
    std::vector<PresetRun> runs;
    if (!manifest_file.empty()) {
      if (!preset_name.empty() || !config_file.empty())
        throw ConfigError("--from-manifest cannot be combined with --preset or --config");
      for (const auto& [k, v] : cli)
        if (k != "threads" && k != "out")
          throw ConfigError("--from-manifest only accepts --threads and --out overrides");
      runs = manifest_runs(manifest_file);
      // Thread count never changes the data; it may follow this machine.
      Settings over;
      if (env.count("threads")) over["threads"] = env.at("threads");
      for (const auto& [k, v] : cli) over[k] = v;
      for (auto& r : runs) r.settings = merge({&r.settings, &over});
    } else {
      runs = preset_name.empty() ? std::vector<PresetRun>{{"", {}}}
                                 : preset(preset_name);
      const Settings file = config_file.empty() ? Settings{} : load_config_file(config_file);
      for (auto& r : runs) r.settings = merge({&r.settings, &file, &env, &cli});
    }

    std::vector<RunConfig> configs;
    for (const auto& r : runs) configs.push_back(resolve(r.settings, err));
    manifest_path = configs.front().out + ".manifest.json";

    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto& c = configs[i];
      err << "spinsim: running " << to_string(c.experiment)
          << (runs[i].tag.empty() ? "" : " [" + runs[i].tag + "]") << " with "
          << c.ensemble.n_paths << " paths\n";
      outcomes.push_back(execute(c, runs[i].tag, err));
      for (const auto& ch : outcomes.back().checks)
        err << "spinsim:   " << (ch.ok ? "ok    " : "FAILED") << " " << ch.name
            << ": " << ch.detail << "\n";
    }
  } catch (const ConfigError& e) {
    err << "spinsim: error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "spinsim: I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    err << "spinsim: error: " << e.what() << "\n";
    return kExitConfig;
  }

  int code = kExitOk;
  for (const auto& o : outcomes)
    if (o.partial()) code = kExitPartial;
  if (assert_checks)
    for (const auto& o : outcomes)
      if (!o.checks_ok()) code = kExitAssert;

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    write_atomic(manifest_path,
                 manifest_json(outcomes, seconds, code, preset_name).dump(2) + "\n");
  } catch (const IoError& e) {
    err << "spinsim: I/O error: " << e.what() << "\n";
    return kExitIo;
  }
  for (const auto& o : outcomes)
    for (const auto& f : o.files) out << f.path << "  " << f.sha256 << "\n";
  out << manifest_path << "\n";
  return code;
}

}  // namespace spinsim
