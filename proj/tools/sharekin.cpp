#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "sharekin/csv.hpp"
#include "sharekin/empirics.hpp"
#include "sharekin/engine.hpp"
#include "sharekin/error.hpp"
#include "sharekin/predictability.hpp"
#include "sharekin/special.hpp"
#include "sharekin/stationary.hpp"

#ifndef SHAREKIN_VERSION
#define SHAREKIN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sharekin;

namespace {

// ---------------------------------------------------------------------------------------------
// Settings: config file values overridden by command-line flags.

const std::set<std::string> kKnownKeys = {
    "sites",        "rho",          "particles",       "b",            "delta_t_tilde", "max_tau",
    "sample_taus",  "snapshot_taus", "replicas",       "seed",         "init_shares",   "init_year",
    "per_decade",   "mode",         "significance",    "n_mc",         "forecast_mode", "exclude",
    "exclusion_mode", "min_share",  "tolerance",       "first_year",   "from_tau",      "panel",
    "ensembles",    "flows"};

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<double> rho;
  std::optional<std::int64_t> sites;
  std::optional<double> b;
  std::optional<double> max_tau;
  std::optional<std::int64_t> replicas;
  std::optional<double> significance;
  // command-specific
  std::optional<std::string> mode;
  std::optional<std::string> panel;
  std::vector<std::string> ensembles;
  std::optional<std::string> flows;
  bool synthetic = false;
};

class Settings {
 public:
  Settings(const Flags& flags, std::vector<std::string>& inputs) {
    if (!flags.config.empty()) {
      std::ifstream in(flags.config);
      if (!in) throw config_error("cannot open config " + flags.config);
      try {
        values_ = json::parse(in);
      } catch (const json::exception& e) {
        throw config_error("config " + flags.config + ": " + e.what());
      }
      if (!values_.is_object()) throw config_error("config must be a JSON object");
      for (const auto& [key, v] : values_.items())
        if (!kKnownKeys.contains(key)) throw config_error("unknown config key '" + key + "'");
      inputs.push_back(flags.config);
    }
    if (flags.rho) values_["rho"] = *flags.rho;
    if (flags.sites) values_["sites"] = *flags.sites;
    if (flags.b) values_["b"] = *flags.b;
    if (flags.max_tau) values_["max_tau"] = *flags.max_tau;
    if (flags.replicas) values_["replicas"] = *flags.replicas;
    if (flags.significance) values_["significance"] = *flags.significance;
    if (flags.mode) values_["mode"] = *flags.mode;
    if (flags.panel) values_["panel"] = *flags.panel;
    if (!flags.ensembles.empty()) values_["ensembles"] = flags.ensembles;
    if (flags.flows) values_["flows"] = *flags.flows;
    if (flags.seed) {
      values_["seed"] = *flags.seed;
    } else if (!values_.contains("seed")) {
      if (const char* env = std::getenv("SHAREKIN_SEED")) {
        try {
          values_["seed"] = csv::parse_number<std::uint64_t>(env, "SHAREKIN_SEED");
        } catch (const Error& e) {
          throw config_error(e.what());
        }
      }
    }
  }

  bool has(const std::string& key) const { return values_.contains(key) && !values_[key].is_null(); }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) {
      values_[key] = fallback;
      return fallback;
    }
    return as<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw config_error("missing required setting '" + key + "'");
    return as<T>(key);
  }

  /// Resolved settings, including every default that was consulted.
  const json& resolved() const { return values_; }

 private:
  template <class T>
  T as(const std::string& key) const {
    try {
      return values_[key].get<T>();
    } catch (const json::exception&) {
      throw config_error("setting '" + key + "' has the wrong type");
    }
  }

  json values_ = json::object();
};

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string tau_label(double tau) {
  if (tau == std::round(tau)) return std::to_string(static_cast<long long>(std::llround(tau)));
  return csv::format(tau);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Collects outputs for one run; writes the manifest last.
class Output {
 public:
  explicit Output(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw config_error("cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw data_error("cannot write " + (dir_ / name).string());
    out << content;
    digests_[name] = hex(fnv1a(content));
  }

  template <class Fn>
  void write_with(const std::string& name, Fn&& fn) {
    std::ostringstream ss;
    fn(ss);
    write(name, ss.str());
  }

  void manifest(const std::string& command, const json& config, std::uint64_t seed,
                const std::vector<std::string>& inputs, const json& extra = json::object()) {
    json m;
    m["command"] = command;
    m["tool_version"] = SHAREKIN_VERSION;
    m["config"] = config;
    m["seed"] = seed;
    json in = json::array();
    for (const auto& path : inputs) in.push_back({{"path", path}, {"fnv1a64", hex(fnv1a(read_file(path)))}});
    m["inputs"] = in;
    json out = json::array();
    for (const auto& [name, digest] : digests_) out.push_back({{"path", name}, {"fnv1a64", digest}});
    m["outputs"] = out;
    for (const auto& [k, v] : extra.items()) m[k] = v;
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    f << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::map<std::string, std::string> digests_;
};

std::int64_t resolve_particles(Settings& s, std::int64_t n) {
  if (s.has("particles")) return s.require<std::int64_t>("particles");
  const double rho = s.require<double>("rho");
  if (!(rho >= 1.0)) throw config_error("rho must be at least 1");
  return std::llround(rho * static_cast<double>(n));
}

ShareVector first_year_shares(const std::string& path, std::optional<int> year) {
  const auto panel = read_panel_csv(path);
  std::size_t t = 0;
  if (year) {
    const auto it = std::find(panel.years.begin(), panel.years.end(), *year);
    if (it == panel.years.end()) throw data_error("year " + std::to_string(*year) + " not in " + path);
    t = static_cast<std::size_t>(it - panel.years.begin());
  }
  return panel.column(t);
}

SimConfig sim_config(Settings& s, std::vector<std::string>& inputs) {
  SimConfig cfg;
  std::optional<ShareVector> init;
  if (s.has("init_shares")) {
    const auto path = s.require<std::string>("init_shares");
    init = first_year_shares(path, s.has("init_year") ? std::optional<int>(s.require<int>("init_year")) : std::nullopt);
    inputs.push_back(path);
  }
  const std::int64_t n = init ? static_cast<std::int64_t>(init->shares.size()) : s.require<std::int64_t>("sites");
  if (init && s.has("sites") && s.require<std::int64_t>("sites") != n)
    throw config_error("sites does not match the init share file");
  try {
    cfg.params = ModelParams(n, resolve_particles(s, n), s.get<double>("b", 2.0));
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  cfg.init_shares = init;
  cfg.delta_t_tilde = s.get<double>("delta_t_tilde", kDefaultDeltaTTilde);
  cfg.max_tau = s.require<double>("max_tau");
  cfg.sample_taus = s.has("sample_taus") ? s.require<std::vector<double>>("sample_taus")
                                          : SimConfig::integer_taus(cfg.max_tau);
  cfg.snapshot_taus = s.get<std::vector<double>>("snapshot_taus", {});
  cfg.replicas = s.get<std::int64_t>("replicas", 1);
  cfg.base_seed = s.get<std::uint64_t>("seed", 1);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  return cfg;
}

// ---------------------------------------------------------------------------------------------
// Commands

int cmd_simulate(const Flags& flags) {
  std::vector<std::string> inputs;
  Settings s(flags, inputs);
  const SimConfig cfg = sim_config(s, inputs);
  const int per_decade = s.get<int>("per_decade", 10);
  const auto ensemble = run_ensemble(cfg);

  Output out(flags.out);
  for (const auto& traj : ensemble.replicas) {
    out.write_with("trajectory_" + std::to_string(traj.replica) + ".csv", [&](std::ostream& os) {
      os << "tau,replica,second_moment\n";
      for (const auto& smp : traj.samples)
        os << csv::format(smp.tau) << ',' << traj.replica << ',' << csv::format(smp.second_moment) << '\n';
    });
    if (!cfg.snapshot_taus.empty())
      out.write_with("snapshots_" + std::to_string(traj.replica) + ".csv", [&](std::ostream& os) {
        os << "tau,site,count\n";
        for (const auto& smp : traj.samples)
          if (smp.counts)
            for (std::size_t p = 0; p < smp.counts->size(); ++p)
              os << csv::format(smp.tau) << ',' << p << ',' << (*smp.counts)[p] << '\n';
      });
  }
  out.write_with("ensemble.csv", [&](std::ostream& os) {
    os << "tau,mean,lo,hi\n";
    for (const auto& b : ensemble.aggregate)
      os << csv::format(b.tau) << ',' << csv::format(b.mean) << ',' << csv::format(b.lo) << ',' << csv::format(b.hi)
         << '\n';
  });
  LogBins bins;
  bins.per_decade = per_decade;
  for (double tau : cfg.snapshot_taus)
    out.write_with("histogram_tau" + tau_label(tau) + ".csv", [&](std::ostream& os) {
      os << "bin_lo,bin_hi,density\n";
      for (const auto& h : share_histogram(ensemble, tau, bins))
        os << csv::format(h.lo) << ',' << csv::format(h.hi) << ',' << csv::format(h.density) << '\n';
    });
  std::uint64_t proposals = 0, accepted = 0;
  for (const auto& t : ensemble.replicas) {
    proposals += t.proposals;
    accepted += t.accepted;
  }
  out.manifest("simulate", s.resolved(), cfg.base_seed, inputs, {{"proposals", proposals}, {"accepted", accepted}});
  return 0;
}

void write_profile(Output& out, const std::string& mode, const StationaryProfile& profile) {
  out.write_with("profile_" + mode + ".csv", [&](std::ostream& os) {
    os << "m,p\n";
    for (std::size_t k = 0; k < profile.p.size(); ++k) os << k + 1 << ',' << csv::format(profile.p[k]) << '\n';
  });
}

void write_collapse(Output& out, const std::string& name, const std::vector<std::vector<CollapsePoint>>& curves) {
  out.write_with(name, [&](std::ostream& os) {
    os << "x,y\n";
    for (const auto& curve : curves)
      for (const auto& pt : curve) os << csv::format(pt.x) << ',' << csv::format(pt.y) << '\n';
  });
}

int cmd_stationary(const Flags& flags) {
  std::vector<std::string> inputs;
  Settings s(flags, inputs);
  const double b = s.get<double>("b", 2.0);
  const std::optional<std::int64_t> n =
      s.has("sites") ? std::optional<std::int64_t>(s.require<std::int64_t>("sites")) : std::nullopt;
  double rho = 0.0;
  std::optional<std::int64_t> m;
  if (n) {
    m = resolve_particles(s, *n);
    rho = static_cast<double>(*m) / static_cast<double>(*n);
    if (*m < *n || *n < 2) throw config_error("need sites >= 2 and particles >= sites");
  } else {
    rho = s.require<double>("rho");
  }
  if (!(b >= 0.0)) throw config_error("b must be non-negative");
  const std::string mode = s.get<std::string>("mode", "all");
  if (mode != "all" && mode != "dp" && mode != "ctmc" && mode != "asymptotic")
    throw config_error("mode must be one of all, dp, ctmc, asymptotic");

  Output out(flags.out);
  json extra = json::object();
  if (n) {
    const bool all = mode == "all";
    std::optional<StationaryProfile> dp;
    if (all || mode == "dp") {
      dp = exact_site_distribution(*n, *m, b);
      write_profile(out, "dp", *dp);
    }
    if (mode == "ctmc" || (all && composition_count(*n, *m) <= kCtmcStateLimit))
      write_profile(out, "ctmc", exact_ctmc_stationary(*n, *m, b));
    if (b == 2.0 && (all || mode == "asymptotic")) {
      const auto asym = asymptotic_site_distribution(*n, rho);
      write_profile(out, "asymptotic", asym.profile);
      extra["asymptotic"] = {{"regime", to_string(asym.regime)},
                             {"normalization", asym.normalization},
                             {"renormalized", true},
                             {"bump_center", asym.bump_center},
                             {"phi_crossover", kPhiCrossover},
                             {"phi_envelope_cutoff", kPhiEnvelopeCutoff},
                             {"phi_quadrature_tolerance", kPhiQuadratureTolerance}};
      if (dp) {
        const auto curves = scaling_collapse({*dp}, rho);
        write_collapse(out, "collapse_fluid.csv", curves.fluid);
        write_collapse(out, "collapse_condensate.csv", curves.condensate);
      }
    } else if (mode == "asymptotic") {
      throw config_error("asymptotic profiles are available for b = 2 only");
    }
  }
  PhasePoint point{b, rho, n};
  double rho_c = std::numeric_limits<double>::infinity();
  if (b > 2.0 || (b == 2.0 && n)) rho_c = critical_density(b, b == 2.0 ? n : std::nullopt);
  json phase;
  phase["b"] = b;
  phase["rho"] = rho;
  phase["N"] = n ? json(*n) : json(nullptr);
  phase["rho_c"] = finite_or_null(rho_c);
  phase["phase"] = to_string(classify_phase(point));
  out.write("phase.json", phase.dump(2) + "\n");
  out.manifest("stationary", s.resolved(), 0, inputs, extra);
  return 0;
}

DensityCurve read_ensemble_dir(const std::string& dir, std::vector<std::string>& inputs) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  const fs::path ensemble_path = fs::path(dir) / "ensemble.csv";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw data_error(manifest_path.string() + ": " + e.what());
  }
  DensityCurve curve;
  const auto& config = manifest.at("config");
  const double n = config.at("sites").get<double>();
  curve.rho = config.contains("particles") ? config.at("particles").get<double>() / n : config.at("rho").get<double>();
  std::istringstream in(read_file(ensemble_path));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(csv::trim(line));
    if (f.size() < 2) throw data_error("malformed row in " + ensemble_path.string());
    curve.taus.push_back(csv::parse_number<double>(f[0], "tau"));
    curve.second_moment.push_back(csv::parse_number<double>(f[1], "mean"));
  }
  inputs.push_back(manifest_path.string());
  inputs.push_back(ensemble_path.string());
  return curve;
}

ExclusionMode parse_exclusion(const std::string& v) {
  if (v == "pure-subtraction") return ExclusionMode::PureSubtraction;
  if (v == "renormalized") return ExclusionMode::Renormalized;
  throw config_error("exclusion_mode must be pure-subtraction or renormalized");
}

int cmd_calibrate(const Flags& flags) {
  std::vector<std::string> inputs;
  Settings s(flags, inputs);
  const auto panel_path = s.require<std::string>("panel");
  inputs.push_back(panel_path);
  const auto panel = read_panel_csv(panel_path);
  panel.validate();

  ScalingOptions opts;
  opts.min_share = s.get<double>("min_share", opts.min_share);
  opts.per_decade = s.get<int>("per_decade", opts.per_decade);
  const auto fit = fit_fluctuation_scaling(panel, opts);
  const auto exclude = s.get<std::vector<std::string>>("exclude", {});
  const auto series = second_moment_series(panel, {exclude.begin(), exclude.end()},
                                           parse_exclusion(s.get<std::string>("exclusion_mode", "pure-subtraction")));
  std::vector<DensityCurve> curves;
  for (const auto& dir : s.get<std::vector<std::string>>("ensembles", {})) curves.push_back(read_ensemble_dir(dir, inputs));
  const auto candidates = fit_density(series, curves, s.get<double>("tolerance", 10.0));

  json j;
  j["c"] = fit.c;
  j["alpha"] = fit.alpha;
  j["delta_t_tilde"] = delta_t_from_c(fit.c);
  j["gains"] = {{"c", finite_or_null(fit.gains.c)}, {"alpha", finite_or_null(fit.gains.alpha)}};
  j["losses"] = {{"c", finite_or_null(fit.losses.c)}, {"alpha", finite_or_null(fit.losses.alpha)}};
  j["fit_range"] = {fit.fit_lo, fit.fit_hi};
  json sm = json::object();
  for (const auto& [year, v] : series) sm[std::to_string(year)] = v;
  j["second_moment"] = sm;
  json cands = json::array();
  for (const auto& c : candidates) {
    json row;
    row["rho"] = c.rho;
    row["feasible"] = c.feasible;
    row["tau_i"] = c.feasible ? json(c.tau_i) : json(nullptr);
    row["tau_f"] = c.feasible ? json(c.tau_f) : json(nullptr);
    row["width"] = c.feasible ? json(c.width()) : json(nullptr);
    row["matches_panel"] = c.matches_panel;
    cands.push_back(row);
  }
  j["rho_candidates"] = cands;

  Output out(flags.out);
  out.write("calibration.json", j.dump(2) + "\n");
  out.manifest("calibrate", s.resolved(), 0, inputs);
  return 0;
}

int cmd_ingest(const Flags& flags) {
  std::vector<std::string> inputs;
  Settings s(flags, inputs);
  json extra = json::object();
  SharePanel panel;
  std::uint64_t seed = 0;
  if (flags.synthetic) {
    SimConfig cfg = sim_config(s, inputs);
    seed = cfg.base_seed;
    const int first_year = s.get<int>("first_year", 0);
    const double from_tau = s.get<double>("from_tau", 0.0);
    if (from_tau < 0.0 || from_tau >= cfg.max_tau) throw config_error("from_tau must lie in [0, max_tau)");
    const int offset = static_cast<int>(std::llround(from_tau));
    panel = synthetic_panel(cfg, 0, first_year - offset).slice(first_year, first_year + static_cast<int>(cfg.max_tau) - offset);
  } else {
    const auto path = s.require<std::string>("flows");
    inputs.push_back(path);
    auto filtered = filter_consistent_panel(compute_shares(read_trade_flows(path)));
    panel = std::move(filtered.panel);
    extra["dropped"] = filtered.dropped;
  }
  panel.validate();
  Output out(flags.out);
  out.write_with("panel.csv", [&](std::ostream& os) { write_panel_csv(os, panel); });
  extra["years"] = {panel.years.front(), panel.years.back()};
  extra["products"] = panel.n_products();
  out.manifest("ingest", s.resolved(), seed, inputs, extra);
  return 0;
}

ForecastMode parse_forecast_mode(const std::string& v) {
  if (v == "free-running") return ForecastMode::FreeRunning;
  if (v == "reanchored") return ForecastMode::Reanchored;
  throw config_error("forecast_mode must be free-running or reanchored");
}

int cmd_predict(const Flags& flags) {
  std::vector<std::string> inputs;
  Settings s(flags, inputs);
  const auto panel_path = s.require<std::string>("panel");
  inputs.push_back(panel_path);
  const auto panel = read_panel_csv(panel_path);
  panel.validate();
  if (panel.n_years() < 2) throw data_error("predict needs at least two panel years");
  if (panel.n_years() == 2) std::cerr << "warning: T = 1, the unpredictability test has very low power\n";

  ForecastOptions fo;
  fo.rho = s.get<double>("rho", kDefaultForecastDensity);
  fo.runs = s.get<std::int64_t>("replicas", kDefaultForecastRuns);
  fo.exponent = s.get<double>("b", 2.0);
  fo.delta_t_tilde = s.get<double>("delta_t_tilde", kDefaultDeltaTTilde);
  fo.mode = parse_forecast_mode(s.get<std::string>("forecast_mode", "free-running"));
  fo.seed = s.get<std::uint64_t>("seed", 1);
  if (s.has("max_tau") && std::abs(s.require<double>("max_tau") - static_cast<double>(panel.n_years() - 1)) > 1e-9)
    throw invalid_argument("max_tau does not match the panel horizon of " + std::to_string(panel.n_years() - 1));
  ReportOptions ro;
  ro.significance = s.get<double>("significance", 0.05);
  ro.n_mc = s.get<std::int64_t>("n_mc", kDefaultCriticalSamples);
  ro.seed = fo.seed;
  if (!(ro.significance > 0.0 && ro.significance < 1.0)) throw config_error("significance must lie in (0, 1)");

  const auto report = build_report(panel, forecast_growth(panel, fo), ro);
  Output out(flags.out);
  out.write_with("report.csv", [&](std::ostream& os) { write_report_csv(os, report); });
  out.write_with("rollup.csv", [&](std::ostream& os) { write_rollup_csv(os, report); });
  out.write_with("threshold.json", [&](std::ostream& os) { write_threshold_json(os, report.threshold); });
  out.manifest("predict", s.resolved(), fo.seed, inputs,
               {{"unpredictable_fraction", report.unpredictable_fraction()}, {"n_sims", report.n_sims}});
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Capacity:
      return 4;
    case ErrorKind::Data:
    case ErrorKind::NotRecorded:
    case ErrorKind::Fit:
      return 3;
    default:
      return 2;
  }
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file; flags override its keys");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Base seed (falls back to config, then SHAREKIN_SEED, then 1)");
  cmd->add_option("--threads", f.threads, "Cap on OpenMP worker threads");
  cmd->add_option("--rho", f.rho, "Particle density M/N");
  cmd->add_option("--sites", f.sites, "Number of sites N (products)");
  cmd->add_option("--b", f.b, "Hop exponent b (default 2, the biquadratic rate)");
  cmd->add_option("--max-tau", f.max_tau, "Last sample time in years");
  cmd->add_option("--replicas", f.replicas, "Independent runs (default 1; predict: N_s = 1000)");
  cmd->add_option("--significance", f.significance, "Significance level of the unpredictability test (default 0.05)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic share-transfer model of product shares: simulation, stationary analytics, "
               "calibration and predictability scoring."};
  app.set_version_flag("--version", SHAREKIN_VERSION);
  app.require_subcommand(1);
  Flags f;

  auto* simulate = app.add_subcommand("simulate", "Run replica ensembles (default dt per year 0.007854 = pi 0.1^2 / 4)");
  add_common(simulate, f);

  auto* stationary = app.add_subcommand("stationary", "Stationary single-site profiles and phase classification");
  add_common(stationary, f);
  stationary->add_option("--mode", f.mode, "all, dp, ctmc or asymptotic (default all)");

  auto* calibrate = app.add_subcommand("calibrate", "Fit |dA| = c A^alpha, dt per year and candidate densities");
  add_common(calibrate, f);
  calibrate->add_option("--panel", f.panel, "Share panel CSV (year,product,share)");
  calibrate->add_option("--ensemble", f.ensembles, "Output directory of a simulate run (repeatable)");

  auto* ingest = app.add_subcommand("ingest", "Build a share panel from trade flows or from a model run");
  add_common(ingest, f);
  ingest->add_option("--flows", f.flows, "Trade-flow CSV (year,exporter,importer,sitc4,value)");
  ingest->add_flag("--synthetic", f.synthetic, "Generate the panel from one model replica instead");

  auto* predict = app.add_subcommand("predict", "Score products against ensemble forecasts (default rho 400)");
  add_common(predict, f);
  predict->add_option("--panel", f.panel, "Share panel CSV (year,product,share)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (f.threads) {
    if (*f.threads < 1) {
      std::cerr << "error: --threads must be positive\n";
      return 2;
    }
    omp_set_num_threads(*f.threads);
  }

  try {
    if (simulate->parsed()) return cmd_simulate(f);
    if (stationary->parsed()) return cmd_stationary(f);
    if (calibrate->parsed()) return cmd_calibrate(f);
    if (ingest->parsed()) return cmd_ingest(f);
    if (predict->parsed()) return cmd_predict(f);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
