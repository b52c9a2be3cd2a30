#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "srkrp/analysis.hpp"
#include "srkrp/codec.hpp"
#include "srkrp/error.hpp"
#include "srkrp/format.hpp"
#include "srkrp/matrix.hpp"
#include "srkrp/rng.hpp"
#include "srkrp/runtime.hpp"
#include "srkrp/solve.hpp"
#include "srkrp/weights.hpp"

namespace srkrp::cli {

// fig1..fig7 are canned campaign sweeps at desk-scale trial budgets; custom
// is a single campaign point built from overrides; matmul runs one coded
// multiplication on matrices read from disk.
enum class Experiment { fig1, fig2_3, fig4, fig5, fig6, fig7, custom, matmul };

inline Experiment parse_experiment(const std::string& name) {
  if (name == "fig1") return Experiment::fig1;
  if (name == "fig2_3" || name == "fig2" || name == "fig3") return Experiment::fig2_3;
  if (name == "fig4") return Experiment::fig4;
  if (name == "fig5") return Experiment::fig5;
  if (name == "fig6") return Experiment::fig6;
  if (name == "fig7") return Experiment::fig7;
  if (name == "custom") return Experiment::custom;
  if (name == "matmul") return Experiment::matmul;
  throw ConfigError("unknown experiment '" + name +
                    "' (expected fig1, fig2_3, fig4, fig5, fig6, fig7, custom or matmul)");
}

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::fig1: return "fig1";
    case Experiment::fig2_3: return "fig2_3";
    case Experiment::fig4: return "fig4";
    case Experiment::fig5: return "fig5";
    case Experiment::fig6: return "fig6";
    case Experiment::fig7: return "fig7";
    case Experiment::custom: return "custom";
    case Experiment::matmul: return "matmul";
  }
  return "?";
}

struct RunSpec {
  Experiment experiment = Experiment::custom;
  nlohmann::json overrides = nlohmann::json::object();
  std::string output_path;  // empty writes the CSV to stdout
  std::uint64_t seed = 1;
  int jobs = 1;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "a",           "b",           "coeff_dist",     "extra_computations",
      "extras",      "k",           "m",              "master_udist",
      "master_vdist", "n",          "norm",           "r",
      "rank_tol",    "s",           "stability",      "stragglers",
      "survivors",   "t",           "target_failures", "target_successes",
      "theta",       "trials_max",  "udist",          "vdist",
      "w_star",      "workers"};
  return keys;
}

inline void check_known(const nlohmann::json& overrides) {
  for (const auto& [key, value] : overrides.items())
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
}

// Per-experiment applicability. A key that exists but cannot affect the
// chosen experiment is an error, not a silent no-op.
inline void check_applicable(Experiment e, const nlohmann::json& overrides) {
  static const std::set<std::string> common = {"coeff_dist", "rank_tol", "target_failures",
                                              "trials_max"};
  std::set<std::string> allowed = common;
  switch (e) {
    case Experiment::fig1:
      break;
    case Experiment::fig2_3:
      allowed.insert({"k", "theta"});
      break;
    case Experiment::fig4:
      allowed.insert({"survivors", "theta"});
      break;
    case Experiment::fig5:
      allowed.insert({"extras", "theta"});
      break;
    case Experiment::fig6:
      allowed.insert({"extras", "w_star"});
      break;
    case Experiment::fig7:
      allowed.insert({"extras", "norm", "target_successes", "theta"});
      break;
    case Experiment::custom:
      allowed.insert({"extra_computations", "m", "master_udist", "master_vdist", "n", "norm", "r",
                      "s", "stability", "stragglers", "t", "target_successes", "theta", "udist",
                      "vdist", "workers"});
      break;
    case Experiment::matmul:
      allowed = {"a", "b", "coeff_dist", "extra_computations", "m", "master_udist",
                 "master_vdist", "n", "rank_tol", "stragglers", "udist", "vdist", "workers"};
      break;
  }
  for (const auto& [key, value] : overrides.items())
    if (!allowed.count(key))
      throw ConfigError("config key '" + key + "' does not apply to experiment " +
                        std::string(to_string(e)));
}

inline double get_number(const nlohmann::json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return j[key].get<double>();
}

inline long long get_int(const nlohmann::json& j, const std::string& key, long long fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer())
    throw ConfigError("config key '" + key + "' must be an integer");
  return j[key].get<long long>();
}

inline std::string get_string(const nlohmann::json& j, const std::string& key,
                              const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return j[key].get<std::string>();
}

inline bool get_bool(const nlohmann::json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
  return j[key].get<bool>();
}

// Number-or-array keys (theta, k, survivors, w_star, extras) expand sweeps.
inline std::vector<double> get_grid(const nlohmann::json& j, const std::string& key,
                                    std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j[key];
  if (v.is_number()) return {v.get<double>()};
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& item : v) {
      if (!item.is_number())
        throw ConfigError("config key '" + key + "' must hold numbers");
      out.push_back(item.get<double>());
    }
    if (out.empty()) throw ConfigError("config key '" + key + "' must not be an empty list");
    return out;
  }
  throw ConfigError("config key '" + key + "' must be a number or a list of numbers");
}

inline RankTolerance get_rank_tol(const nlohmann::json& j) {
  RankTolerance tol;
  if (j.contains("rank_tol")) {
    if (!j["rank_tol"].is_number() || !(j["rank_tol"].get<double>() > 0.0))
      throw ConfigError("config key 'rank_tol' must be a positive number");
    tol.absolute = j["rank_tol"].get<double>();
  }
  return tol;
}

}  // namespace detail

// One campaign point, fully resolved: everything a re-run needs, plus a
// single-line human-readable echo for the CSV comment block.
struct CampaignPoint {
  ExperimentConfig cfg;
  bool stability = false;
  CoefficientDistribution input_dist{CoefficientDistribution::Kind::standard_normal};
  MatrixNorm norm = MatrixNorm::spectral;
  std::string note;
};

namespace detail {

inline std::string describe(const CampaignPoint& p) {
  const SystemConfig& sys = p.cfg.system;
  std::string s;
  s += "K=" + std::to_string(sys.k());
  s += " N=" + std::to_string(sys.num_workers);
  s += " S=" + std::to_string(sys.num_stragglers);
  s += " R=" + std::to_string(sys.num_extras);
  s += " m=" + std::to_string(sys.m) + " n=" + std::to_string(sys.n);
  s += " r=" + std::to_string(sys.r) + " s=" + std::to_string(sys.s) +
       " t=" + std::to_string(sys.t);
  if (p.cfg.theta) s += " theta=" + srkrp::detail::format_double(*p.cfg.theta);
  s += " udist=" + srkrp::to_string(sys.worker_udist);
  s += " vdist=" + srkrp::to_string(sys.worker_vdist);
  if (sys.num_extras > 0) {
    s += " master_udist=" + srkrp::to_string(sys.master_udist);
    s += " master_vdist=" + srkrp::to_string(sys.master_vdist);
  }
  s += " coeff_dist=";
  s += sys.coeff_dist.name();
  s += " trials_max=" + std::to_string(p.cfg.trials_max);
  if (p.stability) {
    s += " target_successes=" + std::to_string(p.cfg.target_successes);
    s += " input_dist=";
    s += p.input_dist.name();
    s += " norm=";
    s += srkrp::to_string(p.norm);
  } else {
    s += " target_failures=" + std::to_string(p.cfg.target_failures);
  }
  if (p.cfg.rank_tol.absolute) s += " rank_tol=" + srkrp::detail::format_double(*p.cfg.rank_tol.absolute);
  s += " seed=" + std::to_string(p.cfg.master_seed);
  return s;
}

// Shared scaffold for the figure presets: K workers survive (S = 0), input
// shapes scale with the split so every block is 8 columns wide.
inline SystemConfig preset_system(int m, int n) {
  SystemConfig sys;
  sys.m = m;
  sys.n = n;
  sys.r = 64;
  sys.s = 8 * m;
  sys.t = 8 * n;
  sys.num_workers = m * n;
  sys.num_stragglers = 0;
  sys.num_extras = 0;
  return sys;
}

inline WeightDistribution theta_weights(double theta, int k, int max_weight) {
  double w_avg = theta * std::log(static_cast<double>(k));
  return simplest_distribution(std::sqrt(w_avg), max_weight);
}

struct PresetDefaults {
  long long trials_max;
  int target_failures;
};

inline PresetDefaults campaign_defaults(const nlohmann::json& ov, long long trials_max) {
  PresetDefaults d;
  d.trials_max = get_int(ov, "trials_max", trials_max);
  d.target_failures = static_cast<int>(get_int(ov, "target_failures", 50));
  if (d.trials_max < 1) throw ConfigError("config key 'trials_max' must be >= 1");
  if (d.target_failures < 1) throw ConfigError("config key 'target_failures' must be >= 1");
  return d;
}

// Weight-distribution pairs over {2,3,4} on the 0.05 probability grid whose
// mean-weight product is exactly 9. Enumerated in integer arithmetic: with
// U = (a/20)x^2 + (b/20)x^3 + (1-a/20-b/20)x^4 the mean is (80-2a-b)/20, so
// the constraint reads (80-2a1-b1)(80-2a2-b2) = 3600.
inline std::vector<std::pair<WeightDistribution, WeightDistribution>> fig1_pairs() {
  std::vector<std::pair<int, int>> sides;  // (a, b) with 2a+b determining the mean
  for (int a = 0; a <= 20; ++a)
    for (int b = 0; b + a <= 20; ++b) sides.emplace_back(a, b);
  auto make = [](int a, int b) {
    std::map<int, double> probs;
    if (a > 0) probs[2] = a / 20.0;
    if (b > 0) probs[3] = b / 20.0;
    if (20 - a - b > 0) probs[4] = (20 - a - b) / 20.0;
    return WeightDistribution(probs, 8);
  };
  std::vector<std::pair<WeightDistribution, WeightDistribution>> pairs;
  for (auto [a1, b1] : sides) {
    for (auto [a2, b2] : sides) {
      if ((80 - 2 * a1 - b1) * (80 - 2 * a2 - b2) == 3600)
        pairs.emplace_back(make(a1, b1), make(a2, b2));
    }
  }
  return pairs;
}

}  // namespace detail

// Expands a RunSpec into the fully resolved list of campaign points, in the
// order their rows will appear in the CSV. Each point's seed is derived from
// the run seed and the point index, so points can run in any order or in
// parallel without changing any result.
inline std::vector<CampaignPoint> expand_points(const RunSpec& spec) {
  const nlohmann::json& ov = spec.overrides;
  detail::check_known(ov);
  detail::check_applicable(spec.experiment, ov);
  if (spec.experiment == Experiment::matmul)
    throw ConfigError("matmul is not a campaign experiment");

  CoefficientDistribution coeff =
      CoefficientDistribution::parse(detail::get_string(ov, "coeff_dist", "uniform01"));
  RankTolerance rank_tol = detail::get_rank_tol(ov);

  std::vector<CampaignPoint> points;
  auto push = [&](ExperimentConfig cfg, bool stability = false,
                  MatrixNorm norm = MatrixNorm::spectral) {
    cfg.system.coeff_dist = coeff;
    cfg.rank_tol = rank_tol;
    cfg.master_seed = derive_seed(spec.seed, points.size());
    CampaignPoint p;
    p.cfg = std::move(cfg);
    p.stability = stability;
    p.norm = norm;
    points.push_back(std::move(p));
  };

  switch (spec.experiment) {
    case Experiment::fig1: {
      auto d = detail::campaign_defaults(ov, 100'000);
      for (auto& [u, v] : detail::fig1_pairs()) {
        ExperimentConfig cfg;
        cfg.system = detail::preset_system(8, 8);
        cfg.system.worker_udist = u;
        cfg.system.worker_vdist = v;
        cfg.trials_max = d.trials_max;
        cfg.target_failures = d.target_failures;
        push(std::move(cfg));
      }
      break;
    }
    case Experiment::fig2_3: {
      auto d = detail::campaign_defaults(ov, 10'000);
      // The full-size sweep also runs K=1024 (m=n=32); desk scale stops at
      // 256. Pass k=[64,256,1024] to restore it.
      std::vector<double> ks = detail::get_grid(ov, "k", {64, 256});
      std::vector<double> thetas =
          detail::get_grid(ov, "theta", {0.5, 0.75, 1, 1.25, 1.5, 1.75, 2});
      for (double kd : ks) {
        int side = static_cast<int>(std::lround(std::sqrt(kd)));
        if (side * side != static_cast<int>(std::lround(kd)))
          throw ConfigError("config key 'k' entries must be perfect squares (m = n)");
        for (double theta : thetas) {
          ExperimentConfig cfg;
          cfg.system = detail::preset_system(side, side);
          int k = side * side;
          cfg.system.worker_udist = detail::theta_weights(theta, k, side);
          cfg.system.worker_vdist = cfg.system.worker_udist;
          cfg.theta = theta;
          cfg.trials_max = d.trials_max;
          cfg.target_failures = d.target_failures;
          push(std::move(cfg));
        }
      }
      break;
    }
    case Experiment::fig4: {
      auto d = detail::campaign_defaults(ov, 20'000);
      // Full sweep would hit every survivor count in [K, K+16]; step 2 halves
      // the runtime and an explicit survivors override restores the rest.
      std::vector<double> survivors =
          detail::get_grid(ov, "survivors", {64, 66, 68, 70, 72, 74, 76, 78, 80});
      std::vector<double> thetas = detail::get_grid(ov, "theta", {0.5, 1, 1.5, 2});
      for (double theta : thetas) {
        for (double sv : survivors) {
          int survivor_count = static_cast<int>(std::lround(sv));
          if (survivor_count < 64)
            throw ConfigError("config key 'survivors' entries must be >= K = 64");
          ExperimentConfig cfg;
          cfg.system = detail::preset_system(8, 8);
          cfg.system.num_workers = survivor_count;  // S = 0, so N - S = N
          cfg.system.worker_udist = detail::theta_weights(theta, 64, 8);
          cfg.system.worker_vdist = cfg.system.worker_udist;
          cfg.theta = theta;
          cfg.trials_max = d.trials_max;
          cfg.target_failures = d.target_failures;
          push(std::move(cfg));
        }
      }
      break;
    }
    case Experiment::fig5: {
      auto d = detail::campaign_defaults(ov, 20'000);
      std::vector<double> extras = detail::get_grid(ov, "extras", {0, 1, 2});
      std::vector<double> thetas =
          detail::get_grid(ov, "theta", {0.5, 0.75, 1, 1.25, 1.5, 1.75, 2});
      for (double re : extras) {
        for (double theta : thetas) {
          ExperimentConfig cfg;
          cfg.system = detail::preset_system(8, 8);
          cfg.system.num_extras = static_cast<int>(std::lround(re));
          cfg.system.worker_udist = detail::theta_weights(theta, 64, 8);
          cfg.system.worker_vdist = cfg.system.worker_udist;
          if (cfg.system.num_extras > 0) {
            cfg.system.master_udist = WeightDistribution::point_mass(8, 8);
            cfg.system.master_vdist = cfg.system.master_udist;
          }
          cfg.theta = theta;
          cfg.trials_max = d.trials_max;
          cfg.target_failures = d.target_failures;
          push(std::move(cfg));
        }
      }
      break;
    }
    case Experiment::fig6: {
      auto d = detail::campaign_defaults(ov, 30'000);
      std::vector<double> extras = detail::get_grid(ov, "extras", {0, 1, 2});
      std::vector<double> w_stars =
          detail::get_grid(ov, "w_star", {16, 24, 32, 40, 48, 56, 64});
      for (double re : extras) {
        int r_extras = static_cast<int>(std::lround(re));
        // Without master tasks the w* axis is moot: emit the baseline once.
        std::vector<double> grid = r_extras == 0 ? std::vector<double>{0} : w_stars;
        for (double w_star : grid) {
          ExperimentConfig cfg;
          cfg.system = detail::preset_system(8, 8);
          cfg.system.num_extras = r_extras;
          cfg.system.worker_udist = WeightDistribution::point_mass(3, 8);
          cfg.system.worker_vdist = cfg.system.worker_udist;
          if (r_extras > 0) {
            cfg.system.master_udist = simplest_distribution(std::sqrt(w_star), 8);
            cfg.system.master_vdist = cfg.system.master_udist;
          }
          cfg.trials_max = d.trials_max;
          cfg.target_failures = d.target_failures;
          push(std::move(cfg));
        }
      }
      break;
    }
    case Experiment::fig7: {
      long long trials_max = detail::get_int(ov, "trials_max", 20'000);
      int target_successes = static_cast<int>(detail::get_int(ov, "target_successes", 1'000));
      MatrixNorm norm = parse_matrix_norm(detail::get_string(ov, "norm", "spectral"));
      std::vector<double> extras = detail::get_grid(ov, "extras", {0, 1, 2});
      std::vector<double> thetas = detail::get_grid(ov, "theta", {1, 1.25, 1.5, 1.75, 2});
      for (double re : extras) {
        for (double theta : thetas) {
          ExperimentConfig cfg;
          cfg.system = detail::preset_system(8, 8);
          cfg.system.num_extras = static_cast<int>(std::lround(re));
          cfg.system.worker_udist = detail::theta_weights(theta, 64, 8);
          cfg.system.worker_vdist = cfg.system.worker_udist;
          if (cfg.system.num_extras > 0) {
            cfg.system.master_udist = WeightDistribution::point_mass(8, 8);
            cfg.system.master_vdist = cfg.system.master_udist;
          }
          cfg.theta = theta;
          cfg.trials_max = trials_max;
          cfg.target_successes = target_successes;
          push(std::move(cfg), true, norm);
        }
      }
      break;
    }
    case Experiment::custom: {
      ExperimentConfig cfg;
      SystemConfig& sys = cfg.system;
      sys.m = static_cast<int>(detail::get_int(ov, "m", 1));
      sys.n = static_cast<int>(detail::get_int(ov, "n", 1));
      sys.r = static_cast<int>(detail::get_int(ov, "r", 64));
      sys.s = static_cast<int>(detail::get_int(ov, "s", 64));
      sys.t = static_cast<int>(detail::get_int(ov, "t", 64));
      sys.num_workers = static_cast<int>(detail::get_int(ov, "workers", sys.m * sys.n));
      sys.num_stragglers = static_cast<int>(detail::get_int(ov, "stragglers", 0));
      sys.num_extras = static_cast<int>(detail::get_int(ov, "extra_computations", 0));
      cfg.trials_max = detail::get_int(ov, "trials_max", 100'000);
      cfg.target_failures = static_cast<int>(detail::get_int(ov, "target_failures", 50));
      cfg.target_successes = static_cast<int>(detail::get_int(ov, "target_successes", 1'000));
      bool stability = detail::get_bool(ov, "stability", false);
      MatrixNorm norm = parse_matrix_norm(detail::get_string(ov, "norm", "spectral"));

      std::vector<double> thetas =
          ov.contains("theta") ? detail::get_grid(ov, "theta", {}) : std::vector<double>{};
      bool has_udist = ov.contains("udist") || ov.contains("vdist");
      if (!thetas.empty() && has_udist)
        throw ConfigError("give either 'theta' or explicit 'udist'/'vdist', not both");

      auto master_of = [&](SystemConfig& s) {
        if (s.num_extras > 0) {
          s.master_udist = WeightSpec::parse(detail::get_string(ov, "master_udist", "dense"))
                               .resolve(s.m);
          s.master_vdist = WeightSpec::parse(detail::get_string(ov, "master_vdist", "dense"))
                               .resolve(s.n);
        }
      };

      if (thetas.empty()) {
        sys.worker_udist = WeightSpec::parse(detail::get_string(ov, "udist", "dense")).resolve(sys.m);
        sys.worker_vdist = WeightSpec::parse(detail::get_string(ov, "vdist", "dense")).resolve(sys.n);
        master_of(sys);
        if (stability)
          push(std::move(cfg), true, norm);
        else
          push(std::move(cfg));
      } else {
        for (double theta : thetas) {
          ExperimentConfig point = cfg;
          double w_avg = theta * std::log(static_cast<double>(point.system.k()));
          point.system.worker_udist = simplest_distribution(std::sqrt(w_avg), point.system.m);
          point.system.worker_vdist = simplest_distribution(std::sqrt(w_avg), point.system.n);
          master_of(point.system);
          point.theta = theta;
          if (stability)
            push(std::move(point), true, norm);
          else
            push(std::move(point));
        }
      }
      break;
    }
    case Experiment::matmul:
      break;  // unreachable, rejected above
  }

  for (auto& p : points) {
    p.cfg.validate();
    p.note = detail::describe(p);
  }
  return points;
}

// Parses a JSON config document into a RunSpec. Top-level keys experiment,
// output, seed and jobs configure the run itself; everything else is kept as
// an override and validated against the known-key list.
inline RunSpec parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  RunSpec spec;
  for (auto& [key, value] : doc.items()) {
    if (key == "experiment") {
      if (!value.is_string()) throw ConfigError("config key 'experiment' must be a string");
      spec.experiment = parse_experiment(value.get<std::string>());
    } else if (key == "output") {
      if (!value.is_string()) throw ConfigError("config key 'output' must be a string");
      spec.output_path = value.get<std::string>();
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer())
        throw ConfigError("config key 'seed' must be an unsigned integer");
      spec.seed = value.get<std::uint64_t>();
    } else if (key == "jobs") {
      if (!value.is_number_integer() || value.get<int>() < 1)
        throw ConfigError("config key 'jobs' must be an integer >= 1");
      spec.jobs = value.get<int>();
    } else if (detail::known_keys().count(key)) {
      spec.overrides[key] = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return spec;
}

// Runs the points, jobs at a time. Point i writes only results[i], so the
// output is identical for every jobs value and completion order.
inline std::vector<CampaignResult> execute_points(const std::vector<CampaignPoint>& points,
                                                  int jobs) {
  std::vector<CampaignResult> results(points.size());
  auto run_one = [&](std::size_t i) {
    const CampaignPoint& p = points[i];
    results[i] = p.stability ? run_stability_campaign(p.cfg, p.input_dist, p.norm)
                             : run_failure_campaign(p.cfg);
  };
  if (jobs <= 1 || points.size() <= 1) {
    for (std::size_t i = 0; i < points.size(); ++i) run_one(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      run_one(i);
    }
  };
  int n_threads = std::min<int>(jobs, static_cast<int>(points.size()));
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  return results;
}

// CSV layout: a comment block (run line, then one line per point echoing its
// resolved configuration), the fixed column header, then one data row per
// point in point order. Comment lines start with '#' so column-oriented
// readers can skip them.
inline std::string render_csv(const RunSpec& spec, const std::vector<CampaignPoint>& points,
                              const std::vector<CampaignResult>& results) {
  std::string out;
  out += "# srkrp experiment=" + std::string(to_string(spec.experiment)) +
         " seed=" + std::to_string(spec.seed) + " points=" + std::to_string(points.size()) + "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out += "# point " + std::to_string(i) + ": " + points[i].note;
    if (results[i].failures == 0 && !points[i].stability)
      out += " [0 failures in " + std::to_string(results[i].trials_run) +
             " trials, one-sided 95% bound p_f <= " +
             srkrp::detail::format_double(results[i].p_f_upper95) + "]";
    out += "\n";
  }
  out += CampaignResult::csv_header() + "\n";
  for (const auto& r : results) out += r.csv_row() + "\n";
  return out;
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void run_matmul(const RunSpec& spec, std::ostream& log) {
  const nlohmann::json& ov = spec.overrides;
  check_known(ov);
  check_applicable(Experiment::matmul, ov);
  std::string a_path = get_string(ov, "a", "");
  std::string b_path = get_string(ov, "b", "");
  if (a_path.empty() || b_path.empty())
    throw ConfigError("matmul needs both 'a' and 'b' matrix files");

  DenseMatrix a = read_matrix_file(a_path).to_dense();
  DenseMatrix b = read_matrix_file(b_path).to_dense();
  if (a.rows() != b.rows())
    throw ShapeError("matmul: a has " + std::to_string(a.rows()) + " rows, b has " +
                     std::to_string(b.rows()));

  SystemConfig sys;
  sys.r = a.rows();
  sys.s = a.cols();
  sys.t = b.cols();
  sys.m = static_cast<int>(get_int(ov, "m", 1));
  sys.n = static_cast<int>(get_int(ov, "n", 1));
  sys.num_stragglers = static_cast<int>(get_int(ov, "stragglers", 0));
  sys.num_extras = static_cast<int>(get_int(ov, "extra_computations", 0));
  sys.num_workers =
      static_cast<int>(get_int(ov, "workers", sys.m * sys.n + sys.num_stragglers));
  sys.worker_udist = WeightSpec::parse(get_string(ov, "udist", "dense")).resolve(sys.m);
  sys.worker_vdist = WeightSpec::parse(get_string(ov, "vdist", "dense")).resolve(sys.n);
  if (sys.num_extras > 0) {
    sys.master_udist = WeightSpec::parse(get_string(ov, "master_udist", "dense")).resolve(sys.m);
    sys.master_vdist = WeightSpec::parse(get_string(ov, "master_vdist", "dense")).resolve(sys.n);
  }
  sys.coeff_dist = CoefficientDistribution::parse(get_string(ov, "coeff_dist", "uniform01"));
  sys.validate();

  OrchestrateOptions opts;
  opts.rank_tol = get_rank_tol(ov);

  RandomStream rng(spec.seed);
  std::vector<int> stragglers = rng.sample_subset(sys.num_workers, sys.num_stragglers);
  OrchestrateResult run = orchestrate(sys, a, b, stragglers, rng, opts);

  if (spec.output_path.empty()) {
    write_matrix(log, SparseMatrix::from_dense(run.c_hat));
  } else {
    write_matrix_file(spec.output_path, run.c_hat);
  }

  const ExecutionMetrics& metrics = run.metrics;
  long long total_comm = 0;
  for (long long c : metrics.per_node_comm) total_comm += c;
  log << "matmul: " << sys.r << "x" << sys.s << " times " << sys.r << "x" << sys.t << " with m="
      << sys.m << " n=" << sys.n << " N=" << sys.num_workers << " S=" << sys.num_stragglers
      << " R=" << sys.num_extras << "\n";
  log << "collected " << metrics.wall_results_collected << " results, total comm " << total_comm
      << " nonzeros, encode flops " << metrics.encode_flops << ", decode flops "
      << metrics.decode_flops << "\n";
  if (!spec.output_path.empty()) log << "wrote " << spec.output_path << "\n";
}

}  // namespace detail

// Executes one RunSpec end to end. Campaign experiments write CSV (file or
// stdout) and log a comparison table; matmul writes the recovered product.
// Errors surface as exceptions; main() maps them to exit codes.
inline void run(const RunSpec& spec, std::ostream& log) {
  if (spec.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (spec.experiment == Experiment::matmul) {
    detail::run_matmul(spec, log);
    return;
  }
  std::vector<CampaignPoint> points = expand_points(spec);
  std::vector<CampaignResult> results = execute_points(points, spec.jobs);
  std::string csv = render_csv(spec, points, results);
  if (spec.output_path.empty()) {
    log << csv;
  } else {
    detail::write_text_file(spec.output_path, csv);
    log << "wrote " << results.size() << " rows to " << spec.output_path << "\n";
  }
  log << empirical_vs_approx_report(results);
}

}  // namespace srkrp::cli
