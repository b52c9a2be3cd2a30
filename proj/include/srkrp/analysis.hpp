#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srkrp/codec.hpp"
#include "srkrp/cost.hpp"
#include "srkrp/error.hpp"
#include "srkrp/format.hpp"
#include "srkrp/matrix.hpp"
#include "srkrp/rng.hpp"
#include "srkrp/runtime.hpp"
#include "srkrp/solve.hpp"
#include "srkrp/weights.hpp"

namespace srkrp {

// Probability that a randomly drawn generator has at least one all-zero
// column when each of the `survivors` rows hits a given column independently
// with probability w_avg / K: 1 - (1 - (1 - w_avg/K)^survivors)^K. Evaluated
// through log1p/expm1 so values near 0 and near 1 keep full precision.
inline double failure_prob_approx(int k, int survivors, double w_avg) {
  if (k < 1) throw ParameterError("failure_prob_approx: K must be >= 1");
  if (survivors < k)
    throw ParameterError("failure_prob_approx: survivors = " + std::to_string(survivors) +
                         " below K = " + std::to_string(k));
  if (!(w_avg > 0.0))
    throw ParameterError("failure_prob_approx: average weight must be positive");
  if (w_avg > k)
    throw ParameterError("failure_prob_approx: average weight " + std::to_string(w_avg) +
                         " exceeds K = " + std::to_string(k));
  double log_col_zero = survivors * std::log1p(-w_avg / k);
  return -std::expm1(k * std::log1p(-std::exp(log_col_zero)));
}

// K! / K^K, the full-rank probability of the weight-1 code with K survivors.
// The running product i/K never leaves [K!/K^K, 1], so no overflow guard is
// needed below the factorial range cap.
inline double single_weight_full_rank_prob(int k) {
  if (k < 1 || k > 170)
    throw ParameterError("single_weight_full_rank_prob: K = " + std::to_string(k) +
                         " outside [1, 170]");
  double prob = 1.0;
  for (int i = 1; i <= k; ++i) prob *= static_cast<double>(i) / k;
  return prob;
}

enum class StragglerMode { uniform_random_subset, fixed_set };

// One Monte-Carlo campaign: the system under test, the stopping rule, and
// the seeding. theta is carried for reporting only; the weight distributions
// inside `system` are what the trials actually draw from.
struct ExperimentConfig {
  SystemConfig system;
  std::optional<double> theta;
  long long trials_max = 1'000'000;
  int target_failures = 100;
  int target_successes = 1000;  // stability campaigns only
  std::uint64_t master_seed = 0;
  StragglerMode straggler_mode = StragglerMode::uniform_random_subset;
  std::vector<int> fixed_stragglers;
  RankTolerance rank_tol;

  void validate() const {
    system.validate();
    if (trials_max < 1) throw ParameterError("campaign: trials_max must be >= 1");
    if (target_failures < 1) throw ParameterError("campaign: target_failures must be >= 1");
    if (target_successes < 1) throw ParameterError("campaign: target_successes must be >= 1");
    if (straggler_mode == StragglerMode::fixed_set) {
      if (static_cast<int>(fixed_stragglers.size()) != system.num_stragglers)
        throw ParameterError("campaign: fixed straggler set has " +
                             std::to_string(fixed_stragglers.size()) + " ids, config wants " +
                             std::to_string(system.num_stragglers));
      for (std::size_t i = 0; i < fixed_stragglers.size(); ++i) {
        if (fixed_stragglers[i] < 0 || fixed_stragglers[i] >= system.num_workers)
          throw ParameterError("campaign: fixed straggler id " +
                               std::to_string(fixed_stragglers[i]) + " outside [0, " +
                               std::to_string(system.num_workers) + ")");
        if (i > 0 && fixed_stragglers[i] <= fixed_stragglers[i - 1])
          throw ParameterError("campaign: fixed straggler ids must be strictly ascending");
      }
    }
  }
};

// Aggregated outcome of one campaign. p_zc counts generators with an all-zero
// column (always a subset of the failures); approx_p_zc is the closed-form
// estimate for the same K, N - S and w_avg with no master extras. When no
// failure was seen, p_f_upper95 carries the rule-of-three 95% bound 3/trials
// instead of a meaningless 0 +/- 0.
struct CampaignResult {
  int k = 0;
  int workers = 0;
  int stragglers = 0;
  int extras = 0;
  double theta = 0;
  double w_avg = 0;
  double w_star_avg = 0;
  long long trials_run = 0;
  long long failures = 0;
  long long zero_col_count = 0;
  long long svd_failures = 0;
  double p_f = 0;
  double standard_error = 0;
  double p_zc = 0;
  double approx_p_zc = 0;
  double p_f_upper95 = 0;
  std::optional<double> mean_rel_error;
  std::uint64_t seed = 0;

  static std::string csv_header() {
    return "K,N,S,R,theta,w_avg,w_star_avg,trials,failures,p_f,stderr,p_zc,approx_p_zc,"
           "mean_rel_error,seed";
  }

  std::string csv_row() const {
    std::string row;
    row += std::to_string(k);
    row += ',';
    row += std::to_string(workers);
    row += ',';
    row += std::to_string(stragglers);
    row += ',';
    row += std::to_string(extras);
    row += ',';
    row += detail::format_double(theta);
    row += ',';
    row += detail::format_double(w_avg);
    row += ',';
    row += detail::format_double(w_star_avg);
    row += ',';
    row += std::to_string(trials_run);
    row += ',';
    row += std::to_string(failures);
    row += ',';
    row += detail::format_double(p_f);
    row += ',';
    row += detail::format_double(standard_error);
    row += ',';
    row += detail::format_double(p_zc);
    row += ',';
    row += detail::format_double(approx_p_zc);
    row += ',';
    if (mean_rel_error) row += detail::format_double(*mean_rel_error);
    row += ',';
    row += std::to_string(seed);
    return row;
  }
};

namespace detail {

inline double echo_theta(const ExperimentConfig& cfg, double w_avg) {
  if (cfg.theta) return *cfg.theta;
  int k = cfg.system.k();
  return k > 1 ? w_avg / std::log(static_cast<double>(k)) : 0.0;
}

inline CampaignResult init_result(const ExperimentConfig& cfg) {
  CampaignResult res;
  const SystemConfig& sys = cfg.system;
  res.k = sys.k();
  res.workers = sys.num_workers;
  res.stragglers = sys.num_stragglers;
  res.extras = sys.num_extras;
  res.w_avg = sys.worker_udist.mean() * sys.worker_vdist.mean();
  res.w_star_avg =
      sys.num_extras > 0 ? sys.master_udist.mean() * sys.master_vdist.mean() : 0.0;
  res.theta = echo_theta(cfg, res.w_avg);
  res.seed = cfg.master_seed;
  return res;
}

inline void finish_rates(CampaignResult& res) {
  res.p_f = static_cast<double>(res.failures) / res.trials_run;
  res.standard_error = std::sqrt(res.p_f * (1.0 - res.p_f) / res.trials_run);
  res.p_zc = static_cast<double>(res.zero_col_count) / res.trials_run;
  if (res.failures == 0) res.p_f_upper95 = 3.0 / res.trials_run;
}

inline std::vector<int> draw_stragglers(const ExperimentConfig& cfg, RandomStream& rng) {
  if (cfg.straggler_mode == StragglerMode::fixed_set) return cfg.fixed_stragglers;
  return rng.sample_subset(cfg.system.num_workers, cfg.system.num_stragglers);
}

inline std::vector<int> complement(const std::vector<int>& stragglers, int workers) {
  std::vector<int> survivors;
  survivors.reserve(workers - stragglers.size());
  std::size_t next = 0;
  for (int l = 0; l < workers; ++l) {
    if (next < stragglers.size() && stragglers[next] == l) {
      ++next;
      continue;
    }
    survivors.push_back(l);
  }
  return survivors;
}

}  // namespace detail

// Draws generator matrices until target_failures rank deficiencies have been
// seen or trials_max trials are spent. Each trial gets its own stream derived
// from master_seed and the trial index, so the outcome is reproducible and
// independent of scheduling. A generator with an all-zero column is counted
// as failed without running an SVD; an SVD that does not converge also counts
// as a failure and is tallied separately.
inline CampaignResult run_failure_campaign(const ExperimentConfig& cfg) {
  cfg.validate();
  CampaignResult res = detail::init_result(cfg);
  const int K = cfg.system.k();

  while (res.failures < cfg.target_failures && res.trials_run < cfg.trials_max) {
    RandomStream rng = RandomStream::for_trial(cfg.master_seed, res.trials_run);
    ++res.trials_run;
    std::vector<int> stragglers = detail::draw_stragglers(cfg, rng);
    GeneratorMatrix gen =
        build_generator(cfg.system, detail::complement(stragglers, cfg.system.num_workers), rng);
    if (has_zero_column(gen.g)) {
      ++res.zero_col_count;
      ++res.failures;
      continue;
    }
    try {
      if (numerical_rank(gen.g, cfg.rank_tol) < K) ++res.failures;
    } catch (const NumericalError&) {
      ++res.svd_failures;
      ++res.failures;
    }
  }

  detail::finish_rates(res);
  int survivors = cfg.system.survivors();
  res.approx_p_zc = survivors >= K ? failure_prob_approx(K, survivors, res.w_avg) : 1.0;
  return res;
}

// Runs the full encode/compute/decode pipeline on fresh random inputs per
// trial and averages the relative error of the recovered product over the
// successful trials. Rank-deficient draws are excluded from the mean and
// counted as failures. Stops after target_successes successes or trials_max
// trials.
inline CampaignResult run_stability_campaign(const ExperimentConfig& cfg,
                                             const CoefficientDistribution& input_dist,
                                             MatrixNorm norm = MatrixNorm::spectral) {
  cfg.validate();
  CampaignResult res = detail::init_result(cfg);
  const SystemConfig& sys = cfg.system;
  const int K = sys.k();

  OrchestrateOptions opts;
  opts.rank_tol = cfg.rank_tol;

  long long successes = 0;
  double error_sum = 0.0;
  while (successes < cfg.target_successes && res.trials_run < cfg.trials_max) {
    RandomStream rng = RandomStream::for_trial(cfg.master_seed, res.trials_run);
    ++res.trials_run;

    DenseMatrix a(sys.r, sys.s);
    for (int i = 0; i < sys.r; ++i)
      for (int j = 0; j < sys.s; ++j) a(i, j) = input_dist.sample(rng);
    DenseMatrix b(sys.r, sys.t);
    for (int i = 0; i < sys.r; ++i)
      for (int j = 0; j < sys.t; ++j) b(i, j) = input_dist.sample(rng);

    std::vector<int> stragglers = detail::draw_stragglers(cfg, rng);
    try {
      OrchestrateResult run = orchestrate(sys, a, b, stragglers, rng, opts);
      DenseMatrix exact = matmul_transpose_left(a, b);
      double denom = matrix_norm(exact, norm);
      if (denom == 0.0) throw NumericalError("stability campaign: exact product has zero norm");
      error_sum += matrix_norm(exact - run.c_hat, norm) / denom;
      ++successes;
    } catch (const DecodeFailure&) {
      ++res.failures;
    }
  }

  detail::finish_rates(res);
  if (successes > 0) res.mean_rel_error = error_sum / successes;
  int survivors = sys.survivors();
  res.approx_p_zc = survivors >= K ? failure_prob_approx(K, survivors, res.w_avg) : 1.0;
  return res;
}

// Side-by-side table of measured failure rates against the zero-column proxy
// and its closed-form estimate, one row per campaign.
inline std::string empirical_vs_approx_report(const std::vector<CampaignResult>& results) {
  if (results.empty()) throw ParameterError("empirical_vs_approx_report: no results");
  std::ostringstream os;
  os << "K,N,S,R,theta,w_avg,p_f,p_zc,approx_p_zc,ratio_pf_to_approx\n";
  for (const auto& r : results) {
    double ratio = r.p_f / r.approx_p_zc;
    os << r.k << ',' << r.workers << ',' << r.stragglers << ',' << r.extras << ','
       << detail::format_double(r.theta) << ',' << detail::format_double(r.w_avg) << ','
       << detail::format_double(r.p_f) << ',' << detail::format_double(r.p_zc) << ','
       << detail::format_double(r.approx_p_zc) << ',' << detail::format_double(ratio) << '\n';
  }
  return os.str();
}

}  // namespace srkrp
