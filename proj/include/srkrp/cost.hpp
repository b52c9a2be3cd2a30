#pragma once

#include <algorithm>
#include <string>

#include "srkrp/codec.hpp"
#include "srkrp/error.hpp"

namespace srkrp {

// Asymptotic operation counts with all hidden constants set to 1.
struct CostReport {
  double worker_compute = 0;  // flops per worker task
  double worker_comm = 0;     // nonzeros shipped per worker
  double encoding = 0;        // total, all N + R coded pairs
  double decoding = 0;        // factorization plus per-RHS products

  bool operator==(const CostReport&) const = default;
};

// Predicted costs for one system configuration and input sparsity level.
//
// Per-worker compute is min(u_avg*t*nnzA, v_avg*s*nnzB)/(m*n): whichever
// coded factor is sparser drives the product loop. Per-worker communication
// counts the nonzeros of both coded blocks. Encoding charges (2w-1) ops per
// combined nonzero for a weight-w combination; decoding charges a dense
// K x (N-S+R) pseudo-inverse plus one sparse matrix-vector product per
// coordinate pair.
inline CostReport cost_model(const SystemConfig& cfg, long long nnz_a, long long nnz_b) {
  cfg.validate();
  if (nnz_a < 0 || nnz_a > static_cast<long long>(cfg.r) * cfg.s)
    throw ParameterError("cost_model: nnz_a = " + std::to_string(nnz_a) + " outside [0, " +
                         std::to_string(static_cast<long long>(cfg.r) * cfg.s) + "]");
  if (nnz_b < 0 || nnz_b > static_cast<long long>(cfg.r) * cfg.t)
    throw ParameterError("cost_model: nnz_b = " + std::to_string(nnz_b) + " outside [0, " +
                         std::to_string(static_cast<long long>(cfg.r) * cfg.t) + "]");

  const double u_avg = cfg.worker_udist.mean();
  const double v_avg = cfg.worker_vdist.mean();
  const double u_star = cfg.num_extras > 0 ? cfg.master_udist.mean() : 0.0;
  const double v_star = cfg.num_extras > 0 ? cfg.master_vdist.mean() : 0.0;
  const double w_avg = u_avg * v_avg;
  const double w_star = u_star * v_star;
  const double na = static_cast<double>(nnz_a);
  const double nb = static_cast<double>(nnz_b);
  const double K = cfg.k();

  CostReport rep;
  rep.worker_compute = std::min(u_avg * cfg.t * na, v_avg * cfg.s * nb) / (cfg.m * cfg.n);
  rep.worker_comm = u_avg * na / cfg.m + v_avg * nb / cfg.n;
  rep.encoding = cfg.num_workers * ((2 * u_avg - 1) * na / cfg.m + (2 * v_avg - 1) * nb / cfg.n) +
                 cfg.num_extras * ((2 * u_star - 1) * na / cfg.m + (2 * v_star - 1) * nb / cfg.n);
  const double rows = cfg.survivors() + cfg.num_extras;
  rep.decoding = K * K * rows +
                 K * (w_avg * (K - cfg.num_extras) + w_star * cfg.num_extras) * na * nb /
                     (static_cast<double>(cfg.r) * cfg.m * cfg.n);
  return rep;
}

}  // namespace srkrp
