#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "srkrp/codec.hpp"
#include "srkrp/cost.hpp"
#include "srkrp/error.hpp"
#include "srkrp/matrix.hpp"
#include "srkrp/rng.hpp"
#include "srkrp/solve.hpp"

namespace srkrp {

// Storage-adaptive coded block: coordinate format at 50% fill or below, plain
// dense above. The product code iterates nonzeros in the same row-major order
// either way, so the storage choice never changes a computed value.
class BlockMatrix {
 public:
  BlockMatrix() = default;

  static BlockMatrix from_dense(const DenseMatrix& d) {
    BlockMatrix b;
    long long nnz = d.nnz();
    bool representable = true;
    for (double v : d.entries())
      if (v != 0.0 && std::abs(v) < 1e-300) representable = false;
    if (representable && 2 * nnz <= static_cast<long long>(d.rows()) * d.cols()) {
      b.sparse_ = SparseMatrix::from_dense(d);
      b.rows_ = d.rows();
      b.cols_ = d.cols();
      b.nnz_ = nnz;
    } else {
      b.dense_ = d;
      b.rows_ = d.rows();
      b.cols_ = d.cols();
      b.nnz_ = nnz;
    }
    return b;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long long nnz() const { return nnz_; }
  bool is_sparse() const { return sparse_.has_value(); }

  DenseMatrix to_dense() const { return sparse_ ? sparse_->to_dense() : *dense_; }

  // Appends the nonzero (column, value) pairs of row r, ascending by column.
  void row_entries(int r, std::vector<std::pair<int, double>>& out) const {
    if (sparse_) {
      for (const auto& e : sparse_->row(r)) out.emplace_back(e.col, e.value);
    } else {
      for (int c = 0; c < cols_; ++c)
        if ((*dense_)(r, c) != 0.0) out.emplace_back(c, (*dense_)(r, c));
    }
  }

  bool operator==(const BlockMatrix& other) const { return to_dense() == other.to_dense(); }

 private:
  std::optional<DenseMatrix> dense_;
  std::optional<SparseMatrix> sparse_;
  int rows_ = 0;
  int cols_ = 0;
  long long nnz_ = 0;
};

// a^T * b over the shared row index, accumulating each output cell in
// ascending row order so the result is independent of storage format. When
// flops is given it receives the exact multiply-add count, one per nonzero
// pair sharing a row.
inline DenseMatrix transpose_product(const BlockMatrix& a, const BlockMatrix& b,
                                     long long* flops = nullptr) {
  if (a.rows() != b.rows())
    throw ShapeError("transpose_product: " + std::to_string(a.rows()) + " rows vs " +
                     std::to_string(b.rows()));
  DenseMatrix c(a.cols(), b.cols());
  long long count = 0;
  std::vector<std::pair<int, double>> arow, brow;
  for (int k = 0; k < a.rows(); ++k) {
    arow.clear();
    brow.clear();
    a.row_entries(k, arow);
    b.row_entries(k, brow);
    for (const auto& [i, av] : arow)
      for (const auto& [j, bv] : brow) c(i, j) += av * bv;
    count += static_cast<long long>(arow.size()) * brow.size();
  }
  if (flops) *flops = count;
  return c;
}

// One unit of work: the coded factor pair destined for a node. Nodes are
// numbered 0..N-1 for workers and N..N+R-1 for the master's own tasks.
struct TaskAssignment {
  int node_id = 0;
  BlockMatrix a_block;
  BlockMatrix b_block;
  bool is_master_local = false;
};

// Operation counters for one full run. per_node_comm[l] is exactly
// nnz(a_block) + nnz(b_block) for node l; per_node_flops[l] is the structural
// multiply-add count of its product. Encode flops charge one multiply per
// source nonzero and one add whenever a cell is hit a second time. Decode
// flops charge K^2 per generator row for the factorization plus one
// multiply-add per (row, coordinate, right-hand side) triple.
struct ExecutionMetrics {
  std::vector<long long> per_node_comm;
  std::vector<long long> per_node_flops;
  long long encode_flops = 0;
  long long decode_flops = 0;
  int wall_results_collected = 0;

  bool operator==(const ExecutionMetrics&) const = default;
};

using TaskExecutor = std::function<DenseMatrix(const TaskAssignment&)>;

struct OrchestrateOptions {
  int worker_threads = 0;  // 0 runs every task inline on the calling thread
  TaskExecutor executor;   // override for fault-injection tests
  std::optional<CodeRealization> fixed_realization;
  RankTolerance rank_tol;
};

struct OrchestrateResult {
  DenseMatrix c_hat;
  ExecutionMetrics metrics;
  CodeRealization realization;
};

// Decode failure surfaced through the runtime, with the metrics measured up
// to the point of failure attached.
class OrchestrateFailure : public DecodeFailure {
 public:
  OrchestrateFailure(const DecodeFailure& cause, ExecutionMetrics metrics)
      : DecodeFailure(cause.what(), cause.rank()), metrics_(std::move(metrics)) {}

  const ExecutionMetrics& metrics() const { return metrics_; }

 private:
  ExecutionMetrics metrics_;
};

namespace detail {

// encode_block with operation counting: a multiply per source nonzero, plus
// an add when the target cell was already written. Skipping exact zeros
// leaves the numerical result identical to the unmetered version.
inline DenseMatrix encode_metered(const std::vector<DenseMatrix>& blocks, const CodingVector& v,
                                  long long& flops) {
  const int rows = blocks.front().rows(), cols = blocks.front().cols();
  DenseMatrix out(rows, cols);
  std::vector<char> touched(static_cast<std::size_t>(rows) * cols, 0);
  for (std::size_t e = 0; e < v.support.size(); ++e) {
    const DenseMatrix& src = blocks[v.support[e]];
    const double coeff = v.coeffs[e];
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        double val = src(r, c);
        if (val == 0.0) continue;
        std::size_t idx = static_cast<std::size_t>(r) * cols + c;
        if (touched[idx]) {
          out(r, c) += coeff * val;
          flops += 2;
        } else {
          out(r, c) = coeff * val;
          touched[idx] = 1;
          flops += 1;
        }
      }
    }
  }
  return out;
}

inline void run_tasks(const std::vector<TaskAssignment>& tasks, const TaskExecutor& exec,
                      int threads, std::vector<DenseMatrix>& results) {
  results.assign(tasks.size(), DenseMatrix());
  if (threads <= 0) {
    for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = exec(tasks[i]);
    return;
  }
  // Workers pull task indices from a shared counter and write into disjoint
  // result slots; the orchestrator touches nothing until every thread joins.
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = exec(tasks[i]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
}

}  // namespace detail

// End-to-end coded multiplication of C = a^T b with S erased workers.
//
// The full realization (N worker pairs, then R master pairs) is drawn before
// the straggler set is consulted, so the drawn code never depends on which
// workers fail. Every task is dispatched and executed, stragglers included;
// their results are discarded at collection time, which is what erasure
// means here. The master's own tasks are never erased.
inline OrchestrateResult orchestrate(const SystemConfig& cfg, const DenseMatrix& a,
                                     const DenseMatrix& b, const std::vector<int>& straggler_set,
                                     RandomStream& rng, const OrchestrateOptions& opts = {}) {
  cfg.validate();
  if (a.rows() != cfg.r || a.cols() != cfg.s)
    throw ShapeError("orchestrate: a is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", config wants " + std::to_string(cfg.r) + "x" +
                     std::to_string(cfg.s));
  if (b.rows() != cfg.r || b.cols() != cfg.t)
    throw ShapeError("orchestrate: b is " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ", config wants " + std::to_string(cfg.r) + "x" +
                     std::to_string(cfg.t));
  if (static_cast<int>(straggler_set.size()) != cfg.num_stragglers)
    throw ParameterError("orchestrate: " + std::to_string(straggler_set.size()) +
                         " stragglers given, config has " + std::to_string(cfg.num_stragglers));
  for (std::size_t i = 0; i < straggler_set.size(); ++i) {
    if (straggler_set[i] < 0 || straggler_set[i] >= cfg.num_workers)
      throw ParameterError("orchestrate: straggler id " + std::to_string(straggler_set[i]) +
                           " outside worker range [0, " + std::to_string(cfg.num_workers) + ")");
    if (i > 0 && straggler_set[i] <= straggler_set[i - 1])
      throw ParameterError("orchestrate: straggler ids must be strictly ascending");
  }

  std::vector<DenseMatrix> a_blocks = partition_columns(a, cfg.m);
  std::vector<DenseMatrix> b_blocks = partition_columns(b, cfg.n);

  OrchestrateResult out;
  out.realization = opts.fixed_realization ? *opts.fixed_realization : draw_realization(cfg, rng);
  if (out.realization.nodes() != cfg.total_nodes())
    throw ParameterError("orchestrate: realization has " +
                         std::to_string(out.realization.nodes()) + " node pairs, config needs " +
                         std::to_string(cfg.total_nodes()));

  ExecutionMetrics& metrics = out.metrics;
  std::vector<TaskAssignment> tasks;
  tasks.reserve(cfg.total_nodes());
  for (int l = 0; l < cfg.total_nodes(); ++l) {
    TaskAssignment task;
    task.node_id = l;
    task.is_master_local = l >= cfg.num_workers;
    task.a_block = BlockMatrix::from_dense(
        detail::encode_metered(a_blocks, out.realization.p_rows[l], metrics.encode_flops));
    task.b_block = BlockMatrix::from_dense(
        detail::encode_metered(b_blocks, out.realization.q_rows[l], metrics.encode_flops));
    metrics.per_node_comm.push_back(task.a_block.nnz() + task.b_block.nnz());
    tasks.push_back(std::move(task));
  }

  // Structural product cost per node, identical for every executor.
  metrics.per_node_flops.reserve(tasks.size());
  std::vector<std::pair<int, double>> arow, brow;
  for (const auto& task : tasks) {
    long long f = 0;
    for (int k = 0; k < cfg.r; ++k) {
      arow.clear();
      brow.clear();
      task.a_block.row_entries(k, arow);
      task.b_block.row_entries(k, brow);
      f += static_cast<long long>(arow.size()) * brow.size();
    }
    metrics.per_node_flops.push_back(f);
  }

  TaskExecutor exec = opts.executor;
  if (!exec)
    exec = [](const TaskAssignment& t) { return transpose_product(t.a_block, t.b_block); };
  std::vector<DenseMatrix> raw_results;
  detail::run_tasks(tasks, exec, opts.worker_threads, raw_results);

  // Erasure: straggler results are dropped here, in node order.
  std::vector<int> survivors;
  survivors.reserve(cfg.survivors());
  std::size_t next_straggler = 0;
  for (int l = 0; l < cfg.num_workers; ++l) {
    if (next_straggler < straggler_set.size() && straggler_set[next_straggler] == l) {
      ++next_straggler;
      continue;
    }
    survivors.push_back(l);
  }
  GeneratorMatrix gen = assemble_generator(cfg, out.realization, survivors);
  std::vector<DenseMatrix> collected;
  collected.reserve(gen.node_ids.size());
  for (int id : gen.node_ids) collected.push_back(raw_results[id]);
  metrics.wall_results_collected = static_cast<int>(collected.size());

  const long long K = cfg.k();
  const long long rows = static_cast<long long>(gen.g.rows());
  const long long nrhs = static_cast<long long>(cfg.s / cfg.m) * (cfg.t / cfg.n);
  metrics.decode_flops = K * K * rows + nrhs * K * rows;

  try {
    out.c_hat = decode(gen, collected, cfg, opts.rank_tol);
  } catch (const DecodeFailure& failure) {
    throw OrchestrateFailure(failure, metrics);
  }
  return out;
}

// Measured means over a batch of randomized runs, next to the closed-form
// predictions for the same configuration.
struct CostMeasurement {
  int trials = 0;
  int decode_failures = 0;
  long long nnz_a = 0;
  long long nnz_b = 0;
  double mean_worker_comm = 0;    // workers only, stragglers included
  double mean_worker_flops = 0;
  double mean_encode_flops = 0;
  double mean_decode_flops = 0;
  CostReport predicted;
};

namespace detail {

// Dense matrix with exactly nnz standard-normal entries at uniformly chosen
// positions.
inline DenseMatrix random_sparse(int rows, int cols, long long nnz, RandomStream& rng) {
  DenseMatrix out(rows, cols);
  std::vector<int> cells = rng.sample_subset(rows * cols, static_cast<int>(nnz));
  for (int cell : cells) {
    double v = 0.0;
    while (v == 0.0) v = rng.standard_normal();
    out(cell / cols, cell % cols) = v;
  }
  return out;
}

}  // namespace detail

// Runs orchestrate on random inputs of the requested density and averages the
// metered costs. Decode failures still contribute their metrics; only the
// product itself is lost.
inline CostMeasurement measure_empirical_costs(const SystemConfig& cfg, double sparsity_a,
                                               double sparsity_b, int trials, RandomStream& rng) {
  cfg.validate();
  if (!(sparsity_a > 0.0 && sparsity_a <= 1.0) || !(sparsity_b > 0.0 && sparsity_b <= 1.0))
    throw ParameterError("measure_empirical_costs: sparsity must be in (0, 1]");
  if (trials < 1) throw ParameterError("measure_empirical_costs: trials must be >= 1");

  CostMeasurement meas;
  meas.trials = trials;
  meas.nnz_a = std::llround(sparsity_a * cfg.r * cfg.s);
  meas.nnz_b = std::llround(sparsity_b * cfg.r * cfg.t);
  meas.predicted = cost_model(cfg, meas.nnz_a, meas.nnz_b);

  double sum_comm = 0, sum_flops = 0, sum_encode = 0, sum_decode = 0;
  for (int trial = 0; trial < trials; ++trial) {
    DenseMatrix a = detail::random_sparse(cfg.r, cfg.s, meas.nnz_a, rng);
    DenseMatrix b = detail::random_sparse(cfg.r, cfg.t, meas.nnz_b, rng);
    std::vector<int> stragglers = rng.sample_subset(cfg.num_workers, cfg.num_stragglers);
    ExecutionMetrics metrics;
    try {
      metrics = orchestrate(cfg, a, b, stragglers, rng).metrics;
    } catch (const OrchestrateFailure& failure) {
      ++meas.decode_failures;
      metrics = failure.metrics();
    }
    for (int l = 0; l < cfg.num_workers; ++l) {
      sum_comm += static_cast<double>(metrics.per_node_comm[l]);
      sum_flops += static_cast<double>(metrics.per_node_flops[l]);
    }
    sum_encode += static_cast<double>(metrics.encode_flops);
    sum_decode += static_cast<double>(metrics.decode_flops);
  }
  const double node_samples = static_cast<double>(trials) * cfg.num_workers;
  meas.mean_worker_comm = sum_comm / node_samples;
  meas.mean_worker_flops = sum_flops / node_samples;
  meas.mean_encode_flops = sum_encode / trials;
  meas.mean_decode_flops = sum_decode / trials;
  return meas;
}

inline std::string format_cost_table(const CostMeasurement& m) {
  std::ostringstream os;
  os << "cost                measured        predicted\n";
  os << "worker comm     " << std::setw(12) << m.mean_worker_comm << "     " << std::setw(12)
     << m.predicted.worker_comm << "\n";
  os << "worker flops    " << std::setw(12) << m.mean_worker_flops << "     " << std::setw(12)
     << m.predicted.worker_compute << "\n";
  os << "encode flops    " << std::setw(12) << m.mean_encode_flops << "     " << std::setw(12)
     << m.predicted.encoding << "\n";
  os << "decode flops    " << std::setw(12) << m.mean_decode_flops << "     " << std::setw(12)
     << m.predicted.decoding << "\n";
  os << "trials " << m.trials << ", decode failures " << m.decode_failures << ", nnz(a) "
     << m.nnz_a << ", nnz(b) " << m.nnz_b << "\n";
  return os.str();
}

}  // namespace srkrp
