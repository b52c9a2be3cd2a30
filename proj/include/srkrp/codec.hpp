#pragma once

#include <string>
#include <vector>

#include "srkrp/error.hpp"
#include "srkrp/matrix.hpp"
#include "srkrp/rng.hpp"
#include "srkrp/solve.hpp"
#include "srkrp/weights.hpp"

namespace srkrp {

// Full parameter set of one coding scheme instance.
//
// Inputs are A (r x s) and B (r x t); the target product is C = A^T B. A is
// split column-wise into m blocks and B into n blocks, giving K = m*n block
// products to recover from num_workers coded worker tasks (of which
// num_stragglers are erased) plus num_extras tasks the master runs locally.
struct SystemConfig {
  int r = 64;
  int s = 64;
  int t = 64;
  int m = 1;
  int n = 1;
  int num_workers = 1;     // N
  int num_stragglers = 0;  // S
  int num_extras = 0;      // R

  WeightDistribution worker_udist;  // over [1..m]
  WeightDistribution worker_vdist;  // over [1..n]
  WeightDistribution master_udist;
  WeightDistribution master_vdist;
  CoefficientDistribution coeff_dist;

  int k() const { return m * n; }
  int survivors() const { return num_workers - num_stragglers; }
  int total_nodes() const { return num_workers + num_extras; }

  void validate() const {
    if (r < 1 || s < 1 || t < 1) throw ParameterError("config: r, s, t must be >= 1");
    if (m < 1 || n < 1) throw ParameterError("config: m, n must be >= 1");
    if (s % m != 0)
      throw ShapeError("config: m = " + std::to_string(m) + " does not divide s = " + std::to_string(s));
    if (t % n != 0)
      throw ShapeError("config: n = " + std::to_string(n) + " does not divide t = " + std::to_string(t));
    if (k() > num_workers)
      throw ParameterError("config: m*n = " + std::to_string(k()) + " exceeds worker count " +
                           std::to_string(num_workers));
    if (num_stragglers < 0 || num_stragglers > num_workers)
      throw ParameterError("config: straggler count " + std::to_string(num_stragglers) +
                           " outside [0, " + std::to_string(num_workers) + "]");
    if (num_extras < 0) throw ParameterError("config: extra computation count must be >= 0");
    if (worker_udist.max_weight() != m)
      throw ParameterError("config: worker_udist targets max weight " +
                           std::to_string(worker_udist.max_weight()) + ", expected m = " +
                           std::to_string(m));
    if (worker_vdist.max_weight() != n)
      throw ParameterError("config: worker_vdist targets max weight " +
                           std::to_string(worker_vdist.max_weight()) + ", expected n = " +
                           std::to_string(n));
    if (num_extras > 0) {
      if (master_udist.max_weight() != m)
        throw ParameterError("config: master_udist targets max weight " +
                             std::to_string(master_udist.max_weight()) + ", expected m = " +
                             std::to_string(m));
      if (master_vdist.max_weight() != n)
        throw ParameterError("config: master_vdist targets max weight " +
                             std::to_string(master_vdist.max_weight()) + ", expected n = " +
                             std::to_string(n));
    }
  }
};

// Sparse row vector of coding coefficients: ascending 0-based support plus
// aligned nonzero values.
struct CodingVector {
  int length = 0;
  std::vector<int> support;
  std::vector<double> coeffs;

  int weight() const { return static_cast<int>(support.size()); }

  std::vector<double> to_dense() const {
    std::vector<double> out(length, 0.0);
    for (std::size_t i = 0; i < support.size(); ++i) out[support[i]] = coeffs[i];
    return out;
  }

  bool operator==(const CodingVector&) const = default;
};

// One random draw of wdist-many support positions with coefficients from
// cdist: weight first, then a uniform subset, then i.i.d. values in support
// order. The draw order is part of the reproducibility contract.
inline CodingVector draw_coding_vector(int length, const WeightDistribution& wdist,
                                       const CoefficientDistribution& cdist, RandomStream& rng) {
  if (wdist.max_weight() > length)
    throw ParameterError("draw_coding_vector: distribution max weight " +
                         std::to_string(wdist.max_weight()) + " exceeds vector length " +
                         std::to_string(length));
  CodingVector v;
  v.length = length;
  int weight = wdist.sample(rng);
  v.support = rng.sample_subset(length, weight);
  v.coeffs.reserve(v.support.size());
  for (std::size_t i = 0; i < v.support.size(); ++i) v.coeffs.push_back(cdist.sample(rng));
  return v;
}

// Kronecker product of two coding rows as a sparse row of length
// p.length * q.length; entry at flat index i*q.length + j is p_i * q_j.
inline CodingVector kron_row(const CodingVector& p, const CodingVector& q) {
  CodingVector out;
  out.length = p.length * q.length;
  out.support.reserve(p.support.size() * q.support.size());
  out.coeffs.reserve(p.support.size() * q.support.size());
  for (std::size_t a = 0; a < p.support.size(); ++a) {
    for (std::size_t b = 0; b < q.support.size(); ++b) {
      out.support.push_back(p.support[a] * q.length + q.support[b]);
      out.coeffs.push_back(p.coeffs[a] * q.coeffs[b]);
    }
  }
  return out;
}

// Every coding-vector pair of one code instance, in node order: workers
// 0..N-1 from the worker distributions, then extras N..N+R-1 from the master
// distributions. Drawn in full before any straggler is known, so the
// realization does not depend on which workers fail.
struct CodeRealization {
  std::vector<CodingVector> p_rows;
  std::vector<CodingVector> q_rows;

  int nodes() const { return static_cast<int>(p_rows.size()); }
};

inline CodeRealization draw_realization(const SystemConfig& cfg, RandomStream& rng) {
  CodeRealization real;
  real.p_rows.reserve(cfg.total_nodes());
  real.q_rows.reserve(cfg.total_nodes());
  for (int l = 0; l < cfg.num_workers; ++l) {
    real.p_rows.push_back(draw_coding_vector(cfg.m, cfg.worker_udist, cfg.coeff_dist, rng));
    real.q_rows.push_back(draw_coding_vector(cfg.n, cfg.worker_vdist, cfg.coeff_dist, rng));
  }
  for (int l = 0; l < cfg.num_extras; ++l) {
    real.p_rows.push_back(draw_coding_vector(cfg.m, cfg.master_udist, cfg.coeff_dist, rng));
    real.q_rows.push_back(draw_coding_vector(cfg.n, cfg.master_vdist, cfg.coeff_dist, rng));
  }
  return real;
}

// Row-wise Khatri-Rao generator restricted to the surviving workers plus the
// master's extra rows. Row l of g is p_rows[l] (x) q_rows[l]; node_ids maps
// each row back to its original node index.
struct GeneratorMatrix {
  std::vector<CodingVector> p_rows;
  std::vector<CodingVector> q_rows;
  std::vector<int> node_ids;
  DenseMatrix g;
};

// survivors: ascending 0-based worker indices, exactly N - S of them.
inline GeneratorMatrix assemble_generator(const SystemConfig& cfg, const CodeRealization& real,
                                          const std::vector<int>& survivors) {
  if (static_cast<int>(survivors.size()) != cfg.survivors())
    throw ParameterError("generator: got " + std::to_string(survivors.size()) +
                         " survivors, expected " + std::to_string(cfg.survivors()));
  for (std::size_t i = 0; i < survivors.size(); ++i) {
    if (survivors[i] < 0 || survivors[i] >= cfg.num_workers)
      throw ParameterError("generator: survivor index " + std::to_string(survivors[i]) +
                           " outside [0, " + std::to_string(cfg.num_workers) + ")");
    if (i > 0 && survivors[i] <= survivors[i - 1])
      throw ParameterError("generator: survivor indices must be strictly ascending");
  }

  GeneratorMatrix gen;
  const int rows = cfg.survivors() + cfg.num_extras;
  gen.p_rows.reserve(rows);
  gen.q_rows.reserve(rows);
  gen.node_ids.reserve(rows);
  for (int id : survivors) gen.node_ids.push_back(id);
  for (int l = 0; l < cfg.num_extras; ++l) gen.node_ids.push_back(cfg.num_workers + l);

  gen.g = DenseMatrix(rows, cfg.k());
  for (int row = 0; row < rows; ++row) {
    int id = gen.node_ids[row];
    gen.p_rows.push_back(real.p_rows[id]);
    gen.q_rows.push_back(real.q_rows[id]);
    CodingVector kr = kron_row(gen.p_rows.back(), gen.q_rows.back());
    for (std::size_t e = 0; e < kr.support.size(); ++e) gen.g(row, kr.support[e]) = kr.coeffs[e];
  }
  return gen;
}

inline GeneratorMatrix build_generator(const SystemConfig& cfg, const std::vector<int>& survivors,
                                       RandomStream& rng) {
  return assemble_generator(cfg, draw_realization(cfg, rng), survivors);
}

// Contiguous column blocks of equal width, in order. Concatenation
// reproduces the input exactly; non-divisible widths are rejected.
inline std::vector<DenseMatrix> partition_columns(const DenseMatrix& x, int parts) {
  if (parts < 1) throw ShapeError("partition_columns: parts must be >= 1");
  if (x.cols() % parts != 0)
    throw ShapeError("partition_columns: " + std::to_string(parts) + " does not divide " +
                     std::to_string(x.cols()) + " columns");
  const int width = x.cols() / parts;
  std::vector<DenseMatrix> blocks;
  blocks.reserve(parts);
  for (int p = 0; p < parts; ++p) {
    DenseMatrix block(x.rows(), width);
    for (int r = 0; r < x.rows(); ++r)
      for (int c = 0; c < width; ++c) block(r, c) = x(r, p * width + c);
    blocks.push_back(std::move(block));
  }
  return blocks;
}

// Coded block: sum of the supported source blocks scaled by the coding
// coefficients, accumulated in ascending support order. Only supported
// blocks are touched, so cost scales with the drawn weight.
inline DenseMatrix encode_block(const std::vector<DenseMatrix>& blocks, const CodingVector& v) {
  if (static_cast<int>(blocks.size()) != v.length)
    throw ShapeError("encode_block: " + std::to_string(blocks.size()) +
                     " blocks for coding vector of length " + std::to_string(v.length));
  if (blocks.empty()) throw ShapeError("encode_block: no blocks");
  const int rows = blocks.front().rows(), cols = blocks.front().cols();
  for (const auto& b : blocks)
    if (b.rows() != rows || b.cols() != cols)
      throw ShapeError("encode_block: block shapes differ, " + std::to_string(rows) + "x" +
                       std::to_string(cols) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()));
  DenseMatrix out(rows, cols);
  for (std::size_t i = 0; i < v.support.size(); ++i) {
    const DenseMatrix& src = blocks[v.support[i]];
    const double coeff = v.coeffs[i];
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) out(r, c) += coeff * src(r, c);
  }
  return out;
}

// Recovers C_hat from the collected coded products.
//
// results[l] is the (s/m) x (t/n) product for generator row l. For every
// coordinate pair (a,b), the vector of results entries at (a,b) equals
// G * z where z stacks the block-product entries at (a,b) in block order
// (i*n + j). One QR factorization of G is shared across all right-hand
// sides; coordinate (i*n + j) of each solution lands at entry (a,b) of
// block (i,j) of the tiled output.
inline DenseMatrix decode(const GeneratorMatrix& gen, const std::vector<DenseMatrix>& results,
                          const SystemConfig& cfg, const RankTolerance& tol = {}) {
  const int K = cfg.k();
  const int rows = gen.g.rows();
  const int block_rows = cfg.s / cfg.m;
  const int block_cols = cfg.t / cfg.n;
  if (static_cast<int>(results.size()) != rows)
    throw ShapeError("decode: " + std::to_string(results.size()) + " results for " +
                     std::to_string(rows) + " generator rows");
  for (const auto& res : results)
    if (res.rows() != block_rows || res.cols() != block_cols)
      throw ShapeError("decode: result block is " + std::to_string(res.rows()) + "x" +
                       std::to_string(res.cols()) + ", expected " + std::to_string(block_rows) +
                       "x" + std::to_string(block_cols));

  int rank = numerical_rank(gen.g, tol);
  if (rank < K)
    throw DecodeFailure("decode: generator rank " + std::to_string(rank) + " < K = " +
                            std::to_string(K),
                        rank);

  // One column of right-hand sides per coordinate pair (a,b).
  const int nrhs = block_rows * block_cols;
  DenseMatrix y(rows, nrhs);
  for (int l = 0; l < rows; ++l)
    for (int a = 0; a < block_rows; ++a)
      for (int b = 0; b < block_cols; ++b) y(l, a * block_cols + b) = results[l](a, b);

  DenseMatrix z = least_squares_solve(gen.g, y);

  DenseMatrix c_hat(cfg.s, cfg.t);
  for (int i = 0; i < cfg.m; ++i)
    for (int j = 0; j < cfg.n; ++j)
      for (int a = 0; a < block_rows; ++a)
        for (int b = 0; b < block_cols; ++b)
          c_hat(i * block_rows + a, j * block_cols + b) = z(i * cfg.n + j, a * block_cols + b);
  return c_hat;
}

}  // namespace srkrp
