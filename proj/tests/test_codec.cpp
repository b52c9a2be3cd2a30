#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "srkrp/codec.hpp"
#include "srkrp/matrix.hpp"
#include "srkrp/rng.hpp"
#include "srkrp/weights.hpp"

using namespace srkrp;

namespace {

SystemConfig small_config(int m, int n, int workers, int stragglers = 0, int extras = 0) {
  SystemConfig cfg;
  cfg.r = 8;
  cfg.s = 4 * m;
  cfg.t = 4 * n;
  cfg.m = m;
  cfg.n = n;
  cfg.num_workers = workers;
  cfg.num_stragglers = stragglers;
  cfg.num_extras = extras;
  cfg.worker_udist = WeightDistribution::point_mass(m, m);
  cfg.worker_vdist = WeightDistribution::point_mass(n, n);
  if (extras > 0) {
    cfg.master_udist = WeightDistribution::point_mass(m, m);
    cfg.master_vdist = WeightDistribution::point_mass(n, n);
  }
  return cfg;
}

DenseMatrix random_matrix(int rows, int cols, RandomStream& rng) {
  std::vector<double> e(static_cast<std::size_t>(rows) * cols);
  for (double& v : e) v = rng.standard_normal();
  return DenseMatrix(rows, cols, std::move(e));
}

CodingVector unit_vector(int length, int position) {
  return CodingVector{length, {position}, {1.0}};
}

}  // namespace

TEST_CASE("system config validation catches each bound") {
  SystemConfig good = small_config(2, 2, 4);
  CHECK_NOTHROW(good.validate());
  CHECK(good.k() == 4);
  CHECK(good.survivors() == 4);
  CHECK(good.total_nodes() == 4);

  SystemConfig cfg = good;
  cfg.r = 0;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  cfg = good;
  cfg.s = 7;  // m = 2 does not divide 7
  CHECK_THROWS_AS(cfg.validate(), ShapeError);

  cfg = good;
  cfg.num_workers = 3;  // below K = 4
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  cfg = good;
  cfg.num_stragglers = 5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  cfg = good;
  cfg.num_stragglers = -1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  cfg = good;
  cfg.num_extras = -1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  cfg = good;
  cfg.worker_udist = WeightDistribution::point_mass(1, 1);  // max weight 1, expected m = 2
  CHECK_THROWS_AS(cfg.validate(), ParameterError);

  // Master distributions are only checked once extras exist.
  cfg = good;
  CHECK_NOTHROW(cfg.validate());
  cfg.num_extras = 1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg.master_udist = WeightDistribution::point_mass(2, 2);
  cfg.master_vdist = WeightDistribution::point_mass(2, 2);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("coding vector draws have the requested structure") {
  RandomStream rng(17);
  CoefficientDistribution coeffs;

  WeightDistribution dense = WeightDistribution::point_mass(6, 6);
  CodingVector v = draw_coding_vector(6, dense, coeffs, rng);
  CHECK(v.support == std::vector<int>{0, 1, 2, 3, 4, 5});
  for (double c : v.coeffs) {
    CHECK(c > 0.0);
    CHECK(c < 1.0);
  }

  WeightDistribution mixed({{1, 0.5}, {3, 0.5}}, 6);
  for (int trial = 0; trial < 200; ++trial) {
    CodingVector w = draw_coding_vector(6, mixed, coeffs, rng);
    CHECK((w.weight() == 1 || w.weight() == 3));
    CHECK(w.support.size() == w.coeffs.size());
    for (std::size_t i = 1; i < w.support.size(); ++i) CHECK(w.support[i] > w.support[i - 1]);
    for (double c : w.coeffs) CHECK(c != 0.0);
  }

  CHECK_THROWS_AS(draw_coding_vector(2, dense, coeffs, rng), ParameterError);
}

TEST_CASE("weight-1 support position is uniform over the vector") {
  RandomStream rng(2718);
  CoefficientDistribution coeffs;
  WeightDistribution single = WeightDistribution::point_mass(1, 8);
  int counts[8] = {};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    ++counts[draw_coding_vector(8, single, coeffs, rng).support[0]];
  for (int pos = 0; pos < 8; ++pos) {
    double freq = static_cast<double>(counts[pos]) / draws;
    CHECK(freq > 0.115);
    CHECK(freq < 0.135);
  }
}

TEST_CASE("kronecker row on dense and unit vectors") {
  CodingVector p{2, {0, 1}, {1.0, 2.0}};
  CodingVector q{2, {0, 1}, {3.0, 4.0}};
  CodingVector k = kron_row(p, q);
  CHECK(k.length == 4);
  CHECK(k.to_dense() == std::vector<double>{3.0, 4.0, 6.0, 8.0});

  // p = e_1 (length 2), q = e_0 (length 2): single entry at flat index 1*2+0.
  CodingVector unit = kron_row(unit_vector(2, 1), unit_vector(2, 0));
  CHECK(unit.support == std::vector<int>{2});
  CHECK(unit.coeffs == std::vector<double>{1.0});
}

TEST_CASE("kronecker row matches the dense outer product") {
  RandomStream rng(31);
  CoefficientDistribution coeffs;
  WeightDistribution pw({{1, 0.3}, {2, 0.4}, {3, 0.3}}, 3);
  WeightDistribution qw({{1, 0.5}, {4, 0.5}}, 4);
  for (int trial = 0; trial < 100; ++trial) {
    CodingVector p = draw_coding_vector(3, pw, coeffs, rng);
    CodingVector q = draw_coding_vector(4, qw, coeffs, rng);
    CodingVector k = kron_row(p, q);
    CHECK(k.weight() == p.weight() * q.weight());

    std::vector<double> pd = p.to_dense(), qd = q.to_dense();
    std::vector<double> expect;
    for (double pv : pd)
      for (double qv : qd) expect.push_back(pv * qv);
    CHECK(k.to_dense() == expect);
  }
}

TEST_CASE("generator rows are the kronecker products of the node vectors") {
  SystemConfig cfg = small_config(2, 3, 8, 2, 1);
  cfg.worker_udist = WeightDistribution({{1, 0.5}, {2, 0.5}}, 2);
  cfg.worker_vdist = WeightDistribution({{1, 0.4}, {3, 0.6}}, 3);
  cfg.master_udist = WeightDistribution::point_mass(2, 2);
  cfg.master_vdist = WeightDistribution::point_mass(3, 3);
  cfg.validate();

  RandomStream rng(5150);
  std::vector<int> survivors = {0, 2, 3, 5, 6, 7};
  CodeRealization real = draw_realization(cfg, rng);
  GeneratorMatrix gen = assemble_generator(cfg, real, survivors);

  REQUIRE(gen.g.rows() == 7);  // 6 survivors + 1 extra
  REQUIRE(gen.g.cols() == 6);
  CHECK(gen.node_ids == std::vector<int>{0, 2, 3, 5, 6, 7, 8});

  for (int row = 0; row < gen.g.rows(); ++row) {
    std::vector<double> p = gen.p_rows[row].to_dense();
    std::vector<double> q = gen.q_rows[row].to_dense();
    long nnz = 0;
    for (int i = 0; i < cfg.m; ++i)
      for (int j = 0; j < cfg.n; ++j) {
        CHECK(gen.g(row, i * cfg.n + j) == p[i] * q[j]);
        if (p[i] * q[j] != 0.0) ++nnz;
      }
    CHECK(nnz == static_cast<long>(gen.p_rows[row].weight()) * gen.q_rows[row].weight());
  }
}

TEST_CASE("survivor lists are validated") {
  SystemConfig cfg = small_config(2, 2, 6, 2);
  RandomStream rng(1);
  CodeRealization real = draw_realization(cfg, rng);

  CHECK_THROWS_AS(assemble_generator(cfg, real, {0, 1, 2}), ParameterError);        // too few
  CHECK_THROWS_AS(assemble_generator(cfg, real, {0, 1, 2, 3, 4}), ParameterError);  // too many
  CHECK_THROWS_AS(assemble_generator(cfg, real, {0, 1, 2, 6}), ParameterError);     // out of range
  CHECK_THROWS_AS(assemble_generator(cfg, real, {0, 2, 1, 3}), ParameterError);     // not ascending
  CHECK_THROWS_AS(assemble_generator(cfg, real, {0, 1, 1, 3}), ParameterError);     // duplicate
  CHECK_NOTHROW(assemble_generator(cfg, real, {0, 1, 2, 3}));
}

TEST_CASE("realization does not depend on which workers straggle") {
  SystemConfig cfg = small_config(2, 2, 6, 2);
  cfg.worker_udist = WeightDistribution({{1, 0.5}, {2, 0.5}}, 2);
  cfg.validate();

  RandomStream rng_a(4242), rng_b(4242);
  GeneratorMatrix a = build_generator(cfg, {0, 1, 2, 3}, rng_a);
  GeneratorMatrix b = build_generator(cfg, {2, 3, 4, 5}, rng_b);

  // Nodes 2 and 3 survive in both runs and must carry identical rows.
  for (int node : {2, 3}) {
    int row_a = -1, row_b = -1;
    for (int i = 0; i < 4; ++i) {
      if (a.node_ids[i] == node) row_a = i;
      if (b.node_ids[i] == node) row_b = i;
    }
    REQUIRE(row_a >= 0);
    REQUIRE(row_b >= 0);
    CHECK(a.p_rows[row_a] == b.p_rows[row_b]);
    CHECK(a.q_rows[row_a] == b.q_rows[row_b]);
    for (int c = 0; c < 4; ++c) CHECK(a.g(row_a, c) == b.g(row_b, c));
  }
}

TEST_CASE("empirical mean drawn weight tracks the distribution mean") {
  RandomStream rng(909);
  CoefficientDistribution coeffs;
  WeightDistribution w({{1, 0.3}, {2, 0.7}}, 2);
  const int draws = 20000;
  long total = 0;
  for (int i = 0; i < draws; ++i) total += draw_coding_vector(2, w, coeffs, rng).weight();
  double mean = static_cast<double>(total) / draws;
  double sigma = std::sqrt(0.3 * 0.7 / draws);  // weight is 1 + Bernoulli(0.7)
  CHECK(std::abs(mean - 1.7) <= 4.0 * sigma);
}

TEST_CASE("column partition splits and reassembles exactly") {
  RandomStream rng(12);
  DenseMatrix x = random_matrix(3, 6, rng);

  std::vector<DenseMatrix> one = partition_columns(x, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == x);

  std::vector<DenseMatrix> three = partition_columns(x, 3);
  REQUIRE(three.size() == 3);
  for (int p = 0; p < 3; ++p) {
    REQUIRE(three[p].cols() == 2);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 2; ++c) CHECK(three[p](r, c) == x(r, p * 2 + c));
  }

  std::vector<DenseMatrix> halves = partition_columns(DenseMatrix::identity(4), 2);
  CHECK(halves[0](0, 0) == 1.0);
  CHECK(halves[0](1, 1) == 1.0);
  CHECK(halves[0].nnz() == 2);
  CHECK(halves[1](2, 0) == 1.0);
  CHECK(halves[1](3, 1) == 1.0);

  CHECK_THROWS_AS(partition_columns(x, 4), ShapeError);
  CHECK_THROWS_AS(partition_columns(x, 0), ShapeError);
}

TEST_CASE("encode_block combines exactly the supported blocks") {
  RandomStream rng(21);
  std::vector<DenseMatrix> blocks;
  for (int i = 0; i < 3; ++i) blocks.push_back(random_matrix(4, 2, rng));

  // Unit vector picks out one block bit-for-bit.
  for (int i = 0; i < 3; ++i) CHECK(encode_block(blocks, unit_vector(3, i)) == blocks[i]);

  CodingVector both{3, {0, 2}, {1.0, 1.0}};
  CHECK(encode_block(blocks, both) == blocks[0] + blocks[2]);

  // Dense vector against an independent per-entry accumulation.
  CodingVector dense{3, {0, 1, 2}, {0.5, -1.25, 2.0}};
  DenseMatrix got = encode_block(blocks, dense);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      double expect = 0.0;
      for (int i = 0; i < 3; ++i) expect += dense.coeffs[i] * blocks[i](r, c);
      CHECK(got(r, c) == expect);
    }

  CHECK_THROWS_AS(encode_block(blocks, unit_vector(2, 0)), ShapeError);
  CHECK_THROWS_AS(encode_block({}, unit_vector(0, 0)), ShapeError);
  std::vector<DenseMatrix> ragged = {DenseMatrix(2, 2), DenseMatrix(3, 2)};
  CHECK_THROWS_AS(encode_block(ragged, CodingVector{2, {0}, {1.0}}), ShapeError);
}

TEST_CASE("decode inverts a single scaled worker") {
  SystemConfig cfg = small_config(1, 1, 1);
  RandomStream rng(61);
  DenseMatrix a = random_matrix(cfg.r, cfg.s, rng);
  DenseMatrix b = random_matrix(cfg.r, cfg.t, rng);
  DenseMatrix exact = matmul_transpose_left(a, b);

  GeneratorMatrix gen = build_generator(cfg, {0}, rng);
  double coeff = gen.g(0, 0);
  REQUIRE(coeff != 0.0);
  DenseMatrix c_hat = decode(gen, {coeff * exact}, cfg);
  double err = frobenius_norm(c_hat - exact) / frobenius_norm(exact);
  CHECK(err < 1e-14);
}

TEST_CASE("decode recovers the product through the full pipeline") {
  SystemConfig cfg = small_config(2, 2, 6, 2);
  cfg.coeff_dist = CoefficientDistribution(CoefficientDistribution::Kind::standard_normal);
  cfg.validate();
  RandomStream rng(8088);
  DenseMatrix a = random_matrix(cfg.r, cfg.s, rng);
  DenseMatrix b = random_matrix(cfg.r, cfg.t, rng);
  DenseMatrix exact = matmul_transpose_left(a, b);

  std::vector<DenseMatrix> a_blocks = partition_columns(a, cfg.m);
  std::vector<DenseMatrix> b_blocks = partition_columns(b, cfg.n);
  GeneratorMatrix gen = build_generator(cfg, {0, 2, 3, 5}, rng);

  std::vector<DenseMatrix> results;
  for (int l = 0; l < gen.g.rows(); ++l) {
    DenseMatrix coded_a = encode_block(a_blocks, gen.p_rows[l]);
    DenseMatrix coded_b = encode_block(b_blocks, gen.q_rows[l]);
    results.push_back(matmul_transpose_left(coded_a, coded_b));
  }

  DenseMatrix c_hat = decode(gen, results, cfg);
  double err = frobenius_norm(c_hat - exact) / frobenius_norm(exact);
  CHECK(err < 1e-10);
}

TEST_CASE("decode with the identity code reproduces the blocks bit-for-bit") {
  SystemConfig cfg = small_config(2, 2, 4);
  RandomStream rng(777);
  DenseMatrix a = random_matrix(cfg.r, cfg.s, rng);
  DenseMatrix b = random_matrix(cfg.r, cfg.t, rng);
  std::vector<DenseMatrix> a_blocks = partition_columns(a, cfg.m);
  std::vector<DenseMatrix> b_blocks = partition_columns(b, cfg.n);

  CodeRealization real;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      real.p_rows.push_back(unit_vector(2, i));
      real.q_rows.push_back(unit_vector(2, j));
    }
  GeneratorMatrix gen = assemble_generator(cfg, real, {0, 1, 2, 3});
  CHECK(gen.g == DenseMatrix::identity(4));

  std::vector<DenseMatrix> results;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      results.push_back(matmul_transpose_left(a_blocks[i], b_blocks[j]));

  DenseMatrix c_hat = decode(gen, results, cfg);
  const int br = cfg.s / cfg.m, bc = cfg.t / cfg.n;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int aa = 0; aa < br; ++aa)
        for (int bb = 0; bb < bc; ++bb)
          CHECK(c_hat(i * br + aa, j * bc + bb) == results[i * 2 + j](aa, bb));
}

TEST_CASE("decode reports rank-deficient generators") {
  SystemConfig cfg = small_config(2, 1, 2);
  CodeRealization real;
  // Both workers cover only block 0, so column 1 of the generator is zero.
  real.p_rows = {unit_vector(2, 0), unit_vector(2, 0)};
  real.q_rows = {unit_vector(1, 0), unit_vector(1, 0)};
  GeneratorMatrix gen = assemble_generator(cfg, real, {0, 1});

  std::vector<DenseMatrix> results(2, DenseMatrix(cfg.s / cfg.m, cfg.t / cfg.n));
  try {
    decode(gen, results, cfg);
    FAIL("expected DecodeFailure");
  } catch (const DecodeFailure& e) {
    CHECK(e.rank() == 1);
  }
}

TEST_CASE("decode honors an absolute rank tolerance") {
  SystemConfig cfg = small_config(1, 1, 1);
  RandomStream rng(62);
  GeneratorMatrix gen = build_generator(cfg, {0}, rng);
  std::vector<DenseMatrix> results = {DenseMatrix(cfg.s, cfg.t)};
  CHECK_NOTHROW(decode(gen, results, cfg));
  CHECK_THROWS_AS(decode(gen, results, cfg, RankTolerance::absolute_cutoff(1e6)), DecodeFailure);
}

TEST_CASE("decode validates result shapes") {
  SystemConfig cfg = small_config(2, 2, 4);
  RandomStream rng(63);
  GeneratorMatrix gen = build_generator(cfg, {0, 1, 2, 3}, rng);

  std::vector<DenseMatrix> too_few(3, DenseMatrix(cfg.s / cfg.m, cfg.t / cfg.n));
  CHECK_THROWS_AS(decode(gen, too_few, cfg), ShapeError);

  std::vector<DenseMatrix> wrong_shape(4, DenseMatrix(1, 1));
  CHECK_THROWS_AS(decode(gen, wrong_shape, cfg), ShapeError);
}
