#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "srkrp/rng.hpp"
#include "srkrp/weights.hpp"

using namespace srkrp;

TEST_CASE("random stream is deterministic per seed") {
  RandomStream a(12345), b(12345), c(54321);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    std::uint64_t va = a.next_u64();
    if (va != b.next_u64()) all_equal = false;
    if (va != c.next_u64()) any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("uniform01 stays strictly inside (0,1)") {
  RandomStream rng(7);
  for (int i = 0; i < 100000; ++i) {
    double v = rng.uniform01();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
}

TEST_CASE("standard normal sample mean is near zero") {
  RandomStream rng(11);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += rng.standard_normal();
  CHECK(std::abs(sum / 100000.0) < 0.02);  // 3 sigma is about 0.0095
}

TEST_CASE("derived seeds differ across salts") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t salt = 0; salt < 1000; ++salt) seen.insert(derive_seed(42, salt));
  CHECK(seen.size() == 1000);
}

TEST_CASE("uniform_int rejects bad bounds and stays in range") {
  RandomStream rng(3);
  CHECK_THROWS_AS(rng.uniform_int(0), ParameterError);
  for (int i = 0; i < 1000; ++i) {
    int v = rng.uniform_int(7);
    REQUIRE(v >= 0);
    REQUIRE(v < 7);
  }
}

TEST_CASE("mean of weight distributions") {
  CHECK(WeightDistribution({{8, 1.0}}, 8).mean() == 8.0);
  CHECK(WeightDistribution({{2, 0.5}, {4, 0.5}}, 8).mean() == 3.0);
  CHECK_THAT(WeightDistribution({{3, 0.8377}, {4, 0.1623}}, 8).mean(),
             Catch::Matchers::WithinAbs(3.1623, 1e-4));
}

TEST_CASE("weight distribution construction validates") {
  CHECK_THROWS_AS(WeightDistribution({{0, 1.0}}, 8), ParameterError);   // weight below 1
  CHECK_THROWS_AS(WeightDistribution({{9, 1.0}}, 8), ParameterError);   // above max
  CHECK_THROWS_AS(WeightDistribution({{2, -0.5}, {3, 1.5}}, 8), ParameterError);
  CHECK_THROWS_AS(WeightDistribution({{2, 0.4}, {3, 0.4}}, 8), ParameterError);  // sums to 0.8
  CHECK_THROWS_AS(WeightDistribution({}, 8), ParameterError);

  // Config-file rounding within 1e-9 is renormalized rather than rejected.
  WeightDistribution d({{2, 0.5}, {3, 0.5 + 4e-10}}, 8);
  double sum = 0;
  for (auto& [w, p] : d.probs()) sum += p;
  CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("simplest distribution hits its target mean") {
  WeightDistribution three = simplest_distribution(3.0, 8);
  CHECK(three.probs().size() == 1);
  CHECK(three.probs().front() == std::pair<int, double>{3, 1.0});

  WeightDistribution one = simplest_distribution(1.0, 8);
  CHECK(one.probs().front() == std::pair<int, double>{1, 1.0});

  // lambda = 4 - sqrt(10), checked against a separately computed value.
  WeightDistribution root10 = simplest_distribution(std::sqrt(10.0), 8);
  REQUIRE(root10.probs().size() == 2);
  CHECK(root10.probs()[0].first == 3);
  CHECK(root10.probs()[1].first == 4);
  CHECK_THAT(root10.probs()[0].second, Catch::Matchers::WithinAbs(0.8377, 1e-4));
  CHECK_THAT(root10.probs()[0].second,
             Catch::Matchers::WithinAbs(0.837722339831620668, 1e-15));
  CHECK_THAT(root10.mean(), Catch::Matchers::WithinAbs(std::sqrt(10.0), 1e-12));
}

TEST_CASE("simplest distribution rejects out-of-range targets") {
  CHECK_THROWS_WITH(simplest_distribution(0.5, 8),
                    Catch::Matchers::ContainsSubstring("below lower bound 1"));
  CHECK_THROWS_WITH(simplest_distribution(9.0, 8),
                    Catch::Matchers::ContainsSubstring("above max weight"));
}

TEST_CASE("simplest distribution properties on a target grid") {
  for (int step = 0; step <= 60; ++step) {
    double target = 1.0 + step * (7.0 / 60.0);
    WeightDistribution d = simplest_distribution(target, 8);
    CHECK_THAT(d.mean(), Catch::Matchers::WithinAbs(target, 1e-12));
    bool integral = std::floor(target) == target;
    CHECK(d.probs().size() == (integral ? 1u : 2u));
    // Rebuilding from the realized mean reproduces the distribution.
    CHECK(simplest_distribution(d.mean(), 8) == d);
  }
}

TEST_CASE("weight sampling matches the probabilities") {
  WeightDistribution d({{2, 0.5}, {4, 0.5}}, 8);
  RandomStream rng(2024);
  int twos = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i)
    if (d.sample(rng) == 2) ++twos;
  double freq = static_cast<double>(twos) / draws;
  CHECK(freq > 0.49);
  CHECK(freq < 0.51);
}

TEST_CASE("weight sampling frequency within 4 sigma for a skewed distribution") {
  WeightDistribution d({{1, 0.1}, {3, 0.65}, {7, 0.25}}, 8);
  RandomStream rng(99);
  std::map<int, int> counts;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++counts[d.sample(rng)];
  for (auto& [w, p] : d.probs()) {
    double freq = static_cast<double>(counts[w]) / draws;
    double bound = 4.0 * std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(freq - p) <= bound);
  }
}

TEST_CASE("point masses always return their weight") {
  RandomStream rng(5);
  WeightDistribution eight = WeightDistribution::point_mass(8, 8);
  WeightDistribution one = WeightDistribution::point_mass(1, 8);
  for (int i = 0; i < 100; ++i) {
    CHECK(eight.sample(rng) == 8);
    CHECK(one.sample(rng) == 1);
  }
}

TEST_CASE("coefficient draws are never zero and reproducible") {
  CoefficientDistribution uniform(CoefficientDistribution::Kind::uniform01);
  CoefficientDistribution normal(CoefficientDistribution::Kind::standard_normal);
  RandomStream a(31), b(31);
  for (int i = 0; i < 10000; ++i) {
    double u = uniform.sample(a);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    CHECK(u == uniform.sample(b));
  }
  RandomStream c(32);
  for (int i = 0; i < 10000; ++i) CHECK(normal.sample(c) != 0.0);
}

TEST_CASE("coefficient distribution parsing") {
  CHECK(CoefficientDistribution::parse("uniform01").kind() ==
        CoefficientDistribution::Kind::uniform01);
  CHECK(CoefficientDistribution::parse("standard_normal").kind() ==
        CoefficientDistribution::Kind::standard_normal);
  CHECK_THROWS_AS(CoefficientDistribution::parse("cauchy"), ConfigError);
}

TEST_CASE("weight spec strings resolve to distributions") {
  CHECK(WeightSpec::parse("dense").resolve(8) == WeightDistribution::point_mass(8, 8));
  CHECK(WeightSpec::parse("simplest(3)").resolve(8) == simplest_distribution(3.0, 8));
  CHECK(WeightSpec::parse("2:0.5,4:0.5").resolve(8) ==
        WeightDistribution({{2, 0.5}, {4, 0.5}}, 8));
  CHECK_THROWS_AS(WeightSpec::parse("simplest(abc)"), ConfigError);
  CHECK_THROWS_AS(WeightSpec::parse("2=0.5"), ConfigError);
  CHECK_THROWS_AS(WeightSpec::parse(""), ConfigError);
}

TEST_CASE("weight spec round-trips through to_string") {
  for (const char* text : {"dense", "simplest(3.1622776601683795)", "2:0.5,4:0.5"}) {
    WeightSpec spec = WeightSpec::parse(text);
    CHECK(WeightSpec::parse(spec.to_string()).resolve(8) == spec.resolve(8));
  }
  // Rendered distributions parse back to the same distribution.
  WeightDistribution d = simplest_distribution(std::sqrt(10.0), 8);
  CHECK(WeightSpec::parse(to_string(d)).resolve(8) == d);
}
