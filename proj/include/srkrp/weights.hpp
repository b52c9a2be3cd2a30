#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "srkrp/error.hpp"
#include "srkrp/format.hpp"
#include "srkrp/rng.hpp"

namespace srkrp {

// Discrete distribution over coding-vector weights 1..max_weight, i.e. over
// the number of nonzero coefficients a coding vector gets. Immutable after
// construction and safe to share across threads.
class WeightDistribution {
 public:
  // Defaults to the point mass at weight 1 over a length-1 vector.
  WeightDistribution() : WeightDistribution({{1, 1.0}}, 1) {}

  // Probabilities summing to 1 within 1e-9 are renormalized; anything further
  // off is rejected as a genuine error rather than config-file rounding.
  WeightDistribution(const std::map<int, double>& probs, int max_weight)
      : max_weight_(max_weight) {
    if (max_weight < 1) throw ParameterError("weight distribution: max_weight must be >= 1");
    double sum = 0.0;
    for (const auto& [w, p] : probs) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw ParameterError("weight distribution: probability for weight " + std::to_string(w) +
                             " must be finite and nonnegative");
      if (p == 0.0) continue;
      if (w < 1 || w > max_weight)
        throw ParameterError("weight distribution: weight " + std::to_string(w) +
                             " outside [1, " + std::to_string(max_weight) + "]");
      probs_.emplace_back(w, p);
      sum += p;
    }
    if (probs_.empty()) throw ParameterError("weight distribution: no positive-probability weight");
    if (std::abs(sum - 1.0) > 1e-9)
      throw ParameterError("weight distribution: probabilities sum to " + std::to_string(sum) +
                           ", not 1 (tolerance 1e-9)");
    for (auto& [w, p] : probs_) p /= sum;
  }

  static WeightDistribution point_mass(int weight, int max_weight) {
    return WeightDistribution({{weight, 1.0}}, max_weight);
  }

  int max_weight() const { return max_weight_; }

  // Entries ascending by weight, all probabilities > 0.
  const std::vector<std::pair<int, double>>& probs() const { return probs_; }

  // Average weight, summed in ascending weight order.
  double mean() const {
    double acc = 0.0;
    for (const auto& [w, p] : probs_) acc += p * static_cast<double>(w);
    return acc;
  }

  // Inverse-CDF on a single uniform draw, weights ascending.
  int sample(RandomStream& rng) const {
    double u = rng.uniform01();
    double cum = 0.0;
    for (const auto& [w, p] : probs_) {
      cum += p;
      if (u <= cum) return w;
    }
    return probs_.back().first;
  }

  bool operator==(const WeightDistribution&) const = default;

 private:
  std::vector<std::pair<int, double>> probs_;
  int max_weight_;
};

// The two-point (or point-mass) distribution with a prescribed mean: a point
// mass at w_target when it is integral, otherwise the mixture on
// {floor(w_target), ceil(w_target)} whose mean is exactly w_target.
inline WeightDistribution simplest_distribution(double w_target, int max_weight) {
  if (!(w_target >= 1.0))
    throw ParameterError("simplest_distribution: target mean " + std::to_string(w_target) +
                         " below lower bound 1");
  if (!(w_target <= static_cast<double>(max_weight)))
    throw ParameterError("simplest_distribution: target mean " + std::to_string(w_target) +
                         " above max weight " + std::to_string(max_weight));
  double fl = std::floor(w_target);
  if (fl == w_target)
    return WeightDistribution::point_mass(static_cast<int>(fl), max_weight);
  int lo = static_cast<int>(fl);
  double lambda = (fl + 1.0) - w_target;  // (ceil - w) / (ceil - floor), denominator 1
  return WeightDistribution({{lo, lambda}, {lo + 1, 1.0 - lambda}}, max_weight);
}

// Distribution of the nonzero coefficient values. Any absolutely continuous
// law works; a draw is never exactly zero.
class CoefficientDistribution {
 public:
  enum class Kind { uniform01, standard_normal };

  explicit CoefficientDistribution(Kind kind = Kind::uniform01) : kind_(kind) {}

  Kind kind() const { return kind_; }

  double sample(RandomStream& rng) const {
    for (;;) {
      double v = kind_ == Kind::uniform01 ? rng.uniform01() : rng.standard_normal();
      if (v != 0.0) return v;
    }
  }

  const char* name() const {
    return kind_ == Kind::uniform01 ? "uniform01" : "standard_normal";
  }

  static CoefficientDistribution parse(const std::string& text) {
    if (text == "uniform01") return CoefficientDistribution(Kind::uniform01);
    if (text == "standard_normal") return CoefficientDistribution(Kind::standard_normal);
    throw ConfigError("unknown coefficient distribution '" + text +
                      "' (expected uniform01 or standard_normal)");
  }

  bool operator==(const CoefficientDistribution&) const = default;

 private:
  Kind kind_;
};

// A weight distribution as written in configs, before the side length (m or n)
// is known: "dense", "simplest(<mean>)", or an explicit "w:p,w:p,..." list.
struct WeightSpec {
  enum class Kind { dense, simplest, explicit_list };

  Kind kind = Kind::dense;
  double simplest_target = 0.0;
  std::map<int, double> entries;

  static WeightSpec dense() { return WeightSpec{}; }

  static WeightSpec simplest(double target) {
    WeightSpec s;
    s.kind = Kind::simplest;
    s.simplest_target = target;
    return s;
  }

  static WeightSpec explicit_list(std::map<int, double> entries) {
    WeightSpec s;
    s.kind = Kind::explicit_list;
    s.entries = std::move(entries);
    return s;
  }

  static WeightSpec parse(const std::string& text) {
    if (text == "dense") return dense();
    if (text.starts_with("simplest(") && text.ends_with(")")) {
      std::string inner = text.substr(9, text.size() - 10);
      try {
        std::size_t used = 0;
        double target = std::stod(inner, &used);
        if (used != inner.size()) throw std::invalid_argument(inner);
        return simplest(target);
      } catch (const std::exception&) {
        throw ConfigError("bad weight distribution '" + text + "': cannot parse mean");
      }
    }
    std::map<int, double> entries;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos)
        throw ConfigError("bad weight distribution '" + text + "': expected weight:prob pairs");
      try {
        int w = std::stoi(item.substr(0, colon));
        double p = std::stod(item.substr(colon + 1));
        entries[w] = p;
      } catch (const std::exception&) {
        throw ConfigError("bad weight distribution '" + text + "': cannot parse '" + item + "'");
      }
    }
    if (entries.empty()) throw ConfigError("bad weight distribution '" + text + "'");
    return explicit_list(std::move(entries));
  }

  WeightDistribution resolve(int max_weight) const {
    switch (kind) {
      case Kind::dense:
        return WeightDistribution::point_mass(max_weight, max_weight);
      case Kind::simplest:
        return simplest_distribution(simplest_target, max_weight);
      case Kind::explicit_list:
        return WeightDistribution(entries, max_weight);
    }
    throw ParameterError("unreachable weight spec kind");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::dense:
        return "dense";
      case Kind::simplest:
        return "simplest(" + detail::format_double(simplest_target) + ")";
      case Kind::explicit_list: {
        std::string out;
        for (const auto& [w, p] : entries) {
          if (!out.empty()) out += ',';
          out += std::to_string(w) + ":" + detail::format_double(p);
        }
        return out;
      }
    }
    return "";
  }
};

// Log-friendly rendering of a resolved distribution, same syntax WeightSpec parses.
inline std::string to_string(const WeightDistribution& dist) {
  std::string out;
  for (const auto& [w, p] : dist.probs()) {
    if (!out.empty()) out += ',';
    out += std::to_string(w) + ":" + detail::format_double(p);
  }
  return out;
}

}  // namespace srkrp
