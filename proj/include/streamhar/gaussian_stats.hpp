#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "streamhar/labels.hpp"

namespace streamhar {

// Weighted Welford accumulator (West's update) with observed extrema.
struct GaussianEstimator {
  double weight = 0;
  double mean = 0;
  double m2 = 0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  void add(double x, double w = 1.0);
  double variance() const noexcept { return weight > 0 ? m2 / weight : 0.0; }
  // P(X <= x) under the fitted normal; a point mass steps at the mean.
  double cdf(double x) const;
};

inline constexpr double kDefaultVarianceFloor = 1e-9;

// Per-class prior weight and per-dimension Gaussian estimators; the model
// behind naive Bayes in every learner that needs one.
class GaussianClassStats {
 public:
  GaussianClassStats() = default;
  explicit GaussianClassStats(std::size_t dim, double variance_floor = kDefaultVarianceFloor)
      : dim_(dim), variance_floor_(variance_floor) {}

  void add(std::span<const double> x, LabelId y, double weight = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t n_classes() const noexcept { return class_weight_.size(); }
  double class_weight(LabelId y) const;
  double total_weight() const noexcept { return total_weight_; }
  bool empty() const noexcept { return total_weight_ <= 0; }
  const GaussianEstimator& estimator(LabelId y, std::size_t d) const;

  // log P(y) + sum_d log N(x_d; mu, max(var, floor)); -inf for unseen classes.
  std::vector<double> log_joint(std::span<const double> x) const;
  // Normalised posterior over class ids 0..n_classes-1.
  std::vector<double> posterior(std::span<const double> x) const;
  // Argmax of the posterior, smallest id on ties; nullopt when empty.
  std::optional<LabelId> predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static GaussianClassStats from_json(const nlohmann::json& j);

 private:
  void ensure_class(LabelId y);

  std::size_t dim_ = 0;
  double variance_floor_ = kDefaultVarianceFloor;
  double total_weight_ = 0;
  std::vector<double> class_weight_;
  std::vector<std::vector<GaussianEstimator>> est_;  // [class][dim]
};

// Index of the largest value, smallest index on ties. Requires non-empty input.
std::size_t argmax(std::span<const double> values);

// Softmax of log scores; entries at -inf map to 0.
std::vector<double> normalize_log(std::span<const double> log_scores);

}  // namespace streamhar
