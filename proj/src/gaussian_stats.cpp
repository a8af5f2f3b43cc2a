#include "streamhar/gaussian_stats.hpp"

#include <cmath>
#include <numbers>

#include "streamhar/error.hpp"

namespace streamhar {

void GaussianEstimator::add(double x, double w) {
  if (w <= 0) return;
  const double new_weight = weight + w;
  const double delta = x - mean;
  mean += (w / new_weight) * delta;
  m2 += w * delta * (x - mean);
  weight = new_weight;
  min = std::min(min, x);
  max = std::max(max, x);
}

double GaussianEstimator::cdf(double x) const {
  if (weight <= 0) return 0.5;
  const double var = variance();
  if (x < min) return 0.0;
  if (x >= max) return 1.0;
  if (var <= 0) return x >= mean ? 1.0 : 0.0;
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> normalize_log(std::span<const double> log_scores) {
  std::vector<double> out(log_scores.size(), 0.0);
  double top = -std::numeric_limits<double>::infinity();
  for (double v : log_scores) top = std::max(top, v);
  if (!std::isfinite(top)) return out;
  double sum = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::isfinite(log_scores[i]) ? std::exp(log_scores[i] - top) : 0.0;
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

void GaussianClassStats::ensure_class(LabelId y) {
  if (y < 0) throw Error(ErrorCode::InvalidArgument, "negative class id");
  const auto need = static_cast<std::size_t>(y) + 1;
  if (class_weight_.size() < need) {
    class_weight_.resize(need, 0.0);
    est_.resize(need, std::vector<GaussianEstimator>(dim_));
  }
}

void GaussianClassStats::add(std::span<const double> x, LabelId y, double weight) {
  if (x.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(dim_) + " values, got " + std::to_string(x.size()));
  ensure_class(y);
  if (weight <= 0) return;
  auto& row = est_[static_cast<std::size_t>(y)];
  for (std::size_t d = 0; d < dim_; ++d) row[d].add(x[d], weight);
  class_weight_[static_cast<std::size_t>(y)] += weight;
  total_weight_ += weight;
}

double GaussianClassStats::class_weight(LabelId y) const {
  if (y < 0 || static_cast<std::size_t>(y) >= class_weight_.size()) return 0.0;
  return class_weight_[static_cast<std::size_t>(y)];
}

const GaussianEstimator& GaussianClassStats::estimator(LabelId y, std::size_t d) const {
  return est_.at(static_cast<std::size_t>(y)).at(d);
}

std::vector<double> GaussianClassStats::log_joint(std::span<const double> x) const {
  if (x.size() != dim_)
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(dim_) + " values, got " + std::to_string(x.size()));
  constexpr double kLog2Pi = 1.8378770664093454836;
  std::vector<double> out(class_weight_.size(), -std::numeric_limits<double>::infinity());
  if (total_weight_ <= 0) return out;
  for (std::size_t c = 0; c < class_weight_.size(); ++c) {
    if (class_weight_[c] <= 0) continue;
    double lp = std::log(class_weight_[c] / total_weight_);
    for (std::size_t d = 0; d < dim_; ++d) {
      const auto& e = est_[c][d];
      const double var = std::max(e.variance(), variance_floor_);
      const double diff = x[d] - e.mean;
      lp -= 0.5 * (kLog2Pi + std::log(var) + diff * diff / var);
    }
    out[c] = lp;
  }
  return out;
}

std::vector<double> GaussianClassStats::posterior(std::span<const double> x) const {
  return normalize_log(log_joint(x));
}

std::optional<LabelId> GaussianClassStats::predict(std::span<const double> x) const {
  if (empty()) return std::nullopt;
  const auto lj = log_joint(x);
  return static_cast<LabelId>(argmax(lj));
}

nlohmann::json GaussianClassStats::to_json() const {
  nlohmann::json j;
  j["dim"] = dim_;
  j["variance_floor"] = variance_floor_;
  j["total_weight"] = total_weight_;
  j["class_weight"] = class_weight_;
  auto& classes = j["estimators"] = nlohmann::json::array();
  for (const auto& row : est_) {
    auto arr = nlohmann::json::array();
    for (const auto& e : row) arr.push_back({e.weight, e.mean, e.m2, e.min, e.max});
    classes.push_back(std::move(arr));
  }
  return j;
}

GaussianClassStats GaussianClassStats::from_json(const nlohmann::json& j) {
  GaussianClassStats s(j.at("dim").get<std::size_t>(), j.at("variance_floor").get<double>());
  s.total_weight_ = j.at("total_weight").get<double>();
  s.class_weight_ = j.at("class_weight").get<std::vector<double>>();
  for (const auto& row : j.at("estimators")) {
    std::vector<GaussianEstimator> r;
    r.reserve(row.size());
    for (const auto& e : row) {
      GaussianEstimator g;
      g.weight = e.at(0).get<double>();
      g.mean = e.at(1).get<double>();
      g.m2 = e.at(2).get<double>();
      // infinities do not survive JSON; unseen extrema come back as null
      g.min = e.at(3).is_null() ? std::numeric_limits<double>::infinity() : e.at(3).get<double>();
      g.max = e.at(4).is_null() ? -std::numeric_limits<double>::infinity() : e.at(4).get<double>();
      r.push_back(g);
    }
    s.est_.push_back(std::move(r));
  }
  if (s.est_.size() != s.class_weight_.size())
    throw Error(ErrorCode::SnapshotFormat, "class weight and estimator tables disagree");
  return s;
}

}  // namespace streamhar
