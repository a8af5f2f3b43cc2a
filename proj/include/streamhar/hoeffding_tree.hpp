#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "streamhar/gaussian_stats.hpp"
#include "streamhar/learners.hpp"

namespace streamhar {

struct SplitCandidate {
  int attribute = -1;  // -1 is the null split
  double threshold = 0;
  double merit = 0;
  std::vector<double> left_dist;
  std::vector<double> right_dist;
};

// Very fast decision tree over numeric attributes. Each leaf keeps per-class
// Gaussian estimators per attribute; split candidates are evaluated at
// evenly spaced thresholds between the observed extrema using the estimated
// class mass on each side, scored by information gain in bits.
class HoeffdingTree {
 public:
  HoeffdingTree() = default;
  HoeffdingTree(std::size_t dim, HoeffdingConfig config, double variance_floor = kDefaultVarianceFloor);

  void learn(std::span<const double> x, LabelId y, double weight = 1.0);
  // Class distribution at the leaf reached by x, summing to 1 unless empty.
  std::vector<double> distribution(std::span<const double> x) const;
  bool trained() const noexcept { return total_weight_ > 0; }

  std::size_t n_nodes() const noexcept { return nodes_.size(); }
  std::size_t n_leaves() const noexcept;
  std::size_t depth() const noexcept;
  std::size_t dim() const noexcept { return dim_; }

  // Best and second-best candidates at the leaf reached by x; exposed for tests.
  std::vector<SplitCandidate> rank_splits(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static HoeffdingTree from_json(const nlohmann::json& j);

 private:
  struct Node {
    int attribute = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    int depth = 0;
    std::vector<double> class_weight;
    GaussianClassStats stats;
    double weight_at_last_attempt = 0;
    double mc_correct = 0;
    double nb_correct = 0;

    bool is_leaf() const noexcept { return attribute < 0; }
    double weight() const noexcept;
  };

  int leaf_for(std::span<const double> x) const;
  std::vector<double> leaf_distribution(const Node& leaf, std::span<const double> x) const;
  std::vector<SplitCandidate> evaluate_splits(const Node& leaf) const;
  void attempt_split(int leaf_index);

  std::size_t dim_ = 0;
  HoeffdingConfig config_;
  double variance_floor_ = kDefaultVarianceFloor;
  double total_weight_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace streamhar
