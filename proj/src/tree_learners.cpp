#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"

namespace streamhar {

IncrementalDecisionTree::IncrementalDecisionTree(const LearnerConfig& config)
    : OnlineClassifier(config.dim), tree_(config.dim, config.tree, config.variance_floor) {}

std::unique_ptr<OnlineClassifier> IncrementalDecisionTree::clone() const {
  return std::make_unique<IncrementalDecisionTree>(*this);
}

void IncrementalDecisionTree::do_learn(std::span<const double> x, LabelId y) { tree_.learn(x, y); }

Prediction IncrementalDecisionTree::do_predict(std::span<const double> x) const {
  return prediction_from_scores(tree_.distribution(x));
}

nlohmann::json IncrementalDecisionTree::save_state() const { return {{"tree", tree_.to_json()}}; }

void IncrementalDecisionTree::load_state(const nlohmann::json& s) {
  tree_ = HoeffdingTree::from_json(s.at("tree"));
}

IncrementalRandomForest::IncrementalRandomForest(const LearnerConfig& config)
    : OnlineClassifier(config.dim), rng_(config.seed) {
  if (config.forest_size == 0) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  std::size_t subset = config.forest_subset;
  if (subset == 0) subset = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(config.dim))));
  subset = std::min(subset, config.dim);

  std::vector<std::size_t> all(config.dim);
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t t = 0; t < config.forest_size; ++t) {
    // partial Fisher-Yates; std::shuffle's draw pattern is library specific
    for (std::size_t i = 0; i < subset; ++i) {
      const auto span = static_cast<std::uint64_t>(all.size() - i);
      const auto j = i + static_cast<std::size_t>(rng_() % span);
      std::swap(all[i], all[j]);
    }
    std::vector<std::size_t> chosen(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(subset));
    std::sort(chosen.begin(), chosen.end());
    subsets_.push_back(std::move(chosen));
    trees_.emplace_back(subset, config.tree, config.variance_floor);
  }
}

std::unique_ptr<OnlineClassifier> IncrementalRandomForest::clone() const {
  return std::make_unique<IncrementalRandomForest>(*this);
}

std::vector<double> IncrementalRandomForest::project(std::span<const double> x, std::size_t tree) const {
  std::vector<double> out;
  out.reserve(subsets_[tree].size());
  for (std::size_t d : subsets_[tree]) out.push_back(x[d]);
  return out;
}

void IncrementalRandomForest::do_learn(std::span<const double> x, LabelId y) {
  const auto yi = static_cast<std::size_t>(y);
  if (class_weight_.size() <= yi) class_weight_.resize(yi + 1, 0.0);
  class_weight_[yi] += 1.0;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto copies = online_bagging_sample(1.0, rng_);
    if (copies > 0) trees_[t].learn(project(x, t), y, static_cast<double>(copies));
  }
}

Prediction IncrementalRandomForest::do_predict(std::span<const double> x) const {
  std::vector<double> votes(class_weight_.size(), 0.0);
  double mass = 0;
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (!trees_[t].trained()) continue;
    const auto dist = trees_[t].distribution(project(x, t));
    if (dist.size() > votes.size()) votes.resize(dist.size(), 0.0);
    for (std::size_t c = 0; c < dist.size(); ++c) votes[c] += dist[c];
    mass += std::accumulate(dist.begin(), dist.end(), 0.0);
  }
  // no tree has been sampled yet: fall back to the class prior
  if (mass <= 0) votes = class_weight_;
  const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
  for (double& v : votes) v /= total;
  return prediction_from_scores(votes);
}

nlohmann::json IncrementalRandomForest::save_state() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"rng", rng_state(rng_)}, {"subsets", subsets_}, {"class_weight", class_weight_},
          {"trees", std::move(trees)}};
}

void IncrementalRandomForest::load_state(const nlohmann::json& s) {
  restore_rng(rng_, s.at("rng").get<std::string>());
  subsets_ = s.at("subsets").get<std::vector<std::vector<std::size_t>>>();
  class_weight_ = s.at("class_weight").get<std::vector<double>>();
  trees_.clear();
  for (const auto& t : s.at("trees")) trees_.push_back(HoeffdingTree::from_json(t));
  if (trees_.size() != subsets_.size()) throw Error(ErrorCode::SnapshotFormat, "forest trees and subsets disagree");
}

}  // namespace streamhar
