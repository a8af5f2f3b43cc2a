#include <algorithm>
#include <cmath>
#include <numeric>

#include "streamhar/classifiers.hpp"
#include "streamhar/error.hpp"

namespace streamhar {

namespace {
constexpr double kMinStageError = 1e-6;
}

double BoostStageState::error() const noexcept {
  const double total = lambda_correct + lambda_wrong;
  return total > 0 ? lambda_wrong / total : 0.5;
}

double BoostStageState::vote_weight() const noexcept {
  const double e = std::clamp(error(), kMinStageError, 0.5);
  return std::log((1.0 - e) / e);
}

IncrementalAdaBoost::IncrementalAdaBoost(const LearnerConfig& config)
    : OnlineClassifier(config.dim), rng_(config.seed) {
  if (config.boost_stages == 0) throw Error(ErrorCode::InvalidArgument, "boosting needs at least one stage");
  stages_.resize(config.boost_stages);
  for (auto& s : stages_) s.model = GaussianClassStats(config.dim, config.variance_floor);
}

std::unique_ptr<OnlineClassifier> IncrementalAdaBoost::clone() const {
  return std::make_unique<IncrementalAdaBoost>(*this);
}

void IncrementalAdaBoost::do_learn(std::span<const double> x, LabelId y) {
  const auto yi = static_cast<std::size_t>(y);
  if (class_weight_.size() <= yi) class_weight_.resize(yi + 1, 0.0);
  class_weight_[yi] += 1.0;
  oza_boost_update(stages_, x, y, [this](double lambda) { return online_bagging_sample(lambda, rng_); });
}

Prediction IncrementalAdaBoost::do_predict(std::span<const double> x) const {
  std::vector<double> votes(class_weight_.size(), 0.0);
  double mass = 0;
  for (const auto& s : stages_) {
    if (s.model.empty()) continue;
    const double w = s.vote_weight();
    if (w <= 0) continue;
    const auto label = static_cast<std::size_t>(*s.model.predict(x));
    if (label >= votes.size()) votes.resize(label + 1, 0.0);
    votes[label] += w;
    mass += w;
  }
  // no stage has earned a vote yet: fall back to the class prior
  if (mass <= 0) votes = class_weight_;
  const double total = std::accumulate(votes.begin(), votes.end(), 0.0);
  for (double& v : votes) v /= total;
  return prediction_from_scores(votes);
}

nlohmann::json IncrementalAdaBoost::save_state() const {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : stages_)
    stages.push_back({{"model", s.model.to_json()}, {"lambda_sc", s.lambda_correct}, {"lambda_sw", s.lambda_wrong}});
  return {{"rng", rng_state(rng_)}, {"class_weight", class_weight_}, {"stages", std::move(stages)}};
}

void IncrementalAdaBoost::load_state(const nlohmann::json& s) {
  restore_rng(rng_, s.at("rng").get<std::string>());
  class_weight_ = s.at("class_weight").get<std::vector<double>>();
  stages_.clear();
  for (const auto& js : s.at("stages")) {
    BoostStageState st;
    st.model = GaussianClassStats::from_json(js.at("model"));
    st.lambda_correct = js.at("lambda_sc").get<double>();
    st.lambda_wrong = js.at("lambda_sw").get<double>();
    stages_.push_back(std::move(st));
  }
}

}  // namespace streamhar
