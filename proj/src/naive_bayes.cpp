#include "streamhar/classifiers.hpp"

namespace streamhar {

IncrementalNaiveBayes::IncrementalNaiveBayes(const LearnerConfig& config)
    : OnlineClassifier(config.dim), stats_(config.dim, config.variance_floor) {}

std::unique_ptr<OnlineClassifier> IncrementalNaiveBayes::clone() const {
  return std::make_unique<IncrementalNaiveBayes>(*this);
}

void IncrementalNaiveBayes::do_learn(std::span<const double> x, LabelId y) { stats_.add(x, y); }

Prediction IncrementalNaiveBayes::do_predict(std::span<const double> x) const {
  return prediction_from_scores(stats_.posterior(x));
}

nlohmann::json IncrementalNaiveBayes::save_state() const { return {{"stats", stats_.to_json()}}; }

void IncrementalNaiveBayes::load_state(const nlohmann::json& s) {
  stats_ = GaussianClassStats::from_json(s.at("stats"));
}

}  // namespace streamhar
