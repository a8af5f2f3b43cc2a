#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streamhar/features.hpp"
#include "streamhar/labels.hpp"

namespace streamhar {

enum class Algorithm { IKNN, IDT, IRF, IAdaBoost, INB, LearnNSE };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::IKNN, Algorithm::IDT, Algorithm::IRF,
                                               Algorithm::IAdaBoost, Algorithm::INB,
                                               Algorithm::LearnNSE};

std::string_view algorithm_id(Algorithm a) noexcept;       // "iknn", "idt", ...
std::string_view algorithm_display(Algorithm a) noexcept;  // "IKNN", "Learn++NSE", ...
Algorithm parse_algorithm(std::string_view id);            // throws UnknownAlgorithm

enum class LeafPrediction { MajorityClass, NaiveBayes, NaiveBayesAdaptive };

struct HoeffdingConfig {
  double delta = 1e-7;
  double grace_period = 20;
  double tie_threshold = 0.05;
  int n_thresholds = 10;
  LeafPrediction leaf = LeafPrediction::NaiveBayesAdaptive;
};

struct LearnerConfig {
  std::size_t dim = kFeatureDim;
  std::uint64_t seed = 1;
  double variance_floor = 1e-9;

  // IKNN; capacity 0 keeps every example
  std::size_t knn_k = 5;
  std::size_t knn_capacity = 2000;

  HoeffdingConfig tree;

  // IRF; subset size 0 means ceil(sqrt(dim))
  std::size_t forest_size = 10;
  std::size_t forest_subset = 0;

  std::size_t boost_stages = 10;

  std::size_t nse_chunk = 20;
  double nse_slope = 0.5;   // a
  double nse_offset = 10;   // b
  double nse_error_floor = 0.01;
};

nlohmann::json to_json(const LearnerConfig& c);
LearnerConfig learner_config_from_json(const nlohmann::json& j, LearnerConfig base = {});

struct ClassScore {
  LabelId label = 0;
  double score = 0;
  bool operator==(const ClassScore&) const = default;
};

struct Prediction {
  LabelId label = 0;
  std::vector<ClassScore> scores;
  bool operator==(const Prediction&) const = default;
};

// Argmax over scores indexed by class id, smallest id on ties.
Prediction prediction_from_scores(std::span<const double> scores);

// Learn-one/predict-one contract shared by the six learners. predict() is
// const and returns nullopt until the first learn(); learn() admits unseen
// class ids and bumps examples_seen() by exactly one.
class OnlineClassifier {
 public:
  virtual ~OnlineClassifier() = default;

  virtual Algorithm algorithm() const noexcept = 0;
  virtual std::unique_ptr<OnlineClassifier> clone() const = 0;

  std::optional<Prediction> predict(std::span<const double> x) const;
  void learn(std::span<const double> x, LabelId y);

  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t examples_seen() const noexcept { return seen_; }

  nlohmann::json snapshot() const;
  void save(std::ostream& os) const;

 protected:
  explicit OnlineClassifier(std::size_t dim) : dim_(dim) {}

  virtual Prediction do_predict(std::span<const double> x) const = 0;
  virtual void do_learn(std::span<const double> x, LabelId y) = 0;
  virtual nlohmann::json save_state() const = 0;
  virtual void load_state(const nlohmann::json& state) = 0;

  friend std::unique_ptr<OnlineClassifier> load_classifier(const nlohmann::json& snapshot);

 private:
  std::size_t dim_;
  std::uint64_t seen_ = 0;
};

std::unique_ptr<OnlineClassifier> make_classifier(Algorithm a, const LearnerConfig& config = {});
std::unique_ptr<OnlineClassifier> load_classifier(const nlohmann::json& snapshot);
std::unique_ptr<OnlineClassifier> load_classifier(std::istream& is);

// Confidence radius sqrt(R^2 ln(1/delta) / (2n)).
double hoeffding_bound(double range, double delta, double n);

// Poisson(lambda) replication count for online bagging/boosting; lambda <= 0
// yields 0 without consuming randomness.
std::uint64_t online_bagging_sample(double lambda, std::mt19937_64& rng);

std::string rng_state(const std::mt19937_64& rng);
void restore_rng(std::mt19937_64& rng, const std::string& state);

}  // namespace streamhar
