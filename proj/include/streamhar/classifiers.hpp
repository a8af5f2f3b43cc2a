#pragma once

#include <deque>
#include <random>
#include <utility>
#include <vector>

#include "streamhar/gaussian_stats.hpp"
#include "streamhar/hoeffding_tree.hpp"
#include "streamhar/learners.hpp"

namespace streamhar {

/// Instance memory with FIFO eviction; majority vote of the k nearest stored
/// vectors by Euclidean distance. Vote ties go to the class with the smaller
/// summed neighbour distance, then the smaller id. Equal distances are
/// ordered oldest first.
class IncrementalKnn final : public OnlineClassifier {
 public:
  explicit IncrementalKnn(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::IKNN; }
  std::unique_ptr<OnlineClassifier> clone() const override;

  std::size_t memory_size() const noexcept { return memory_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t k() const noexcept { return k_; }
  // Oldest stored example, for eviction tests.
  const std::vector<double>& oldest() const { return memory_.front().x; }

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  struct Entry {
    std::vector<double> x;
    LabelId y;
    std::uint64_t seq;
  };
  std::size_t k_;
  std::size_t capacity_;
  std::uint64_t next_seq_ = 0;
  LabelId max_label_ = -1;
  std::deque<Entry> memory_;
};

/// Gaussian naive Bayes in log space with a variance floor.
class IncrementalNaiveBayes final : public OnlineClassifier {
 public:
  explicit IncrementalNaiveBayes(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::INB; }
  std::unique_ptr<OnlineClassifier> clone() const override;
  const GaussianClassStats& stats() const noexcept { return stats_; }

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  GaussianClassStats stats_;
};

class IncrementalDecisionTree final : public OnlineClassifier {
 public:
  explicit IncrementalDecisionTree(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::IDT; }
  std::unique_ptr<OnlineClassifier> clone() const override;
  const HoeffdingTree& tree() const noexcept { return tree_; }

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  HoeffdingTree tree_;
};

/// Online bagging of Hoeffding trees. Every tree sees Poisson(1) copies of
/// each example and a fixed random subset of the input dimensions chosen at
/// construction.
class IncrementalRandomForest final : public OnlineClassifier {
 public:
  explicit IncrementalRandomForest(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::IRF; }
  std::unique_ptr<OnlineClassifier> clone() const override;

  std::size_t size() const noexcept { return trees_.size(); }
  const std::vector<std::size_t>& subset(std::size_t tree) const { return subsets_.at(tree); }

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  std::vector<double> project(std::span<const double> x, std::size_t tree) const;

  std::mt19937_64 rng_;
  std::vector<HoeffdingTree> trees_;
  std::vector<std::vector<std::size_t>> subsets_;
  std::vector<double> class_weight_;
};

struct BoostStageState {
  GaussianClassStats model;
  double lambda_correct = 0;  // lambda_sc
  double lambda_wrong = 0;    // lambda_sw

  double error() const noexcept;
  double vote_weight() const noexcept;
};

// One Oza boosting pass over the stages for (x, y). `draw` supplies the
// replication count for a given lambda so tests can script it.
template <typename Draw>
void oza_boost_update(std::span<BoostStageState> stages, std::span<const double> x, LabelId y, Draw&& draw) {
  double lambda = 1.0;
  for (auto& stage : stages) {
    const auto copies = draw(lambda);
    if (copies > 0) stage.model.add(x, y, static_cast<double>(copies));
    const auto predicted = stage.model.predict(x);
    if (predicted && *predicted == y) {
      stage.lambda_correct += lambda;
      lambda *= (stage.lambda_correct + stage.lambda_wrong) / (2.0 * stage.lambda_correct);
    } else {
      stage.lambda_wrong += lambda;
      lambda *= (stage.lambda_correct + stage.lambda_wrong) / (2.0 * stage.lambda_wrong);
    }
  }
}

/// Oza's online AdaBoost over naive Bayes stages. Stage votes are weighted by
/// ln((1-e)/e) with e clipped into [1e-6, 0.5].
class IncrementalAdaBoost final : public OnlineClassifier {
 public:
  explicit IncrementalAdaBoost(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::IAdaBoost; }
  std::unique_ptr<OnlineClassifier> clone() const override;
  const std::vector<BoostStageState>& stages() const noexcept { return stages_; }

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  std::mt19937_64 rng_;
  std::vector<BoostStageState> stages_;
  std::vector<double> class_weight_;
};

struct NseParams {
  double slope = 0.5;
  double offset = 10;
  double error_floor = 0.01;
};

struct NseMember {
  GaussianClassStats model;
  std::size_t born = 0;           // chunk index t at creation, 1-based
  std::vector<double> betas;      // beta_k^tau for tau = born..t
  double weight = 0;              // ln(1 / beta_bar)
};

// Time-discounted error of one member: sigmoid weights
// 1/(1+exp(-a(tau-born-b))) over its lifetime, normalised, applied to betas.
double nse_weighted_beta(const NseMember& m, const NseParams& p);

/// Learn++.NSE with naive Bayes members. Examples buffer until a chunk of B is
/// complete, then one member is added and all voting weights are refreshed.
/// Until the first chunk closes, predictions come from naive Bayes fitted to
/// the partial buffer.
class LearnNse final : public OnlineClassifier {
 public:
  explicit LearnNse(const LearnerConfig& config);

  Algorithm algorithm() const noexcept override { return Algorithm::LearnNSE; }
  std::unique_ptr<OnlineClassifier> clone() const override;

  void update(std::span<const std::pair<std::vector<double>, LabelId>> chunk);

  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::size_t chunk_size() const noexcept { return chunk_; }
  std::size_t chunks_processed() const noexcept { return t_; }
  const std::vector<NseMember>& members() const noexcept { return members_; }

  // Weighted vote of the current members; nullopt without members.
  std::optional<Prediction> ensemble_predict(std::span<const double> x) const;

 protected:
  Prediction do_predict(std::span<const double> x) const override;
  void do_learn(std::span<const double> x, LabelId y) override;
  nlohmann::json save_state() const override;
  void load_state(const nlohmann::json& state) override;

 private:
  std::size_t chunk_;
  NseParams params_;
  double variance_floor_;
  std::size_t t_ = 0;
  std::vector<NseMember> members_;
  std::vector<std::pair<std::vector<double>, LabelId>> buffer_;
  GaussianClassStats warmup_;
};

}  // namespace streamhar
