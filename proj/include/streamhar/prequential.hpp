#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "streamhar/features.hpp"
#include "streamhar/learners.hpp"

namespace streamhar {

// What the evaluation harness needs from a model. OnlineClassifier satisfies
// it; tests plug in scripted models.
class StreamModel {
 public:
  virtual ~StreamModel() = default;
  virtual std::optional<Prediction> predict_one(std::span<const double> x) const = 0;
  virtual void learn_one(std::span<const double> x, LabelId y) = 0;
};

class ClassifierModel final : public StreamModel {
 public:
  explicit ClassifierModel(OnlineClassifier& c) : c_(c) {}
  std::optional<Prediction> predict_one(std::span<const double> x) const override { return c_.predict(x); }
  void learn_one(std::span<const double> x, LabelId y) override { c_.learn(x, y); }

 private:
  OnlineClassifier& c_;
};

struct PredictionRecord {
  std::uint64_t window_index = 0;
  LabelId truth = 0;
  std::optional<LabelId> predicted;
  std::vector<ClassScore> scores;
  double predict_s = 0;
  double train_s = 0;

  bool correct() const noexcept { return predicted && *predicted == truth; }
};

// Rows are true labels, columns predicted labels, plus a "none" column for
// absent predictions.
class ConfusionMatrix {
 public:
  void add(LabelId truth, std::optional<LabelId> predicted);

  std::size_t n_classes() const noexcept { return counts_.size(); }
  std::uint64_t count(LabelId truth, LabelId predicted) const;
  std::uint64_t none(LabelId truth) const;
  std::uint64_t row_total(LabelId truth) const;
  std::uint64_t column_total(LabelId predicted) const;
  std::uint64_t total() const noexcept { return total_; }
  std::uint64_t trace() const;

 private:
  void grow(std::size_t n);

  std::vector<std::vector<std::uint64_t>> counts_;
  std::vector<std::uint64_t> none_;
  std::uint64_t total_ = 0;
};

struct ClassMetrics {
  LabelId label = 0;
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t support = 0;
};

struct MacroMetrics {
  double precision = 0, recall = 0, f1 = 0;
  std::vector<ClassMetrics> per_class;
};

// One-vs-rest per class with 0/0 := 0, averaged over classes that occur as
// truth at least once.
MacroMetrics macro_metrics(const ConfusionMatrix& cm);

struct CurvePoint {
  std::uint64_t window_index = 0;
  double accuracy = 0;
};

struct EvalReport {
  std::string algorithm;
  std::uint64_t evaluated = 0;
  double accuracy = 0;
  MacroMetrics macro;
  std::vector<CurvePoint> curve;
  double avg_train_s = 0;
  double avg_predict_s = 0;
  ConfusionMatrix confusion;
  std::vector<PredictionRecord> log;
  std::optional<double> train_accuracy;  // batch-holdout only
};

// Mean train and predict wall-clock seconds per logged window.
std::pair<double, double> time_per_sample(std::span<const PredictionRecord> log);

// Builds accuracy, macro metrics, curve and timings from a prediction log.
EvalReport summarize(std::string algorithm, std::vector<PredictionRecord> log);

// Interleaved test-then-train over labelled vectors; absent predictions count
// as errors. Only the predict and learn calls are timed.
EvalReport run_prequential(std::span<const FeatureVector> stream, StreamModel& model, std::string algorithm = {});
EvalReport run_prequential(std::span<const FeatureVector> stream, OnlineClassifier& model);

struct Split {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> test;
};

// Per-class seeded split; each class contributes round(n_c * test_fraction)
// vectors to the test side. Both sides keep stream order.
Split stratified_split(std::span<const FeatureVector> data, double test_fraction, std::uint64_t seed);

// Streams the shuffled training set `epochs` times, then freezes the model and
// scores the test set; train_accuracy is measured on the training set after
// training.
EvalReport run_batch_holdout(std::span<const FeatureVector> train, std::span<const FeatureVector> test,
                             StreamModel& model, int epochs, std::uint64_t seed, std::string algorithm = {});

// Trailing-window accuracy after each logged window.
std::vector<double> rolling_accuracy(std::span<const PredictionRecord> log, std::size_t width);

struct SwitchResponse {
  std::size_t position = 0;  // log index of the first window after the switch
  double before = 0;         // rolling accuracy just before the switch
  double trough = 0;         // minimum within the response horizon
  double recovered = 0;      // best rolling accuracy after the trough, before the next switch
  bool dipped = false;
  bool recovered_ok = false;
};

// For every change of true label in the log: did rolling accuracy fall by at
// least `min_drop` within `horizon` windows and then climb back by `min_drop`?
std::vector<SwitchResponse> switch_responses(std::span<const PredictionRecord> log, std::size_t width,
                                             std::size_t horizon, double min_drop);

nlohmann::json report_to_json(const EvalReport& r, const LabelRegistry& labels);
std::string curve_csv(const EvalReport& r);
// Deterministic per-window log without timings; byte-comparable across runs.
std::string prediction_log_csv(std::span<const PredictionRecord> log, const LabelRegistry& labels);
std::string prediction_log_line(const PredictionRecord& rec, const LabelRegistry& labels);
// Fixed-width table with the columns Precision, Recall, F1-Score, Accuracy,
// Training Time, Prediction Time (metrics in percent).
std::string comparison_table(std::span<const EvalReport> reports);
std::string comparison_csv(std::span<const EvalReport> reports);

}  // namespace streamhar
