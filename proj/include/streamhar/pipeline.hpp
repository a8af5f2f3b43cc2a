#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "streamhar/features.hpp"
#include "streamhar/learners.hpp"
#include "streamhar/prequential.hpp"
#include "streamhar/windowing.hpp"

namespace streamhar {

struct PipelineConfig {
  WindowConfig window;
  FeatureConfig features;
};

// Windows a sample stream and returns the normalized feature vectors in
// emission order. The normalizer runs online, so the result equals what a
// live pipeline would have fed its learners.
std::vector<FeatureVector> featurize(std::span<const SensorSample> samples, const PipelineConfig& config = {});

// Same, without normalization.
std::vector<FeatureVector> raw_features(std::span<const SensorSample> samples, const PipelineConfig& config = {});

struct AlgoOutcome {
  Algorithm algorithm = Algorithm::INB;
  std::optional<Prediction> prediction;
  double predict_s = 0;
  double train_s = 0;
};

struct WindowStep {
  std::uint64_t window_index = 0;
  std::optional<LabelId> truth;
  std::vector<AlgoOutcome> outcomes;  // one per configured algorithm
};

struct PipelineStep {
  bool timestamp_regression = false;
  std::optional<WindowStep> step;
};

struct RunningMetrics {
  std::uint64_t windows = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t correct = 0;
  ConfusionMatrix confusion;

  double accuracy() const noexcept {
    return evaluated == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(evaluated);
  }
};

// Per-stream processing shared by the offline tools and the service:
// samples -> windows -> features -> normalize -> predict -> learn. Learning
// happens only for labelled windows and always after the prediction.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::vector<Algorithm> algorithms, const LearnerConfig& learner);

  PipelineStep push(const SensorSample& sample);

  // Predict-then-learn on an already normalized vector.
  WindowStep process(const FeatureVector& v);

  const std::vector<Algorithm>& algorithms() const noexcept { return algorithms_; }
  const OnlineClassifier& classifier(std::size_t i) const { return *models_.at(i); }
  const RunningMetrics& metrics(std::size_t i) const { return metrics_.at(i); }
  const WindowAssembler& assembler() const noexcept { return assembler_; }
  std::size_t buffered() const noexcept { return assembler_.buffered(); }

 private:
  PipelineConfig config_;
  std::vector<Algorithm> algorithms_;
  WindowAssembler assembler_;
  OnlineNormalizer normalizer_;
  std::vector<std::unique_ptr<OnlineClassifier>> models_;
  std::vector<RunningMetrics> metrics_;
};

PredictionRecord to_record(const WindowStep& step, std::size_t algo);

}  // namespace streamhar
