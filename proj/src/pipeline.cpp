#include "streamhar/pipeline.hpp"

#include <chrono>

#include "streamhar/error.hpp"

namespace streamhar {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::vector<FeatureVector> raw_features(std::span<const SensorSample> samples, const PipelineConfig& config) {
  WindowAssembler assembler(config.window);
  std::vector<FeatureVector> out;
  out.reserve(samples.size() / config.window.size);
  for (const auto& s : samples)
    if (auto outcome = assembler.push(s); outcome.window) out.push_back(extract(*outcome.window, config.features));
  return out;
}

std::vector<FeatureVector> featurize(std::span<const SensorSample> samples, const PipelineConfig& config) {
  auto out = raw_features(samples, config);
  OnlineNormalizer normalizer(kFeatureDim);
  for (auto& v : out) v = normalizer.normalize(v);
  return out;
}

Pipeline::Pipeline(PipelineConfig config, std::vector<Algorithm> algorithms, const LearnerConfig& learner)
    : config_(config), algorithms_(std::move(algorithms)), assembler_(config.window), normalizer_(kFeatureDim) {
  if (algorithms_.empty()) throw Error(ErrorCode::InvalidArgument, "pipeline needs at least one algorithm");
  for (auto a : algorithms_) models_.push_back(make_classifier(a, learner));
  metrics_.resize(algorithms_.size());
}

PipelineStep Pipeline::push(const SensorSample& sample) {
  auto outcome = assembler_.push(sample);
  PipelineStep result;
  result.timestamp_regression = outcome.timestamp_regression;
  if (outcome.window) result.step = process(normalizer_.normalize(extract(*outcome.window, config_.features)));
  return result;
}

WindowStep Pipeline::process(const FeatureVector& v) {
  WindowStep step;
  step.window_index = v.window_index;
  step.truth = v.label;
  for (std::size_t i = 0; i < models_.size(); ++i) {
    AlgoOutcome o;
    o.algorithm = algorithms_[i];
    auto t0 = std::chrono::steady_clock::now();
    o.prediction = models_[i]->predict(v.values);
    o.predict_s = seconds_since(t0);
    auto& m = metrics_[i];
    ++m.windows;
    if (v.label) {
      ++m.evaluated;
      const std::optional<LabelId> predicted =
          o.prediction ? std::optional<LabelId>(o.prediction->label) : std::nullopt;
      if (predicted == v.label) ++m.correct;
      m.confusion.add(*v.label, predicted);
      t0 = std::chrono::steady_clock::now();
      models_[i]->learn(v.values, *v.label);
      o.train_s = seconds_since(t0);
    }
    step.outcomes.push_back(std::move(o));
  }
  return step;
}

PredictionRecord to_record(const WindowStep& step, std::size_t algo) {
  const auto& o = step.outcomes.at(algo);
  PredictionRecord r;
  r.window_index = step.window_index;
  r.truth = step.truth.value_or(-1);
  if (o.prediction) {
    r.predicted = o.prediction->label;
    r.scores = o.prediction->scores;
  }
  r.predict_s = o.predict_s;
  r.train_s = o.train_s;
  return r;
}

}  // namespace streamhar
