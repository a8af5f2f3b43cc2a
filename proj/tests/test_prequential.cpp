#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <random>

#include "streamhar/error.hpp"
#include "streamhar/learners.hpp"
#include "streamhar/prequential.hpp"

using namespace streamhar;
using doctest::Approx;

namespace {

// Always answers with one fixed label.
class ConstantModel final : public StreamModel {
 public:
  explicit ConstantModel(LabelId label) : label_(label) {}
  std::optional<Prediction> predict_one(std::span<const double>) const override {
    return Prediction{label_, {{label_, 1.0}}};
  }
  void learn_one(std::span<const double>, LabelId) override {}

 private:
  LabelId label_;
};

// Reads the true label out of the first feature.
class PerfectModel final : public StreamModel {
 public:
  std::optional<Prediction> predict_one(std::span<const double> x) const override {
    if (!trained_) return std::nullopt;
    return Prediction{static_cast<LabelId>(x[0]), {}};
  }
  void learn_one(std::span<const double>, LabelId) override { trained_ = true; }

 private:
  bool trained_ = false;
};

// Predicts the most frequent label learned so far.
class MajorityModel final : public StreamModel {
 public:
  std::optional<Prediction> predict_one(std::span<const double>) const override {
    if (counts_.empty()) return std::nullopt;
    const auto it = std::max_element(counts_.begin(), counts_.end());
    return Prediction{static_cast<LabelId>(it - counts_.begin()), {}};
  }
  void learn_one(std::span<const double>, LabelId y) override {
    if (counts_.size() <= static_cast<std::size_t>(y)) counts_.resize(static_cast<std::size_t>(y) + 1);
    ++counts_[static_cast<std::size_t>(y)];
  }

 private:
  std::vector<int> counts_;
};

std::vector<FeatureVector> labelled(const std::vector<LabelId>& labels) {
  std::vector<FeatureVector> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.push_back({{static_cast<double>(labels[i]), static_cast<double>(i)}, labels[i], i});
  return out;
}

PredictionRecord rec(std::uint64_t i, LabelId truth, std::optional<LabelId> predicted) {
  PredictionRecord r;
  r.window_index = i;
  r.truth = truth;
  r.predicted = predicted;
  return r;
}

}  // namespace

TEST_SUITE("prequential") {
  TEST_CASE("constant-A model on ABABAB") {
    ConstantModel model(0);
    const auto r = run_prequential(labelled({0, 1, 0, 1, 0, 1}), model, "dummy");
    CHECK(r.accuracy == 0.5);
    CHECK(r.macro.f1 == Approx(1.0 / 3).epsilon(1e-12));
    REQUIRE(r.macro.per_class.size() == 2);
    CHECK(r.macro.per_class[0].precision == 0.5);
    CHECK(r.macro.per_class[0].recall == 1.0);
    CHECK(r.macro.per_class[0].f1 == Approx(2.0 / 3));
    CHECK(r.macro.per_class[1].f1 == 0);
  }

  TEST_CASE("constant model accuracy equals the class prior") {
    std::mt19937_64 rng(3);
    std::vector<LabelId> labels(997);
    for (auto& l : labels) l = static_cast<LabelId>(rng() % 4);
    for (LabelId k = 0; k < 4; ++k) {
      ConstantModel model(k);
      const auto r = run_prequential(labelled(labels), model);
      const auto n = std::count(labels.begin(), labels.end(), k);
      CHECK(r.accuracy == static_cast<double>(n) / static_cast<double>(labels.size()));
    }
  }

  TEST_CASE("perfect model is right from the second window on") {
    PerfectModel model;
    const auto r = run_prequential(labelled({0, 1, 2, 0, 1, 2, 2}), model);
    CHECK_FALSE(r.log[0].predicted.has_value());
    CHECK_FALSE(r.log[0].correct());
    CHECK(r.evaluated == 7);
    CHECK(r.accuracy == Approx(6.0 / 7));
    CHECK(r.curve[0].accuracy == 0);
    for (std::size_t i = 1; i < r.curve.size(); ++i)
      CHECK(r.curve[i].accuracy == Approx(static_cast<double>(i) / static_cast<double>(i + 1)));
    CHECK(r.confusion.none(0) == 1);
  }

  TEST_CASE("real learners miss the first window") {
    for (Algorithm a : kAllAlgorithms) {
      LearnerConfig c;
      c.dim = 2;
      auto m = make_classifier(a, c);
      const auto r = run_prequential(labelled({0, 0, 1, 1}), *m);
      CHECK_FALSE(r.log[0].predicted.has_value());
      CHECK_FALSE(r.log[0].correct());
    }
  }

  TEST_CASE("empty and unlabelled streams are rejected") {
    ConstantModel model(0);
    try {
      run_prequential(std::vector<FeatureVector>{}, model);
      FAIL("expected EmptyStream");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::EmptyStream);
    }
    std::vector<FeatureVector> unlabelled{{{1.0}, std::nullopt, 0}};
    CHECK_THROWS_AS(run_prequential(unlabelled, model), Error);
  }

  TEST_CASE("property: report is recomputable from its log") {
    std::mt19937_64 rng(8);
    std::vector<LabelId> labels(300);
    for (auto& l : labels) l = static_cast<LabelId>(rng() % 5);
    MajorityModel model;
    const auto r = run_prequential(labelled(labels), model);
    CHECK(r.curve.size() == r.log.size());
    CHECK(r.confusion.total() == r.evaluated);
    CHECK(r.accuracy == static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total()));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < r.log.size(); ++i) {
      correct += r.log[i].correct();
      CHECK(r.curve[i].accuracy == static_cast<double>(correct) / static_cast<double>(i + 1));
      CHECK(r.curve[i].accuracy >= 0);
      CHECK(r.curve[i].accuracy <= 1);
      CHECK(r.log[i].predict_s >= 0);
      CHECK(r.log[i].train_s >= 0);
    }
    const auto again = summarize("x", r.log);
    CHECK(again.accuracy == r.accuracy);
    CHECK(again.macro.f1 == r.macro.f1);
  }

  TEST_CASE("diagonal confusion gives perfect metrics") {
    ConfusionMatrix cm;
    for (LabelId k = 0; k < 4; ++k)
      for (int i = 0; i < 3; ++i) cm.add(k, k);
    const auto m = macro_metrics(cm);
    CHECK(m.precision == 1);
    CHECK(m.recall == 1);
    CHECK(m.f1 == 1);
  }

  TEST_CASE("classes never seen as truth are excluded from the average") {
    ConfusionMatrix cm;
    cm.add(0, 0);
    cm.add(0, 0);
    cm.add(2, 2);
    const auto m = macro_metrics(cm);
    CHECK(m.per_class.size() == 2);
    CHECK(m.f1 == 1);
    cm.add(0, 1);  // class 1 predicted but never true
    const auto m2 = macro_metrics(cm);
    CHECK(m2.per_class.size() == 2);
    CHECK(m2.recall == Approx((2.0 / 3 + 1.0) / 2));
  }

  TEST_CASE("confusion matrix counts none separately") {
    ConfusionMatrix cm;
    cm.add(1, std::nullopt);
    cm.add(1, 0);
    CHECK(cm.none(1) == 1);
    CHECK(cm.count(1, 0) == 1);
    CHECK(cm.row_total(1) == 2);
    CHECK(cm.column_total(0) == 1);
    CHECK(cm.total() == 2);
    CHECK(cm.trace() == 0);
    CHECK_THROWS_AS(cm.add(-1, 0), Error);
  }

  TEST_CASE("timing averages") {
    std::vector<PredictionRecord> log(1);
    log[0].train_s = 0.002;
    log[0].predict_s = 0.001;
    const auto [train, predict] = time_per_sample(log);
    CHECK(train == Approx(0.002));
    CHECK(predict == Approx(0.001));
    std::vector<PredictionRecord> more(5);
    for (std::size_t i = 0; i < more.size(); ++i) more[i].train_s = static_cast<double>(i);
    const auto a = time_per_sample(more);
    std::reverse(more.begin(), more.end());
    CHECK(time_per_sample(more) == a);
  }

  TEST_CASE("knn predict time grows with memory") {
    auto timed = [](std::size_t memory) {
      LearnerConfig c;
      c.knn_capacity = 0;
      auto m = make_classifier(Algorithm::IKNN, c);
      std::mt19937_64 rng(1);
      std::normal_distribution<double> n(0, 1);
      std::vector<double> x(kFeatureDim);
      for (std::size_t i = 0; i < memory; ++i) {
        for (auto& v : x) v = n(rng);
        m->learn(x, static_cast<LabelId>(i % 5));
      }
      const auto start = std::chrono::steady_clock::now();
      for (int i = 0; i < 50; ++i) (void)m->predict(x);
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    CHECK(timed(1000) > timed(100));
  }

  TEST_CASE("stratified split keeps class shares and stream order") {
    std::vector<LabelId> labels;
    for (int i = 0; i < 100; ++i) labels.push_back(i % 4 == 0 ? 1 : 0);
    const auto data = labelled(labels);
    const auto split = stratified_split(data, 0.2, 3);
    CHECK(split.test.size() == 20);
    CHECK(split.train.size() == 80);
    CHECK(std::count_if(split.test.begin(), split.test.end(), [](const auto& v) { return v.label == 1; }) == 5);
    for (const auto* side : {&split.train, &split.test})
      for (std::size_t i = 1; i < side->size(); ++i) CHECK((*side)[i].window_index > (*side)[i - 1].window_index);
    const auto again = stratified_split(data, 0.2, 3);
    for (std::size_t i = 0; i < split.test.size(); ++i) CHECK(again.test[i].window_index == split.test[i].window_index);
    CHECK_THROWS_AS(stratified_split(data, 0.0, 1), Error);
  }

  TEST_CASE("batch holdout") {
    std::vector<LabelId> labels;
    for (int i = 0; i < 50; ++i) labels.push_back(i % 5 == 0 ? 1 : 0);
    const auto data = labelled(labels);
    const auto split = stratified_split(data, 0.2, 1);

    SUBCASE("majority model scores the majority share") {
      MajorityModel model;
      const auto r = run_batch_holdout(split.train, split.test, model, 1, 1);
      const auto majority = std::count_if(split.test.begin(), split.test.end(), [](const auto& v) { return v.label == 0; });
      CHECK(r.accuracy == static_cast<double>(majority) / static_cast<double>(split.test.size()));
      CHECK(r.train_accuracy.has_value());
    }
    SUBCASE("knn recalls a training point") {
      LearnerConfig c;
      c.dim = 2;
      c.knn_k = 1;
      c.knn_capacity = 0;
      auto knn = make_classifier(Algorithm::IKNN, c);
      ClassifierModel model(*knn);
      std::vector<FeatureVector> test{split.train[3]};
      const auto r = run_batch_holdout(split.train, test, model, 1, 1);
      CHECK(r.accuracy == 1.0);
    }
    SUBCASE("epochs leave naive Bayes stable") {
      LearnerConfig c;
      c.dim = 2;
      auto nb1 = make_classifier(Algorithm::INB, c);
      auto nb3 = make_classifier(Algorithm::INB, c);
      ClassifierModel m1(*nb1), m3(*nb3);
      const auto r1 = run_batch_holdout(split.train, split.test, m1, 1, 1);
      const auto r3 = run_batch_holdout(split.train, split.test, m3, 3, 1);
      const double one_window = 1.0 / static_cast<double>(split.train.size());
      CHECK(std::abs(*r1.train_accuracy - *r3.train_accuracy) <= one_window + 1e-12);
    }
    SUBCASE("errors") {
      MajorityModel model;
      try {
        run_batch_holdout({}, split.test, model, 1, 1);
        FAIL("expected EmptySplit");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySplit);
      }
      CHECK_THROWS_AS(run_batch_holdout(split.train, split.test, model, 0, 1), Error);
    }
  }

  TEST_CASE("rolling accuracy and switch responses") {
    std::vector<PredictionRecord> log;
    std::uint64_t i = 0;
    for (int k = 0; k < 20; ++k, ++i) log.push_back(rec(i, 0, 0));
    for (int k = 0; k < 3; ++k, ++i) log.push_back(rec(i, 1, 0));
    for (int k = 0; k < 20; ++k, ++i) log.push_back(rec(i, 1, 1));
    const auto roll = rolling_accuracy(log, 10);
    CHECK(roll.size() == log.size());
    CHECK(roll[19] == 1.0);
    CHECK(roll[22] == Approx(0.7));
    const auto resp = switch_responses(log, 10, 5, 0.05);
    REQUIRE(resp.size() == 1);
    CHECK(resp[0].position == 20);
    CHECK(resp[0].dipped);
    CHECK(resp[0].recovered_ok);
    CHECK(resp[0].trough == Approx(0.7));
    CHECK_THROWS_AS(rolling_accuracy(log, 0), Error);
  }

  TEST_CASE("prediction log text is deterministic and ignores timings") {
    LabelRegistry labels;
    labels.intern("A");
    labels.intern("B");
    auto a = rec(0, 0, std::nullopt);
    auto b = rec(1, 1, 1);
    b.scores = {{0, 0.25}, {1, 0.75}};
    b.train_s = 5;
    std::vector<PredictionRecord> log{a, b};
    const auto text = prediction_log_csv(log, labels);
    log[1].train_s = 7;
    CHECK(prediction_log_csv(log, labels) == text);
    CHECK(text.find("window,true,predicted,correct,scores") == 0);
    CHECK(text.find("1,B,B,1,0.25;0.75") != std::string::npos);
  }

  TEST_CASE("comparison table accuracy matches reports") {
    ConstantModel a(0), b(1);
    std::vector<EvalReport> reports{run_prequential(labelled({0, 0, 0, 1}), a, "alpha"),
                                    run_prequential(labelled({0, 0, 0, 1}), b, "beta")};
    const auto csv = comparison_csv(reports);
    CHECK(csv.find("alpha") != std::string::npos);
    CHECK(csv.find("0.75") != std::string::npos);
    CHECK(csv.find("0.25") != std::string::npos);
    const auto table = comparison_table(reports);
    CHECK(table.find("75.00") != std::string::npos);
    CHECK(table.find("25.00") != std::string::npos);
  }
}
