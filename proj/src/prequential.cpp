#include "streamhar/prequential.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "streamhar/error.hpp"

namespace streamhar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

void ConfusionMatrix::grow(std::size_t n) {
  if (n <= counts_.size()) return;
  for (auto& row : counts_) row.resize(n, 0);
  counts_.resize(n, std::vector<std::uint64_t>(n, 0));
  none_.resize(n, 0);
}

void ConfusionMatrix::add(LabelId truth, std::optional<LabelId> predicted) {
  if (truth < 0 || (predicted && *predicted < 0))
    throw Error(ErrorCode::InvalidArgument, "negative class id in confusion matrix");
  grow(static_cast<std::size_t>(std::max(truth, predicted.value_or(0))) + 1);
  if (predicted)
    ++counts_[static_cast<std::size_t>(truth)][static_cast<std::size_t>(*predicted)];
  else
    ++none_[static_cast<std::size_t>(truth)];
  ++total_;
}

std::uint64_t ConfusionMatrix::count(LabelId t, LabelId p) const {
  if (t < 0 || p < 0 || static_cast<std::size_t>(std::max(t, p)) >= counts_.size()) return 0;
  return counts_[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
}

std::uint64_t ConfusionMatrix::none(LabelId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= none_.size()) return 0;
  return none_[static_cast<std::size_t>(t)];
}

std::uint64_t ConfusionMatrix::row_total(LabelId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= counts_.size()) return 0;
  const auto& row = counts_[static_cast<std::size_t>(t)];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0}) + none(t);
}

std::uint64_t ConfusionMatrix::column_total(LabelId p) const {
  std::uint64_t s = 0;
  for (std::size_t t = 0; t < counts_.size(); ++t) s += count(static_cast<LabelId>(t), p);
  return s;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < counts_.size(); ++c) s += counts_[c][c];
  return s;
}

MacroMetrics macro_metrics(const ConfusionMatrix& cm) {
  MacroMetrics m;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    const auto id = static_cast<LabelId>(c);
    const auto support = cm.row_total(id);
    if (support == 0) continue;
    const double tp = static_cast<double>(cm.count(id, id));
    const double predicted = static_cast<double>(cm.column_total(id));
    ClassMetrics k;
    k.label = id;
    k.support = support;
    k.precision = predicted > 0 ? tp / predicted : 0.0;
    k.recall = tp / static_cast<double>(support);
    k.f1 = k.precision + k.recall > 0 ? 2 * k.precision * k.recall / (k.precision + k.recall) : 0.0;
    m.per_class.push_back(k);
  }
  if (!m.per_class.empty()) {
    const auto n = static_cast<double>(m.per_class.size());
    for (const auto& k : m.per_class) {
      m.precision += k.precision / n;
      m.recall += k.recall / n;
      m.f1 += k.f1 / n;
    }
  }
  return m;
}

std::pair<double, double> time_per_sample(std::span<const PredictionRecord> log) {
  if (log.empty()) return {0.0, 0.0};
  double train = 0, predict = 0;
  for (const auto& r : log) {
    train += r.train_s;
    predict += r.predict_s;
  }
  const auto n = static_cast<double>(log.size());
  return {train / n, predict / n};
}

EvalReport summarize(std::string algorithm, std::vector<PredictionRecord> log) {
  EvalReport r;
  r.algorithm = std::move(algorithm);
  std::uint64_t correct = 0;
  r.curve.reserve(log.size());
  for (const auto& rec : log) {
    r.confusion.add(rec.truth, rec.predicted);
    if (rec.correct()) ++correct;
    r.curve.push_back({rec.window_index, static_cast<double>(correct) / static_cast<double>(r.confusion.total())});
  }
  r.evaluated = log.size();
  r.accuracy = r.evaluated ? static_cast<double>(correct) / static_cast<double>(r.evaluated) : 0.0;
  r.macro = macro_metrics(r.confusion);
  std::tie(r.avg_train_s, r.avg_predict_s) = time_per_sample(log);
  r.log = std::move(log);
  return r;
}

EvalReport run_prequential(std::span<const FeatureVector> stream, StreamModel& model, std::string algorithm) {
  if (stream.empty()) throw Error(ErrorCode::EmptyStream, "prequential evaluation needs at least one vector");
  std::vector<PredictionRecord> log;
  log.reserve(stream.size());
  for (const auto& v : stream) {
    if (!v.label) throw Error(ErrorCode::InvalidArgument, "prequential evaluation needs labelled vectors");
    PredictionRecord rec;
    rec.window_index = v.window_index;
    rec.truth = *v.label;

    auto t0 = Clock::now();
    auto pred = model.predict_one(v.values);
    rec.predict_s = seconds_since(t0);
    if (pred) {
      rec.predicted = pred->label;
      rec.scores = std::move(pred->scores);
    }

    t0 = Clock::now();
    model.learn_one(v.values, *v.label);
    rec.train_s = seconds_since(t0);
    log.push_back(std::move(rec));
  }
  return summarize(std::move(algorithm), std::move(log));
}

EvalReport run_prequential(std::span<const FeatureVector> stream, OnlineClassifier& model) {
  ClassifierModel wrapped(model);
  return run_prequential(stream, wrapped, std::string(algorithm_id(model.algorithm())));
}

Split stratified_split(std::span<const FeatureVector> data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1))
    throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
  std::vector<std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].label) throw Error(ErrorCode::InvalidArgument, "stratified split needs labelled vectors");
    const auto c = static_cast<std::size_t>(*data[i].label);
    if (by_class.size() <= c) by_class.resize(c + 1);
    by_class[c].push_back(i);
  }
  std::mt19937_64 rng(seed);
  std::vector<bool> in_test(data.size(), false);
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
    for (std::size_t i = 0; i < n_test; ++i) in_test[idx[i]] = true;
  }
  Split s;
  for (std::size_t i = 0; i < data.size(); ++i) (in_test[i] ? s.test : s.train).push_back(data[i]);
  return s;
}

EvalReport run_batch_holdout(std::span<const FeatureVector> train, std::span<const FeatureVector> test,
                             StreamModel& model, int epochs, std::uint64_t seed, std::string algorithm) {
  if (train.empty() || test.empty()) throw Error(ErrorCode::EmptySplit, "batch holdout needs non-empty splits");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be at least 1");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::vector<PredictionRecord> train_log(train.size());
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const auto& v = train[i];
      if (!v.label) throw Error(ErrorCode::InvalidArgument, "batch holdout needs labelled vectors");
      const auto t0 = Clock::now();
      model.learn_one(v.values, *v.label);
      train_log[i].train_s += seconds_since(t0) / epochs;
    }
  }

  auto score = [&](std::span<const FeatureVector> data, std::vector<PredictionRecord>& log) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& v = data[i];
      if (!v.label) throw Error(ErrorCode::InvalidArgument, "batch holdout needs labelled vectors");
      auto& rec = log[i];
      rec.window_index = v.window_index;
      rec.truth = *v.label;
      const auto t0 = Clock::now();
      auto pred = model.predict_one(v.values);
      rec.predict_s = seconds_since(t0);
      if (pred) {
        rec.predicted = pred->label;
        rec.scores = std::move(pred->scores);
      }
    }
  };
  score(train, train_log);
  std::vector<PredictionRecord> test_log(test.size());
  score(test, test_log);

  const auto train_summary = summarize({}, train_log);
  auto report = summarize(std::move(algorithm), std::move(test_log));
  report.train_accuracy = train_summary.accuracy;
  report.avg_train_s = train_summary.avg_train_s;
  return report;
}

std::vector<double> rolling_accuracy(std::span<const PredictionRecord> log, std::size_t width) {
  if (width == 0) throw Error(ErrorCode::InvalidArgument, "rolling width must be positive");
  std::vector<double> out(log.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].correct()) ++hits;
    if (i >= width && log[i - width].correct()) --hits;
    out[i] = static_cast<double>(hits) / static_cast<double>(std::min(i + 1, width));
  }
  return out;
}

std::vector<SwitchResponse> switch_responses(std::span<const PredictionRecord> log, std::size_t width,
                                             std::size_t horizon, double min_drop) {
  const auto roll = rolling_accuracy(log, width);
  std::vector<std::size_t> switches;
  for (std::size_t i = 1; i < log.size(); ++i)
    if (log[i].truth != log[i - 1].truth) switches.push_back(i);

  std::vector<SwitchResponse> out;
  for (std::size_t s = 0; s < switches.size(); ++s) {
    const std::size_t at = switches[s];
    const std::size_t next = s + 1 < switches.size() ? switches[s + 1] : log.size();
    SwitchResponse r;
    r.position = at;
    r.before = roll[at - 1];
    const std::size_t end = std::min({at + horizon, next, log.size()});
    std::size_t trough_at = at;
    r.trough = roll[at];
    for (std::size_t i = at; i < end; ++i)
      if (roll[i] < r.trough) {
        r.trough = roll[i];
        trough_at = i;
      }
    r.recovered = r.trough;
    for (std::size_t i = trough_at; i < next; ++i) r.recovered = std::max(r.recovered, roll[i]);
    constexpr double kSlack = 1e-12;
    r.dipped = r.before - r.trough >= min_drop - kSlack;
    r.recovered_ok = r.recovered - r.trough >= min_drop - kSlack;
    out.push_back(r);
  }
  return out;
}

nlohmann::json report_to_json(const EvalReport& r, const LabelRegistry& labels) {
  auto name = [&](LabelId id) {
    return static_cast<std::size_t>(id) < labels.size() ? labels.name(id) : std::to_string(id);
  };
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& k : r.macro.per_class)
    per_class.push_back({{"label", name(k.label)},
                         {"precision", k.precision},
                         {"recall", k.recall},
                         {"f1", k.f1},
                         {"support", k.support}});
  nlohmann::json cm = nlohmann::json::array();
  for (std::size_t t = 0; t < r.confusion.n_classes(); ++t) {
    nlohmann::json row = {{"label", name(static_cast<LabelId>(t))}, {"none", r.confusion.none(static_cast<LabelId>(t))}};
    std::vector<std::uint64_t> counts;
    for (std::size_t p = 0; p < r.confusion.n_classes(); ++p)
      counts.push_back(r.confusion.count(static_cast<LabelId>(t), static_cast<LabelId>(p)));
    row["predicted"] = counts;
    cm.push_back(std::move(row));
  }
  nlohmann::json j = {{"algorithm", r.algorithm},
                      {"evaluated", r.evaluated},
                      {"accuracy", r.accuracy},
                      {"precision", r.macro.precision},
                      {"recall", r.macro.recall},
                      {"f1", r.macro.f1},
                      {"avg_train_s", r.avg_train_s},
                      {"avg_predict_s", r.avg_predict_s},
                      {"per_class", std::move(per_class)},
                      {"confusion", std::move(cm)}};
  if (r.train_accuracy) j["train_accuracy"] = *r.train_accuracy;
  return j;
}

std::string curve_csv(const EvalReport& r) {
  std::string out = "window,accuracy\n";
  for (const auto& p : r.curve) out += std::to_string(p.window_index) + "," + fmt_double(p.accuracy) + "\n";
  return out;
}

std::string prediction_log_line(const PredictionRecord& rec, const LabelRegistry& labels) {
  std::string line = std::to_string(rec.window_index) + "," + labels.name(rec.truth) + ",";
  if (rec.predicted) line += labels.name(*rec.predicted);
  line += rec.correct() ? ",1," : ",0,";
  for (std::size_t i = 0; i < rec.scores.size(); ++i) {
    if (i) line += ';';
    line += fmt_double(rec.scores[i].score);
  }
  return line;
}

std::string prediction_log_csv(std::span<const PredictionRecord> log, const LabelRegistry& labels) {
  std::string out = "window,true,predicted,correct,scores\n";
  for (const auto& rec : log) out += prediction_log_line(rec, labels) + "\n";
  return out;
}

std::string comparison_table(std::span<const EvalReport> reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %9s %9s %9s %9s %14s %16s\n", "Algorithms", "Precision", "Recall",
                "F1-Score", "Accuracy", "Training Time", "Prediction Time");
  os << line;
  for (const auto& r : reports) {
    const auto& name = r.algorithm;
    std::string display = name;
    for (Algorithm a : kAllAlgorithms)
      if (algorithm_id(a) == name) display = std::string(algorithm_display(a));
    std::snprintf(line, sizeof line, "%-12s %9.0f %9.0f %9.0f %9.2f %14.4f %16.4f\n", display.c_str(),
                  100 * r.macro.precision, 100 * r.macro.recall, 100 * r.macro.f1, 100 * r.accuracy, r.avg_train_s,
                  r.avg_predict_s);
    os << line;
  }
  return os.str();
}

std::string comparison_csv(std::span<const EvalReport> reports) {
  std::string out = "algorithm,precision,recall,f1,accuracy,train_time_s,predict_time_s\n";
  for (const auto& r : reports)
    out += r.algorithm + "," + fmt_double(r.macro.precision) + "," + fmt_double(r.macro.recall) + "," +
           fmt_double(r.macro.f1) + "," + fmt_double(r.accuracy) + "," + fmt_double(r.avg_train_s) + "," +
           fmt_double(r.avg_predict_s) + "\n";
  return out;
}

}  // namespace streamhar
