#include "streamhar/bench.hpp"

#include <cstdio>
#include <fstream>

#include "streamhar/error.hpp"

namespace streamhar {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content, std::vector<fs::path>& written) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  os << content;
  if (!os) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
  written.push_back(path);
}

std::string report_text(const EvalReport& r, const LabelRegistry& labels) {
  std::string out = comparison_table(std::span<const EvalReport>(&r, 1));
  out += "\nPer class\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-32s %9s %9s %9s %8s\n", "Activity", "Precision", "Recall", "F1-Score", "Support");
  out += line;
  for (const auto& k : r.macro.per_class) {
    std::snprintf(line, sizeof line, "%-32s %9.2f %9.2f %9.2f %8llu\n", labels.name(k.label).c_str(),
                  100 * k.precision, 100 * k.recall, 100 * k.f1, static_cast<unsigned long long>(k.support));
    out += line;
  }
  return out;
}

}  // namespace

BenchRun run_bench(const Recording& rec, const BenchConfig& config) {
  if (config.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "bench needs at least one algorithm");
  BenchRun run;
  run.seed = config.seed;
  run.labels = rec.labels;
  run.samples = rec.samples.size();
  const auto stream = featurize(rec.samples, config.pipeline);
  run.windows = stream.size();
  LearnerConfig learner = config.learner;
  learner.seed = config.seed;
  for (auto a : config.algorithms) {
    auto model = make_classifier(a, learner);
    run.reports.push_back(run_prequential(stream, *model));
  }
  return run;
}

std::vector<fs::path> write_bench_run(const BenchRun& run, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  const auto tag = "_seed" + std::to_string(run.seed);
  for (const auto& r : run.reports) {
    const auto stem = r.algorithm + tag;
    auto j = report_to_json(r, run.labels);
    j["seed"] = run.seed;
    j["samples"] = run.samples;
    j["windows"] = run.windows;
    write_file(dir / ("report_" + stem + ".json"), j.dump(2) + "\n", written);
    write_file(dir / ("report_" + stem + ".txt"), report_text(r, run.labels), written);
    write_file(dir / ("curve_" + stem + ".csv"), curve_csv(r), written);
    write_file(dir / ("predictions_" + stem + ".csv"), prediction_log_csv(r.log, run.labels), written);
  }
  write_file(dir / ("comparison" + tag + ".txt"), comparison_table(run.reports), written);
  write_file(dir / ("comparison" + tag + ".csv"), comparison_csv(run.reports), written);
  return written;
}

std::vector<EvalReport> average_reports(const std::vector<BenchRun>& runs) {
  std::vector<EvalReport> out;
  if (runs.empty()) return out;
  for (std::size_t a = 0; a < runs.front().reports.size(); ++a) {
    EvalReport avg;
    avg.algorithm = runs.front().reports[a].algorithm;
    for (const auto& run : runs) {
      const auto& r = run.reports.at(a);
      avg.accuracy += r.accuracy;
      avg.macro.precision += r.macro.precision;
      avg.macro.recall += r.macro.recall;
      avg.macro.f1 += r.macro.f1;
      avg.avg_train_s += r.avg_train_s;
      avg.avg_predict_s += r.avg_predict_s;
      avg.evaluated += r.evaluated;
    }
    const auto n = static_cast<double>(runs.size());
    avg.accuracy /= n;
    avg.macro.precision /= n;
    avg.macro.recall /= n;
    avg.macro.f1 /= n;
    avg.avg_train_s /= n;
    avg.avg_predict_s /= n;
    out.push_back(std::move(avg));
  }
  return out;
}

std::vector<fs::path> write_averages(const std::vector<BenchRun>& runs, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  const auto avg = average_reports(runs);
  std::string header = "Average over " + std::to_string(runs.size()) + " subject(s), seeds";
  for (const auto& r : runs) header += " " + std::to_string(r.seed);
  write_file(dir / "averages.txt", header + "\n" + comparison_table(avg), written);
  write_file(dir / "averages.csv", comparison_csv(avg), written);
  return written;
}

nlohmann::json bench_summary(const std::vector<BenchRun>& runs) {
  nlohmann::json j = {{"subjects", runs.size()}, {"runs", nlohmann::json::array()}};
  for (const auto& run : runs) {
    nlohmann::json algos = nlohmann::json::array();
    for (const auto& r : run.reports)
      algos.push_back({{"algorithm", r.algorithm},
                       {"accuracy", r.accuracy},
                       {"precision", r.macro.precision},
                       {"recall", r.macro.recall},
                       {"f1", r.macro.f1},
                       {"avg_train_s", r.avg_train_s},
                       {"avg_predict_s", r.avg_predict_s}});
    j["runs"].push_back({{"seed", run.seed}, {"samples", run.samples}, {"windows", run.windows}, {"algorithms", algos}});
  }
  nlohmann::json averages = nlohmann::json::array();
  for (const auto& r : average_reports(runs))
    averages.push_back({{"algorithm", r.algorithm}, {"accuracy", r.accuracy}, {"f1", r.macro.f1}});
  j["averages"] = std::move(averages);
  return j;
}

std::vector<BatchCompareRow> run_batch_compare(const Recording& rec, const BatchCompareConfig& config) {
  if (config.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "batch-compare needs at least one algorithm");
  const auto stream = featurize(rec.samples, config.pipeline);
  const auto split = stratified_split(stream, config.test_fraction, config.seed);
  LearnerConfig learner = config.learner;
  learner.seed = config.seed;
  std::vector<BatchCompareRow> rows;
  for (auto a : config.algorithms) {
    auto online = make_classifier(a, learner);
    const auto preq = run_prequential(stream, *online);
    auto batch = make_classifier(a, learner);
    ClassifierModel model(*batch);
    const auto held = run_batch_holdout(split.train, split.test, model, config.epochs, config.seed,
                                        std::string(algorithm_id(a)));
    BatchCompareRow row;
    row.algorithm = std::string(algorithm_id(a));
    row.prequential_accuracy = preq.accuracy;
    row.test_accuracy = held.accuracy;
    row.train_accuracy = held.train_accuracy.value_or(0.0);
    row.gap = 100 * (held.accuracy - preq.accuracy);
    rows.push_back(row);
  }
  return rows;
}

std::string batch_compare_table(const std::vector<BatchCompareRow>& rows, int epochs) {
  std::string out = "Batch holdout (" + std::to_string(epochs) + " epoch(s)) vs prequential\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %22s %12s %10s\n", "Algorithms", "Accuracy (Test/Training)", "Incremental",
                "Gap");
  out += line;
  for (const auto& r : rows) {
    std::string display = r.algorithm;
    for (Algorithm a : kAllAlgorithms)
      if (algorithm_id(a) == r.algorithm) display = std::string(algorithm_display(a));
    char acc[64];
    std::snprintf(acc, sizeof acc, "%.2f/%.2f", 100 * r.test_accuracy, 100 * r.train_accuracy);
    std::snprintf(line, sizeof line, "%-12s %22s %12.2f %+10.2f\n", display.c_str(), acc, 100 * r.prequential_accuracy,
                  r.gap);
    out += line;
  }
  return out;
}

std::string batch_compare_csv(const std::vector<BatchCompareRow>& rows) {
  std::string out = "algorithm,test_accuracy,train_accuracy,prequential_accuracy,gap_points\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%s,%.6f,%.6f,%.6f,%.4f\n", r.algorithm.c_str(), r.test_accuracy,
                  r.train_accuracy, r.prequential_accuracy, r.gap);
    out += line;
  }
  return out;
}

nlohmann::json batch_compare_json(const std::vector<BatchCompareRow>& rows, const BatchCompareConfig& config) {
  nlohmann::json j = {{"seed", config.seed},
                      {"epochs", config.epochs},
                      {"test_fraction", config.test_fraction},
                      {"rows", nlohmann::json::array()}};
  for (const auto& r : rows)
    j["rows"].push_back({{"algorithm", r.algorithm},
                         {"test_accuracy", r.test_accuracy},
                         {"train_accuracy", r.train_accuracy},
                         {"prequential_accuracy", r.prequential_accuracy},
                         {"gap_points", r.gap}});
  return j;
}

}  // namespace streamhar
