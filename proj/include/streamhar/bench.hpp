#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamhar/pipeline.hpp"
#include "streamhar/prequential.hpp"
#include "streamhar/synth.hpp"

namespace streamhar {

struct BenchConfig {
  std::vector<Algorithm> algorithms{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
  LearnerConfig learner;
  PipelineConfig pipeline;
  std::uint64_t seed = 1;
};

// One prequential pass per algorithm over the same normalized stream.
struct BenchRun {
  std::uint64_t seed = 1;
  LabelRegistry labels;
  std::size_t samples = 0;
  std::size_t windows = 0;
  std::vector<EvalReport> reports;
};

BenchRun run_bench(const Recording& rec, const BenchConfig& config);

// Writes per-algorithm report (json, txt), learning curve and prediction log
// CSVs plus the comparison table for one run. File names embed algorithm and
// seed. Returns the paths written.
std::vector<std::filesystem::path> write_bench_run(const BenchRun& run, const std::filesystem::path& dir);

// Mean metrics per algorithm across runs (one run per subject).
std::vector<EvalReport> average_reports(const std::vector<BenchRun>& runs);
std::vector<std::filesystem::path> write_averages(const std::vector<BenchRun>& runs, const std::filesystem::path& dir);

nlohmann::json bench_summary(const std::vector<BenchRun>& runs);

struct BatchCompareConfig {
  std::vector<Algorithm> algorithms{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};
  LearnerConfig learner;
  PipelineConfig pipeline;
  std::uint64_t seed = 1;
  int epochs = 1;
  double test_fraction = 0.2;
};

struct BatchCompareRow {
  std::string algorithm;
  double prequential_accuracy = 0;
  double test_accuracy = 0;
  double train_accuracy = 0;
  double gap = 0;  // test - prequential, in accuracy points
};

std::vector<BatchCompareRow> run_batch_compare(const Recording& rec, const BatchCompareConfig& config);
std::string batch_compare_table(const std::vector<BatchCompareRow>& rows, int epochs);
std::string batch_compare_csv(const std::vector<BatchCompareRow>& rows);
nlohmann::json batch_compare_json(const std::vector<BatchCompareRow>& rows, const BatchCompareConfig& config);

}  // namespace streamhar
