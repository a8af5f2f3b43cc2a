// Exercises the shared library through its C header only.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "streamhar/streamhar.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("streamhar_capi_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  shar_string_free(s);
  return out;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream is(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(is, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(shar_version()) > 0);
  CHECK(std::string(shar_status_name(SHAR_OK)) == "OK");
  CHECK(std::string(shar_status_name(SHAR_E_UNKNOWN_ALGORITHM)) == "UnknownAlgorithm");
  CHECK(std::string(shar_status_name(SHAR_E_BIND)) == "BindFailure");
  CHECK(std::string(shar_status_name(1234)) == "Unknown");
  CHECK(shar_set_log_level("warn") == SHAR_OK);
  CHECK(shar_set_log_level("loud") == SHAR_E_INVALID_ARGUMENT);
}

TEST_CASE("generate, save, load and extract") {
  shar_recording* rec = nullptr;
  REQUIRE(shar_recording_generate("{\"scenario\":\"paper\",\"seed\":4}", nullptr, &rec) == SHAR_OK);
  CHECK(shar_recording_size(rec) == 24000);
  CHECK(shar_recording_label_count(rec) == 5);

  const auto csv = scratch("s.csv");
  REQUIRE(shar_recording_save_csv(rec, csv.c_str()) == SHAR_OK);
  shar_recording* back = nullptr;
  REQUIRE(shar_recording_load_csv(csv.c_str(), &back) == SHAR_OK);
  CHECK(shar_recording_size(back) == 24000);

  const auto features = scratch("f.csv");
  const auto manifest = scratch("f.manifest.json");
  std::size_t windows = 0;
  REQUIRE(shar_extract_csv(back, nullptr, features.c_str(), manifest.c_str(), &windows) == SHAR_OK);
  CHECK(windows == 600);
  CHECK(count_lines(features) == 601);
  std::ifstream head(features);
  std::string header;
  std::getline(head, header);
  CHECK(header.rfind("f000,f001,", 0) == 0);
  CHECK(header.size() >= 10);
  CHECK(header.substr(header.size() - 10) == "f097,label");
  CHECK(fs::file_size(manifest) > 0);

  shar_recording_free(rec);
  shar_recording_free(back);
}

TEST_CASE("errors carry status and message") {
  shar_recording* rec = nullptr;
  CHECK(shar_recording_load_csv("/nonexistent.csv", &rec) == SHAR_E_IO);
  CHECK(std::string(shar_last_error()).find("nonexistent") != std::string::npos);
  CHECK(rec == nullptr);
  CHECK(shar_recording_generate("{\"scenario\":\"mars\"}", nullptr, &rec) == SHAR_E_INVALID_ARGUMENT);
  CHECK(shar_recording_generate("{not json", nullptr, &rec) == SHAR_E_INVALID_ARGUMENT);
  CHECK(shar_recording_generate(
            "{\"segments\":[{\"activity\":\"Flying\",\"duration_s\":4}]}", nullptr, &rec) == SHAR_E_UNKNOWN_ACTIVITY);
  CHECK(shar_recording_generate(nullptr, nullptr, nullptr) == SHAR_E_INVALID_ARGUMENT);
  shar_learner* l = nullptr;
  CHECK(shar_learner_create("svm", nullptr, &l) == SHAR_E_UNKNOWN_ALGORITHM);
  // NULL handles are safe in the non-failing accessors
  CHECK(shar_recording_size(nullptr) == 0);
  shar_recording_free(nullptr);
  shar_learner_free(nullptr);
  shar_server_free(nullptr);
}

TEST_CASE("last error is per thread") {
  shar_recording* rec = nullptr;
  REQUIRE(shar_recording_load_csv("/nonexistent.csv", &rec) != SHAR_OK);
  std::string other;
  std::thread t([&] {
    shar_learner* l = nullptr;
    shar_learner_create("svm", nullptr, &l);
    other = shar_last_error();
  });
  t.join();
  CHECK(other.find("svm") != std::string::npos);
  CHECK(std::string(shar_last_error()).find("nonexistent") != std::string::npos);
}

TEST_CASE("learner lifecycle and snapshots") {
  shar_learner* l = nullptr;
  REQUIRE(shar_learner_create("inb", "{\"learner\":{\"dim\":3}}", &l) == SHAR_OK);
  const double a[3] = {0, 0, 0}, b[3] = {5, 5, 5}, q[3] = {4, 5, 6};
  int has = 1, label = -1;
  double scores[4] = {};
  std::size_t n = 9;
  REQUIRE(shar_learner_predict(l, a, 3, &has, &label, scores, 4, &n) == SHAR_OK);
  CHECK(has == 0);
  CHECK(n == 0);
  CHECK(shar_learner_learn(l, a, 3, 0) == SHAR_OK);
  CHECK(shar_learner_learn(l, b, 3, 1) == SHAR_OK);
  CHECK(shar_learner_learn(l, b, 2, 1) == SHAR_E_DIMENSION_MISMATCH);
  CHECK(shar_learner_seen(l) == 2);
  REQUIRE(shar_learner_predict(l, q, 3, &has, &label, scores, 4, &n) == SHAR_OK);
  CHECK(has == 1);
  CHECK(label == 1);
  CHECK(n == 2);
  CHECK(scores[1] > scores[0]);

  const auto snap = scratch("nb.json");
  REQUIRE(shar_learner_save(l, snap.c_str()) == SHAR_OK);
  shar_learner* copy = nullptr;
  REQUIRE(shar_learner_load(snap.c_str(), &copy) == SHAR_OK);
  int has2 = 0, label2 = -1;
  double scores2[4] = {};
  REQUIRE(shar_learner_predict(copy, q, 3, &has2, &label2, scores2, 4, nullptr) == SHAR_OK);
  CHECK(label2 == label);
  CHECK(scores2[0] == scores[0]);
  CHECK(scores2[1] == scores[1]);
  CHECK(shar_learner_seen(copy) == 2);

  std::ofstream(scratch("junk.json")) << "[1,2,3]";
  shar_learner* junk = nullptr;
  CHECK(shar_learner_load(scratch("junk.json").c_str(), &junk) == SHAR_E_SNAPSHOT_FORMAT);
  shar_learner_free(l);
  shar_learner_free(copy);
}

TEST_CASE("bench writes reports for the chosen algorithms") {
  shar_recording* rec = nullptr;
  REQUIRE(shar_recording_generate("{\"seed\":2}", nullptr, &rec) == SHAR_OK);
  const shar_recording* recs[] = {rec};
  const std::uint64_t seeds[] = {2};
  const auto dir = scratch("bench");
  char* summary = nullptr;
  REQUIRE(shar_bench(recs, 1, seeds, "{\"algos\":\"iknn,inb\"}", dir.c_str(), &summary) == SHAR_OK);
  const auto text = take(summary);
  CHECK(text.find("\"iknn\"") != std::string::npos);
  CHECK(text.find("\"idt\"") == std::string::npos);
  CHECK(fs::exists(dir / "report_iknn_seed2.json"));
  CHECK(fs::exists(dir / "report_inb_seed2.txt"));
  CHECK(fs::exists(dir / "curve_inb_seed2.csv"));
  CHECK(fs::exists(dir / "comparison_seed2.txt"));
  CHECK(fs::exists(dir / "averages.txt"));
  CHECK_FALSE(fs::exists(dir / "report_idt_seed2.json"));
  CHECK(shar_bench(recs, 0, seeds, nullptr, nullptr, nullptr) == SHAR_E_INVALID_ARGUMENT);

  char* batch = nullptr;
  REQUIRE(shar_batch_compare(rec, "{\"algos\":[\"inb\"],\"epochs\":2}", &batch) == SHAR_OK);
  const auto b = take(batch);
  CHECK(b.find("Accuracy (Test/Training)") != std::string::npos);
  CHECK(b.find("\"epochs\": 2") != std::string::npos);
  shar_recording_free(rec);
}

TEST_CASE("profiles as JSON") {
  char* out = nullptr;
  REQUIRE(shar_default_profiles("table1", &out) == SHAR_OK);
  CHECK(take(out).find("Walking") != std::string::npos);
  CHECK(shar_default_profiles("nope", &out) == SHAR_E_INVALID_ARGUMENT);
}

TEST_CASE("server and replay through the C interface") {
  shar_server* srv = nullptr;
  REQUIRE(shar_server_create("{\"port\":0,\"tcp_port\":0,\"algos\":\"inb\"}", &srv) == SHAR_OK);
  REQUIRE(shar_server_start(srv) == SHAR_OK);
  const int port = shar_server_port(srv);
  CHECK(port > 0);
  CHECK(shar_server_tcp_port(srv) > 0);
  std::thread runner([&] { shar_server_run(srv); });

  shar_recording* rec = nullptr;
  REQUIRE(shar_recording_generate("{\"seed\":5}", nullptr, &rec) == SHAR_OK);
  char* events = nullptr;
  const std::string url = "ws://127.0.0.1:" + std::to_string(port) + "/stream";
  REQUIRE(shar_replay(rec, url.c_str(), "{\"seed\":5}", &events) == SHAR_OK);
  const auto text = take(events);
  std::size_t predictions = 0;
  for (std::size_t pos = 0; (pos = text.find("\"type\":\"prediction\"", pos)) != std::string::npos; ++pos) ++predictions;
  CHECK(predictions == 600);

  char* health = nullptr;
  REQUIRE(shar_server_health(srv, &health) == SHAR_OK);
  CHECK(take(health).find("\"sessions_total\":1") != std::string::npos);

  CHECK(shar_server_stop(srv) == SHAR_OK);
  runner.join();
  shar_server_free(srv);
  shar_recording_free(rec);

  char* nothing = nullptr;
  shar_recording* r2 = nullptr;
  REQUIRE(shar_recording_generate("{\"seed\":1,\"activities\":1}", nullptr, &r2) == SHAR_OK);
  CHECK(shar_replay(r2, ("ws://127.0.0.1:" + std::to_string(port) + "/stream").c_str(), nullptr, &nothing) != SHAR_OK);
  shar_recording_free(r2);
}
