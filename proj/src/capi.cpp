#include "streamhar/streamhar.h"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "streamhar/bench.hpp"
#include "streamhar/error.hpp"
#include "streamhar/server.hpp"
#include "streamhar/synth.hpp"

struct shar_recording {
  streamhar::Recording rec;
};

struct shar_learner {
  std::unique_ptr<streamhar::OnlineClassifier> model;
};

struct shar_server {
  std::unique_ptr<streamhar::Server> server;
};

namespace {

using namespace streamhar;
using json = nlohmann::json;

thread_local std::string last_error;

int fail(int status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
int guarded(F&& f) {
  try {
    f();
    return SHAR_OK;
  } catch (const Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const json::exception& e) {
    return fail(SHAR_E_INVALID_ARGUMENT, std::string("bad JSON: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SHAR_E_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SHAR_E_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

json parse_config(const char* text) {
  if (!text || !*text) return json::object();
  auto j = json::parse(text);
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "configuration must be a JSON object");
  return j;
}

void require(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

std::vector<Algorithm> algorithms_from(const json& j, std::vector<Algorithm> fallback) {
  auto it = j.find("algos");
  if (it == j.end()) return fallback;
  std::vector<Algorithm> out;
  if (it->is_string()) {
    std::stringstream ss(it->get<std::string>());
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(parse_algorithm(item));
  } else {
    for (const auto& a : *it) out.push_back(parse_algorithm(a.get<std::string>()));
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "algorithm list is empty");
  return out;
}

PipelineConfig pipeline_from(const json& j) {
  PipelineConfig p;
  p.window.size = j.value("window", p.window.size);
  p.window.rate_hz = j.value("rate_hz", p.window.rate_hz);
  p.features.sma_absolute = !j.value("sma_literal", false);
  p.features.autocorr_lag = j.value("autocorr_lag", p.features.autocorr_lag);
  if (p.window.size < 2) throw Error(ErrorCode::InvalidArgument, "window must hold at least 2 samples");
  if (!(p.window.rate_hz > 0)) throw Error(ErrorCode::InvalidArgument, "rate_hz must be positive");
  if (p.features.autocorr_lag >= p.window.size)
    throw Error(ErrorCode::InvalidArgument, "autocorr_lag must be smaller than the window");
  return p;
}

LearnerConfig learner_from(const json& j) {
  LearnerConfig c;
  if (auto it = j.find("learner"); it != j.end()) c = learner_config_from_json(*it, c);
  c.seed = j.value("seed", c.seed);
  return c;
}

const std::vector<Algorithm> kAll{std::begin(kAllAlgorithms), std::end(kAllAlgorithms)};

}  // namespace

extern "C" {

const char* shar_version(void) { return "1.0.0"; }

const char* shar_last_error(void) { return last_error.c_str(); }

const char* shar_status_name(int status) {
  if (status == SHAR_OK) return "OK";
  if (status == SHAR_E_INTERNAL) return "Internal";
  if (status < 1 || status > SHAR_E_SNAPSHOT_FORMAT) return "Unknown";
  return to_string(static_cast<ErrorCode>(status)).data();
}

void shar_string_free(char* s) { std::free(s); }

int shar_set_log_level(const char* level) {
  return guarded([&] {
    require(level, "level");
    const auto lvl = spdlog::level::from_str(level);
    if (lvl == spdlog::level::off && std::string(level) != "off")
      throw Error(ErrorCode::InvalidArgument, std::string("unknown log level '") + level + "'");
    spdlog::set_level(lvl);
  });
}

int shar_recording_generate(const char* scenario_json, const char* profiles_json, shar_recording** out) {
  return guarded([&] {
    require(out, "out");
    const auto cfg = parse_config(scenario_json);
    ScenarioScript script;
    std::vector<ActivityProfile> profiles;
    if (cfg.contains("segments")) {
      script = scenario_from_json(cfg);
    } else {
      const auto kind = cfg.value("scenario", std::string("paper"));
      if (kind != "paper") throw Error(ErrorCode::InvalidArgument, "unknown scenario '" + kind + "'");
      const auto n = cfg.value("activities", std::size_t{5});
      script = paper_scenario(n, cfg.value("seed", std::uint64_t{1}), cfg.value("onset_delay_s", 2.0));
      script.jitter_samples = cfg.value("jitter_samples", std::size_t{0});
    }
    if (profiles_json && *profiles_json) {
      profiles = profiles_from_json(json::parse(profiles_json));
    } else {
      // The five-activity set when it covers the script, the twenty otherwise.
      profiles = default_profiles(ProfileSet::WellSeparated);
      for (const auto& seg : script.segments) {
        bool known = false;
        for (const auto& p : profiles) known = known || p.name == seg.activity;
        if (!known) {
          profiles = default_profiles(ProfileSet::Table1);
          break;
        }
      }
    }
    auto h = std::make_unique<shar_recording>();
    h->rec = generate(profiles, script);
    *out = h.release();
  });
}

int shar_recording_load_csv(const char* path, shar_recording** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto h = std::make_unique<shar_recording>();
    h->rec = replay(std::filesystem::path(path));
    *out = h.release();
  });
}

int shar_recording_save_csv(const shar_recording* rec, const char* path) {
  return guarded([&] {
    require(rec, "recording");
    require(path, "path");
    record(rec->rec, std::filesystem::path(path));
  });
}

size_t shar_recording_size(const shar_recording* rec) { return rec ? rec->rec.samples.size() : 0; }

size_t shar_recording_label_count(const shar_recording* rec) { return rec ? rec->rec.labels.size() : 0; }

void shar_recording_free(shar_recording* rec) { delete rec; }

int shar_default_profiles(const char* set, char** out_json) {
  return guarded([&] {
    require(out_json, "out_json");
    const std::string name = set ? set : "well-separated";
    ProfileSet ps;
    if (name == "well-separated") ps = ProfileSet::WellSeparated;
    else if (name == "table1") ps = ProfileSet::Table1;
    else throw Error(ErrorCode::InvalidArgument, "unknown profile set '" + name + "'");
    *out_json = dup_string(profiles_to_json(default_profiles(ps)).dump(2));
  });
}

int shar_extract_csv(const shar_recording* rec, const char* config_json, const char* out_path,
                     const char* manifest_path, size_t* out_windows) {
  return guarded([&] {
    require(rec, "recording");
    require(out_path, "out_path");
    const auto cfg = parse_config(config_json);
    const auto pipeline = pipeline_from(cfg);
    const bool normalize = cfg.value("normalize", false);
    const auto vectors = normalize ? featurize(rec->rec.samples, pipeline) : raw_features(rec->rec.samples, pipeline);

    std::ofstream os(out_path);
    if (!os) throw Error(ErrorCode::IoError, std::string("cannot write '") + out_path + "'");
    char name[8];
    for (std::size_t i = 0; i < kFeatureDim; ++i) {
      std::snprintf(name, sizeof name, "f%03zu,", i);
      os << name;
    }
    os << "label\n";
    for (const auto& v : vectors) {
      std::string row;
      row.reserve(2048);
      char buf[32];
      for (double x : v.values) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
        row.append(buf, end);
        row += ',';
      }
      if (v.label) row += rec->rec.labels.name(*v.label);
      os << row << '\n';
    }
    if (!os) throw Error(ErrorCode::IoError, std::string("failed writing '") + out_path + "'");

    if (manifest_path) {
      json columns = json::array();
      const auto& names = feature_names();
      for (std::size_t i = 0; i < names.size(); ++i) {
        char col[8];
        std::snprintf(col, sizeof col, "f%03zu", i);
        columns.push_back({{"column", col}, {"index", i}, {"feature", names[i]}});
      }
      json manifest = {{"dimension", kFeatureDim},
                       {"window", pipeline.window.size},
                       {"rate_hz", pipeline.window.rate_hz},
                       {"autocorr_lag", pipeline.features.autocorr_lag},
                       {"sma", pipeline.features.sma_absolute ? "absolute" : "literal"},
                       {"normalized", normalize},
                       {"layout", "accel x(16), accel y(16), accel z(16), accel sma, gyro x(16), gyro y(16), "
                                  "gyro z(16), gyro sma; each 16 = 11 time + 5 frequency features"},
                       {"columns", std::move(columns)}};
      std::ofstream ms(manifest_path);
      if (!ms) throw Error(ErrorCode::IoError, std::string("cannot write '") + manifest_path + "'");
      ms << manifest.dump(2) << '\n';
    }
    if (out_windows) *out_windows = vectors.size();
  });
}

int shar_bench(const shar_recording* const* recs, size_t n_recs, const uint64_t* seeds, const char* config_json,
               const char* out_dir, char** out_summary) {
  return guarded([&] {
    require(recs, "recordings");
    if (n_recs == 0) throw Error(ErrorCode::InvalidArgument, "bench needs at least one recording");
    const auto cfg = parse_config(config_json);
    BenchConfig bc;
    bc.algorithms = algorithms_from(cfg, kAll);
    bc.learner = learner_from(cfg);
    bc.pipeline = pipeline_from(cfg);
    std::vector<BenchRun> runs;
    for (size_t i = 0; i < n_recs; ++i) {
      require(recs[i], "recording");
      bc.seed = seeds ? seeds[i] : bc.learner.seed;
      spdlog::info("bench_run seed={} samples={} algos={}", bc.seed, recs[i]->rec.samples.size(), bc.algorithms.size());
      runs.push_back(run_bench(recs[i]->rec, bc));
    }
    auto summary = bench_summary(runs);
    if (out_dir) {
      json files = json::array();
      for (const auto& run : runs)
        for (const auto& p : write_bench_run(run, out_dir)) files.push_back(p.string());
      for (const auto& p : write_averages(runs, out_dir)) files.push_back(p.string());
      summary["files"] = std::move(files);
    }
    summary["table"] = comparison_table(runs.front().reports);
    summary["averages_table"] = comparison_table(average_reports(runs));
    if (out_summary) *out_summary = dup_string(summary.dump(2));
  });
}

int shar_batch_compare(const shar_recording* rec, const char* config_json, char** out_json) {
  return guarded([&] {
    require(rec, "recording");
    require(out_json, "out_json");
    const auto cfg = parse_config(config_json);
    BatchCompareConfig bc;
    bc.algorithms = algorithms_from(cfg, kAll);
    bc.learner = learner_from(cfg);
    bc.pipeline = pipeline_from(cfg);
    bc.seed = bc.learner.seed;
    bc.epochs = cfg.value("epochs", 1);
    bc.test_fraction = cfg.value("test_fraction", 0.2);
    const auto rows = run_batch_compare(rec->rec, bc);
    json out = {{"table", batch_compare_table(rows, bc.epochs)},
                {"csv", batch_compare_csv(rows)},
                {"result", batch_compare_json(rows, bc)}};
    *out_json = dup_string(out.dump(2));
  });
}

int shar_learner_create(const char* algo, const char* config_json, shar_learner** out) {
  return guarded([&] {
    require(algo, "algo");
    require(out, "out");
    const auto cfg = parse_config(config_json);
    auto h = std::make_unique<shar_learner>();
    h->model = make_classifier(parse_algorithm(algo), learner_from(cfg));
    *out = h.release();
  });
}

int shar_learner_learn(shar_learner* l, const double* x, size_t dim, int label) {
  return guarded([&] {
    require(l, "learner");
    require(x, "x");
    l->model->learn(std::span<const double>(x, dim), label);
  });
}

int shar_learner_predict(const shar_learner* l, const double* x, size_t dim, int* has_prediction, int* label,
                         double* scores, size_t scores_cap, size_t* n_scores) {
  return guarded([&] {
    require(l, "learner");
    require(x, "x");
    require(has_prediction, "has_prediction");
    const auto p = l->model->predict(std::span<const double>(x, dim));
    *has_prediction = p ? 1 : 0;
    if (n_scores) *n_scores = p ? p->scores.size() : 0;
    if (!p) return;
    if (label) *label = p->label;
    if (scores)
      for (std::size_t i = 0; i < p->scores.size() && i < scores_cap; ++i) scores[i] = p->scores[i].score;
  });
}

uint64_t shar_learner_seen(const shar_learner* l) { return l ? l->model->examples_seen() : 0; }

int shar_learner_save(const shar_learner* l, const char* path) {
  return guarded([&] {
    require(l, "learner");
    require(path, "path");
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::IoError, std::string("cannot write '") + path + "'");
    l->model->save(os);
    if (!os) throw Error(ErrorCode::IoError, std::string("failed writing '") + path + "'");
  });
}

int shar_learner_load(const char* path, shar_learner** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::IoError, std::string("cannot open '") + path + "'");
    auto h = std::make_unique<shar_learner>();
    h->model = load_classifier(is);
    *out = h.release();
  });
}

void shar_learner_free(shar_learner* l) { delete l; }

int shar_server_create(const char* config_json, shar_server** out) {
  return guarded([&] {
    require(out, "out");
    const auto cfg = parse_config(config_json);
    ServerConfig sc;
    sc.address = cfg.value("address", sc.address);
    sc.port = cfg.value("port", sc.port);
    if (cfg.contains("tcp_port") && !cfg["tcp_port"].is_null()) sc.tcp_port = cfg["tcp_port"].get<std::uint16_t>();
    sc.inbox_capacity = cfg.value("inbox", sc.inbox_capacity);
    sc.io_threads = cfg.value("threads", sc.io_threads);
    sc.defaults.algorithms = algorithms_from(cfg, sc.defaults.algorithms);
    sc.defaults.learner = learner_from(cfg);
    sc.defaults.pipeline = pipeline_from(cfg);
    auto h = std::make_unique<shar_server>();
    h->server = std::make_unique<Server>(std::move(sc));
    *out = h.release();
  });
}

int shar_server_start(shar_server* s) {
  return guarded([&] {
    require(s, "server");
    s->server->start();
  });
}

int shar_server_run(shar_server* s) {
  return guarded([&] {
    require(s, "server");
    s->server->run();
  });
}

int shar_server_stop(shar_server* s) {
  return guarded([&] {
    require(s, "server");
    s->server->stop();
  });
}

int shar_server_port(const shar_server* s) { return s ? s->server->port() : 0; }

int shar_server_tcp_port(const shar_server* s) {
  return s && s->server->tcp_port() ? *s->server->tcp_port() : 0;
}

int shar_server_health(const shar_server* s, char** out_json) {
  return guarded([&] {
    require(s, "server");
    require(out_json, "out_json");
    *out_json = dup_string(s->server->health().dump());
  });
}

void shar_server_free(shar_server* s) { delete s; }

int shar_replay(const shar_recording* rec, const char* url, const char* options_json, char** out_ndjson) {
  return guarded([&] {
    require(rec, "recording");
    require(url, "url");
    const auto cfg = parse_config(options_json);
    ReplayOptions opt;
    opt.url = url;
    opt.algorithms = algorithms_from(cfg, opt.algorithms);
    opt.seed = cfg.value("seed", opt.seed);
    opt.speed = cfg.value("speed", opt.speed);
    opt.pipeline = pipeline_from(cfg);
    if (opt.speed < 0) throw Error(ErrorCode::InvalidArgument, "speed must be non-negative");
    const auto events = replay_to_server(rec->rec, opt);
    std::string out;
    for (const auto& ev : events) out += ev.dump() + "\n";
    if (out_ndjson) *out_ndjson = dup_string(out);
  });
}

}  // extern "C"
