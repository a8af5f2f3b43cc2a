// streamhar command line: gen, extract, bench, batch-compare, serve, replay.
#include <pthread.h>
#include <signal.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "streamhar/streamhar.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(int status, const std::string& what) {
  if (status != SHAR_OK)
    throw RuntimeFailure(what + ": " + shar_status_name(status) + ": " + shar_last_error());
}

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { shar_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct RecordingPtr {
  shar_recording* p = nullptr;
  RecordingPtr() = default;
  RecordingPtr(RecordingPtr&& o) noexcept : p(std::exchange(o.p, nullptr)) {}
  ~RecordingPtr() { shar_recording_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeFailure("cannot write '" + path.string() + "'");
  os << content;
}

// Options shared by every command. Values from --config fill in whatever the
// command line leaves unset.
struct Common {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out;
  std::string log_level = "warn";

  json config() const {
    if (config_path.empty()) return json::object();
    json j;
    try {
      j = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      throw RuntimeFailure("config '" + config_path + "': " + e.what());
    }
    if (!j.is_object()) throw RuntimeFailure("config '" + config_path + "' must be a JSON object");
    return j;
  }
};

void add_common(CLI::App* cmd, Common& c, const std::string& out_help) {
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--config", c.config_path, "JSON configuration file; flags take precedence")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, out_help);
  cmd->add_option("--log-level", c.log_level, "trace, debug, info, warn, error or off")->capture_default_str();
}

std::uint64_t seed_of(const Common& c, const json& cfg) {
  return c.seed ? *c.seed : cfg.value("seed", std::uint64_t{1});
}

struct SourceOptions {
  std::vector<std::string> inputs;
  std::string scenario;
  std::optional<std::size_t> activities;
  std::optional<double> onset;
  std::optional<std::size_t> jitter;
  std::string profiles;
};

// Fills source settings the flags left unset from the config file.
SourceOptions with_config(SourceOptions s, const json& cfg) {
  if (s.scenario.empty()) s.scenario = cfg.value("scenario", std::string("paper"));
  if (!s.activities) s.activities = cfg.value("activities", std::size_t{5});
  if (!s.onset) s.onset = cfg.value("onset_delay_s", 2.0);
  if (!s.jitter) s.jitter = cfg.value("jitter_samples", std::size_t{0});
  if (s.profiles.empty()) s.profiles = cfg.value("profiles", std::string());
  return s;
}

enum class Inputs { None, One, Many };

void add_source(CLI::App* cmd, SourceOptions& s, Inputs inputs) {
  if (inputs != Inputs::None) {
    auto* in = cmd->add_option("--in", s.inputs, inputs == Inputs::Many ? "Sample CSV file(s), one per subject"
                                                                         : "Sample CSV file");
    if (inputs == Inputs::One) in->expected(1);
    in->check(CLI::ExistingFile);
  }
  cmd->add_option("--scenario", s.scenario, "'paper' or a scenario JSON file");
  cmd->add_option("--activities", s.activities, "Activities in the paper scenario")->check(CLI::Range(1, 20));
  cmd->add_option("--onset", s.onset, "Seconds of the previous activity after each label change")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--jitter", s.jitter, "Segment length jitter in samples");
  cmd->add_option("--profiles", s.profiles, "Activity profile JSON file")->check(CLI::ExistingFile);
}

RecordingPtr generate(const SourceOptions& s, std::uint64_t seed) {
  json scenario;
  if (s.scenario.empty() || s.scenario == "paper") {
    scenario = {{"scenario", "paper"},
                {"activities", s.activities.value_or(5)},
                {"seed", seed},
                {"onset_delay_s", s.onset.value_or(2.0)},
                {"jitter_samples", s.jitter.value_or(0)}};
  } else {
    scenario = json::parse(read_file(s.scenario));
    scenario["seed"] = seed;
  }
  const std::string profiles = s.profiles.empty() ? "" : read_file(s.profiles);
  RecordingPtr rec;
  check(shar_recording_generate(scenario.dump().c_str(), profiles.empty() ? nullptr : profiles.c_str(), &rec.p),
        "generate");
  return rec;
}

RecordingPtr load(const std::string& path) {
  RecordingPtr rec;
  check(shar_recording_load_csv(path.c_str(), &rec.p), "load '" + path + "'");
  return rec;
}

// Merges pipeline and learner keys from the config file with flag values.
json engine_config(const json& cfg, std::uint64_t seed, const std::string& algos, std::optional<std::size_t> window,
                   bool sma_literal) {
  json j = json::object();
  for (const char* key : {"algos", "window", "rate_hz", "sma_literal", "autocorr_lag", "learner"})
    if (cfg.contains(key)) j[key] = cfg[key];
  j["seed"] = seed;
  if (!algos.empty()) j["algos"] = algos;
  if (window) j["window"] = *window;
  if (sma_literal) j["sma_literal"] = true;
  return j;
}

int cmd_gen(const Common& c, const SourceOptions& s) {
  const auto cfg = c.config();
  const SourceOptions src = with_config(s, cfg);
  const auto seed = seed_of(c, cfg);
  const auto rec = generate(src, seed);
  const std::string out = c.out.empty() ? cfg.value("out", std::string("samples.csv")) : c.out;
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  check(shar_recording_save_csv(rec.p, out.c_str()), "save");
  std::printf("wrote %zu samples, %zu activities, seed %llu to %s\n", shar_recording_size(rec.p),
              shar_recording_label_count(rec.p), static_cast<unsigned long long>(seed), out.c_str());
  return 0;
}

struct ExtractOptions {
  std::string manifest;
  bool normalize = false;
  bool sma_literal = false;
  std::optional<std::size_t> window;
};

int cmd_extract(const Common& c, const SourceOptions& s, const ExtractOptions& e) {
  const auto cfg = c.config();
  auto j = engine_config(cfg, seed_of(c, cfg), "", e.window, e.sma_literal);
  j.erase("algos");
  j["normalize"] = e.normalize || cfg.value("normalize", false);
  const auto rec = load(s.inputs.at(0));
  const std::string out = c.out.empty() ? "/dev/stdout" : c.out;
  std::string manifest = e.manifest;
  if (manifest.empty() && !c.out.empty()) manifest = fs::path(c.out).replace_extension(".manifest.json").string();
  if (!c.out.empty() && fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::size_t windows = 0;
  check(shar_extract_csv(rec.p, j.dump().c_str(), out.c_str(), manifest.empty() ? nullptr : manifest.c_str(), &windows),
        "extract");
  std::fprintf(stderr, "extracted %zu windows\n", windows);
  return 0;
}

struct EngineOptions {
  std::string algos;
  std::optional<std::size_t> window;
  bool sma_literal = false;
};

void add_engine(CLI::App* cmd, EngineOptions& e) {
  cmd->add_option("--algos,--algo", e.algos, "Comma-separated learners: iknn,idt,irf,iadaboost,inb,nse");
  cmd->add_option("--window", e.window, "Samples per window")->check(CLI::Range(2, 100000));
  cmd->add_flag("--sma-literal", e.sma_literal, "Signless SMA instead of absolute values");
}

std::vector<RecordingPtr> bench_sources(const SourceOptions& s, std::size_t subjects, std::uint64_t seed,
                                        std::vector<std::uint64_t>& seeds) {
  std::vector<RecordingPtr> recs;
  if (!s.inputs.empty()) {
    for (const auto& path : s.inputs) {
      recs.push_back(load(path));
      seeds.push_back(seed);
    }
    return recs;
  }
  for (std::size_t i = 0; i < subjects; ++i) {
    recs.push_back(generate(s, seed + i));
    seeds.push_back(seed + i);
  }
  return recs;
}

int cmd_bench(const Common& c, const SourceOptions& s, const EngineOptions& e, std::size_t subjects) {
  const auto cfg = c.config();
  const auto seed = seed_of(c, cfg);
  const SourceOptions src = with_config(s, cfg);
  std::vector<std::uint64_t> seeds;
  const auto recs = bench_sources(src, subjects, seed, seeds);
  std::vector<const shar_recording*> handles;
  for (const auto& r : recs) handles.push_back(r.p);
  const std::string out = c.out.empty() ? cfg.value("out", std::string("bench_out")) : c.out;
  const auto j = engine_config(cfg, seed, e.algos, e.window, e.sma_literal);
  OwnedString summary;
  check(shar_bench(handles.data(), handles.size(), seeds.data(), j.dump().c_str(), out.c_str(), &summary.p), "bench");
  const auto parsed = json::parse(summary.str());
  std::printf("%s", parsed.at("table").get<std::string>().c_str());
  if (handles.size() > 1) std::printf("\nAverages\n%s", parsed.at("averages_table").get<std::string>().c_str());
  write_file(fs::path(out) / ("summary_seed" + std::to_string(seed) + ".json"), parsed.dump(2) + "\n");
  std::printf("reports written to %s\n", out.c_str());
  return 0;
}

int cmd_batch_compare(const Common& c, const SourceOptions& s, const EngineOptions& e, int epochs,
                      double test_fraction) {
  const auto cfg = c.config();
  const auto seed = seed_of(c, cfg);
  const SourceOptions src = with_config(s, cfg);
  const auto rec = src.inputs.empty() ? generate(src, seed) : load(src.inputs.front());
  auto j = engine_config(cfg, seed, e.algos, e.window, e.sma_literal);
  j["epochs"] = epochs;
  j["test_fraction"] = test_fraction;
  std::fprintf(stderr, "batch-compare: epochs=%d test_fraction=%g seed=%llu\n", epochs, test_fraction,
               static_cast<unsigned long long>(seed));
  OwnedString result;
  check(shar_batch_compare(rec.p, j.dump().c_str(), &result.p), "batch-compare");
  const auto parsed = json::parse(result.str());
  std::printf("%s", parsed.at("table").get<std::string>().c_str());
  if (!c.out.empty()) {
    const auto tag = "_seed" + std::to_string(seed);
    write_file(fs::path(c.out) / ("batch_compare" + tag + ".txt"), parsed.at("table").get<std::string>());
    write_file(fs::path(c.out) / ("batch_compare" + tag + ".csv"), parsed.at("csv").get<std::string>());
    write_file(fs::path(c.out) / ("batch_compare" + tag + ".json"), parsed.at("result").dump(2) + "\n");
  }
  return 0;
}

struct ServeOptions {
  std::string address = "127.0.0.1";
  int port = 8080;
  std::optional<int> tcp_port;
  std::size_t inbox = 4096;
  std::size_t threads = 1;
};

int cmd_serve(const Common& c, const EngineOptions& e, const ServeOptions& o) {
  const auto cfg = c.config();
  auto j = engine_config(cfg, seed_of(c, cfg), e.algos, e.window, e.sma_literal);
  j["address"] = o.address;
  j["port"] = o.port;
  if (o.tcp_port) j["tcp_port"] = *o.tcp_port;
  j["inbox"] = o.inbox;
  j["threads"] = o.threads;

  // Block termination signals before any thread starts so only the waiter
  // below receives them.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  shar_server* server = nullptr;
  check(shar_server_create(j.dump().c_str(), &server), "serve");
  std::unique_ptr<shar_server, void (*)(shar_server*)> guard(server, shar_server_free);
  check(shar_server_start(server), "serve");
  std::printf("listening on ws://%s:%d/stream", o.address.c_str(), shar_server_port(server));
  if (o.tcp_port) std::printf(" and tcp://%s:%d", o.address.c_str(), shar_server_tcp_port(server));
  std::printf("\n");
  std::fflush(stdout);

  std::atomic<bool> running{true};
  std::thread waiter([&] {
    int sig = 0;
    while (running) {
      sigwait(&set, &sig);
      if (!running) break;
      std::fprintf(stderr, "signal %d, shutting down\n", sig);
      shar_server_stop(server);
      break;
    }
  });
  const int status = shar_server_run(server);
  if (running.exchange(false)) pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  check(status, "serve");
  return 0;
}

int cmd_replay(const Common& c, const SourceOptions& s, const EngineOptions& e, const std::string& url, double speed) {
  const auto cfg = c.config();
  const auto rec = load(s.inputs.at(0));
  auto j = engine_config(cfg, seed_of(c, cfg), e.algos, e.window, e.sma_literal);
  j["speed"] = speed;
  OwnedString events;
  check(shar_replay(rec.p, url.c_str(), j.dump().c_str(), &events.p), "replay");
  const auto text = events.str();
  if (c.out.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
  } else {
    write_file(c.out, text);
    std::size_t lines = 0;
    for (char ch : text) lines += ch == '\n';
    std::fprintf(stderr, "wrote %zu events to %s\n", lines, c.out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online human activity recognition from 6-axis inertial streams"};
  app.require_subcommand(1);
  app.set_version_flag("--version", shar_version());

  Common common;
  SourceOptions source;
  EngineOptions engine;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic labeled sample recording (CSV)");
  add_common(gen, common, "Output CSV path (default samples.csv)");
  add_source(gen, source, Inputs::None);

  ExtractOptions extract_opts;
  auto* extract = app.add_subcommand("extract", "Turn a sample CSV into 98-feature window rows");
  add_common(extract, common, "Output feature CSV (default stdout)");
  extract->add_option("--in", source.inputs, "Sample CSV file")->required()->expected(1)->check(CLI::ExistingFile);
  extract->add_option("--manifest", extract_opts.manifest, "Layout manifest path (default <out>.manifest.json)");
  extract->add_flag("--normalize", extract_opts.normalize, "Apply online z-score normalization");
  extract->add_flag("--sma-literal", extract_opts.sma_literal, "Signless SMA instead of absolute values");
  extract->add_option("--window", extract_opts.window, "Samples per window")->check(CLI::Range(2, 100000));

  std::size_t subjects = 1;
  auto* bench = app.add_subcommand("bench", "Prequential comparison of the incremental learners");
  add_common(bench, common, "Report directory (default bench_out)");
  add_source(bench, source, Inputs::Many);
  add_engine(bench, engine);
  bench->add_option("--subjects", subjects, "Synthetic subjects, seeds seed..seed+N-1")->check(CLI::Range(1, 100));

  int epochs = 1;
  double test_fraction = 0.2;
  auto* batch = app.add_subcommand("batch-compare", "Batch holdout accuracy against prequential accuracy");
  add_common(batch, common, "Directory for table, CSV and JSON results");
  add_source(batch, source, Inputs::One);
  add_engine(batch, engine);
  batch->add_option("--epochs", epochs, "Passes over the training split")->check(CLI::Range(1, 1000));
  batch->add_option("--test-fraction", test_fraction, "Held-out share per class")->check(CLI::Range(0.01, 0.99));

  ServeOptions serve_opts;
  auto* serve = app.add_subcommand("serve", "Run the WebSocket stream service");
  add_common(serve, common, "Unused");
  add_engine(serve, engine);
  serve->add_option("--address", serve_opts.address, "Bind address")->capture_default_str();
  serve->add_option("--port", serve_opts.port, "HTTP/WebSocket port, 0 for ephemeral")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve->add_option("--tcp-port", serve_opts.tcp_port, "Also accept newline-delimited JSON on this port")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--inbox", serve_opts.inbox, "Per-session inbound queue capacity")->check(CLI::Range(1, 1 << 24));
  serve->add_option("--threads", serve_opts.threads, "I/O threads")->check(CLI::Range(1, 64));

  std::string url;
  double speed = 0;
  auto* rep = app.add_subcommand("replay", "Stream a sample CSV to a running service");
  add_common(rep, common, "Event log path (NDJSON, default stdout)");
  add_engine(rep, engine);
  rep->add_option("--in", source.inputs, "Sample CSV file")->required()->expected(1)->check(CLI::ExistingFile);
  rep->add_option("--url", url, "ws://host:port/stream or tcp://host:port")->required();
  rep->add_option("--speed", speed, "Multiple of real time, 0 for as fast as possible")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    check(shar_set_log_level(common.log_level.c_str()), "log level");
    if (gen->parsed()) return cmd_gen(common, source);
    if (extract->parsed()) return cmd_extract(common, source, extract_opts);
    if (bench->parsed()) return cmd_bench(common, source, engine, subjects);
    if (batch->parsed()) return cmd_batch_compare(common, source, engine, epochs, test_fraction);
    if (serve->parsed()) return cmd_serve(common, engine, serve_opts);
    if (rep->parsed()) return cmd_replay(common, source, engine, url, speed);
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
