#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamhar/session.hpp"
#include "streamhar/synth.hpp"

namespace streamhar {

struct ServerConfig {
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;               // 0 picks a free port
  std::optional<std::uint16_t> tcp_port;   // NDJSON fallback listener
  std::size_t inbox_capacity = 4096;       // messages per session
  std::size_t io_threads = 1;
  SessionDefaults defaults;
};

// WebSocket endpoint /stream (one JSON text frame per message), GET /health,
// and optionally a newline-delimited JSON listener on a second port. One
// Session per connection; a session's messages are processed in arrival order
// on its own strand.
class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the listeners; throws Error(BindFailure).
  void start();
  // Serves until stop(); returns after connections have flushed.
  void run();
  // Thread-safe. Every open session receives its final metrics before the
  // connection closes.
  void stop();

  std::uint16_t port() const;
  std::optional<std::uint16_t> tcp_port() const;
  nlohmann::json health() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
  std::string target = "/";
};

// Accepts ws://host:port/path and tcp://host:port.
Endpoint parse_url(const std::string& url, std::string* scheme = nullptr);

// Blocking WebSocket or NDJSON client used by replay and the tests.
class StreamClient {
 public:
  static std::unique_ptr<StreamClient> connect(const std::string& url);
  virtual ~StreamClient() = default;
  virtual void send(const nlohmann::json& msg) = 0;
  // Next event, or nullopt once the peer has closed.
  virtual std::optional<nlohmann::json> receive() = 0;
  virtual void close() = 0;
};

struct ReplayOptions {
  std::string url;
  std::vector<Algorithm> algorithms{Algorithm::INB};
  std::uint64_t seed = 1;
  double speed = 0;  // multiple of real time; 0 sends as fast as possible
  PipelineConfig pipeline;
  std::function<void(const nlohmann::json&)> on_event;
};

// Streams a recording with per-row labels, then "end"; returns every event
// received up to the end acknowledgement.
std::vector<nlohmann::json> replay_to_server(const Recording& rec, const ReplayOptions& options);

// Fetches GET /health from host:port.
nlohmann::json fetch_health(const std::string& host, std::uint16_t port);

}  // namespace streamhar
