#include "streamhar/server.hpp"

#include <atomic>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "streamhar/error.hpp"

namespace streamhar {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

struct ServerStats {
  std::atomic<std::uint64_t> active{0};
  std::atomic<std::uint64_t> total{0};
  std::atomic<std::uint64_t> windows{0};
  std::atomic<std::uint64_t> dropped{0};
};

// Owns a Session and its inbox. Messages are queued from the I/O side and
// drained in order on a per-session strand.
class SessionRunner : public std::enable_shared_from_this<SessionRunner> {
 public:
  using Sink = std::function<void(std::string)>;

  SessionRunner(Session session, net::any_io_executor exec, std::size_t capacity, Sink sink, ServerStats& stats)
      : strand_(net::make_strand(exec)), session_(std::move(session)), inbox_(capacity), sink_(std::move(sink)),
        stats_(stats) {}

  const std::string& id() const noexcept { return session_.id(); }

  void enqueue(std::string_view text) {
    const auto received = Session::Clock::now();
    bool start = false;
    {
      std::lock_guard lock(mu_);
      if (inbox_.push(text, received)) {
        ++pending_drops_;
        stats_.dropped.fetch_add(1, std::memory_order_relaxed);
      }
      if (!draining_) draining_ = start = true;
    }
    if (start) net::post(strand_, [self = shared_from_this()] { self->drain(); });
  }

  // Processes what is queued, emits final metrics unless the client already
  // ended the session, then calls `done` on the session strand.
  void finish(std::function<void()> done) {
    net::post(strand_, [self = shared_from_this(), done = std::move(done)] {
      while (self->drain_batch(std::numeric_limits<std::size_t>::max())) {
      }
      if (!self->session_.ended())
        for (auto& ev : self->session_.final_metrics()) self->sink_(ev.dump());
      done();
    });
  }

  void log_close() {
    net::post(strand_, [self = shared_from_this()] {
      for (const auto& ev : self->session_.final_metrics())
        spdlog::info("session_closed id={} algo={} windows={} accuracy={:.4f}", self->id(),
                     ev["algo"].get<std::string>(), ev["windows"].get<std::uint64_t>(), ev["accuracy"].get<double>());
    });
  }

 private:
  void drain() {
    if (drain_batch(64)) net::post(strand_, [self = shared_from_this()] { self->drain(); });
  }

  // Returns true while more items remain.
  bool drain_batch(std::size_t limit) {
    for (std::size_t n = 0; n < limit; ++n) {
      std::optional<MessageInbox::Item> item;
      std::uint64_t drops = 0;
      {
        std::lock_guard lock(mu_);
        item = inbox_.pop();
        drops = std::exchange(pending_drops_, 0);
        if (!item) {
          draining_ = false;
          if (drops == 0) return false;
        }
      }
      if (drops > 0) {
        spdlog::warn("inbox_overflow session={} dropped={}", id(), drops);
        sink_(session_.warning("inbox_overflow", std::to_string(drops) + " sample(s) dropped").dump());
      }
      if (!item) return false;
      const auto before = session_.windows();
      for (auto& ev : dispatch(session_, *item)) {
        if (ev["type"] == "error")
          spdlog::warn("message_rejected session={} code={} detail=\"{}\"", id(), ev["code"].get<std::string>(),
                       ev["message"].get<std::string>());
        sink_(ev.dump());
      }
      stats_.windows.fetch_add(session_.windows() - before, std::memory_order_relaxed);
    }
    return true;
  }

  net::strand<net::any_io_executor> strand_;
  Session session_;
  std::mutex mu_;
  MessageInbox inbox_;
  bool draining_ = false;
  std::uint64_t pending_drops_ = 0;
  Sink sink_;
  ServerStats& stats_;
};

class Connection {
 public:
  virtual ~Connection() = default;
  virtual void shutdown() = 0;
};

struct ServerCore {
  explicit ServerCore(ServerConfig c) : config(std::move(c)), ioc(static_cast<int>(std::max<std::size_t>(1, config.io_threads))) {}

  ServerConfig config;
  net::io_context ioc;
  std::optional<tcp::acceptor> http_acceptor;
  std::optional<tcp::acceptor> tcp_acceptor;
  ServerStats stats;
  std::atomic<std::uint64_t> next_id{0};

  std::mutex conn_mu;
  std::set<std::shared_ptr<Connection>> connections;
  bool stopping = false;
  std::optional<net::steady_timer> stop_timer;

  std::shared_ptr<SessionRunner> make_runner(SessionRunner::Sink sink) {
    const auto id = "s" + std::to_string(++next_id);
    stats.total.fetch_add(1);
    stats.active.fetch_add(1);
    return std::make_shared<SessionRunner>(Session(id, config.defaults), ioc.get_executor(), config.inbox_capacity,
                                           std::move(sink), stats);
  }

  // Returns false when the server is already stopping.
  bool attach(const std::shared_ptr<Connection>& c) {
    std::lock_guard lock(conn_mu);
    if (stopping) return false;
    connections.insert(c);
    return true;
  }

  void detach(const std::shared_ptr<Connection>& c) {
    std::lock_guard lock(conn_mu);
    if (connections.erase(c) == 0) return;
    stats.active.fetch_sub(1);
    if (stopping && connections.empty() && stop_timer) stop_timer->cancel();
  }

  nlohmann::json health() const {
    return {{"v", kWireVersion},
            {"status", "ok"},
            {"sessions_active", stats.active.load()},
            {"sessions_total", stats.total.load()},
            {"windows_processed", stats.windows.load()},
            {"samples_dropped", stats.dropped.load()}};
  }
};

class WsConnection : public Connection, public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket socket, ServerCore& server) : ws_(std::move(socket)), server_(server) {}

  void start(http::request<http::string_body> req) {
    auto weak = weak_from_this();
    auto exec = ws_.get_executor();
    runner_ = server_.make_runner([weak, exec](std::string text) {
      net::post(exec, [weak, text = std::move(text)]() mutable {
        if (auto self = weak.lock()) self->queue_write(std::move(text));
      });
    });
    if (!server_.attach(shared_from_this())) {
      server_.stats.active.fetch_sub(1);
      return;
    }
    spdlog::info("session_open id={} transport=ws", runner_->id());
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->closed(ec);
      self->do_read();
    });
  }

  void shutdown() override {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      self->runner_->finish([self] {
        net::post(self->ws_.get_executor(), [self] {
          self->closing_ = true;
          if (!self->writing_) self->do_close();
        });
      });
    });
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->closed(ec);
      self->runner_->enqueue(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->do_read();
    });
  }

  void queue_write(std::string text) {
    if (done_) return;
    outbox_.push_back(std::move(text));
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) return self->closed(ec);
      self->outbox_.pop_front();
      if (!self->outbox_.empty()) return self->do_write();
      if (self->closing_) self->do_close();
    });
  }

  void do_close() {
    if (close_sent_) return;
    close_sent_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code ec) { self->closed(ec); });
  }

  void closed(beast::error_code ec) {
    if (done_) return;
    done_ = true;
    if (ec && ec != websocket::error::closed && ec != net::error::operation_aborted && ec != net::error::eof)
      spdlog::debug("ws_error id={} error=\"{}\"", runner_->id(), ec.message());
    runner_->log_close();
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
    server_.detach(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  ServerCore& server_;
  beast::flat_buffer buffer_;
  std::shared_ptr<SessionRunner> runner_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closing_ = false;
  bool close_sent_ = false;
  bool done_ = false;
};

class LineConnection : public Connection, public std::enable_shared_from_this<LineConnection> {
 public:
  LineConnection(tcp::socket socket, ServerCore& server)
      : socket_(std::move(socket)), strand_(socket_.get_executor()), server_(server) {}

  void start() {
    auto weak = weak_from_this();
    auto exec = strand_;
    runner_ = server_.make_runner([weak, exec](std::string text) {
      net::post(exec, [weak, text = std::move(text)]() mutable {
        if (auto self = weak.lock()) self->queue_write(std::move(text));
      });
    });
    if (!server_.attach(shared_from_this())) {
      server_.stats.active.fetch_sub(1);
      return;
    }
    spdlog::info("session_open id={} transport=ndjson", runner_->id());
    net::post(strand_, [self = shared_from_this()] { self->do_read(); });
  }

  void shutdown() override {
    net::post(strand_, [self = shared_from_this()] {
      self->runner_->finish([self] {
        net::post(self->strand_, [self] {
          self->closing_ = true;
          if (!self->writing_) self->closed({});
        });
      });
    });
  }

 private:
  void do_read() {
    net::async_read_until(socket_, net::dynamic_buffer(in_), '\n',
                          net::bind_executor(strand_, [self = shared_from_this()](beast::error_code ec, std::size_t n) {
                            if (ec) return self->closed(ec);
                            std::string_view line(self->in_.data(), n - 1);
                            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                            if (!line.empty()) self->runner_->enqueue(line);
                            self->in_.erase(0, n);
                            self->do_read();
                          }));
  }

  void queue_write(std::string text) {
    if (done_) return;
    outbox_.push_back(std::move(text) + "\n");
    if (!writing_) do_write();
  }

  void do_write() {
    writing_ = true;
    net::async_write(socket_, net::buffer(outbox_.front()),
                     net::bind_executor(strand_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->writing_ = false;
                       if (ec) return self->closed(ec);
                       self->outbox_.pop_front();
                       if (!self->outbox_.empty()) return self->do_write();
                       if (self->closing_) self->closed({});
                     }));
  }

  void closed(beast::error_code) {
    if (done_) return;
    done_ = true;
    runner_->log_close();
    beast::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
    server_.detach(shared_from_this());
  }

  tcp::socket socket_;
  net::any_io_executor strand_;  // the socket's strand
  ServerCore& server_;
  std::string in_;
  std::shared_ptr<SessionRunner> runner_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
};

// Reads one HTTP request: upgrades /stream to a WebSocket, answers /health.
class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, ServerCore& server) : stream_(std::move(socket)), server_(server) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->route();
    });
  }

 private:
  void route() {
    const auto target = std::string(req_.target());
    const auto path = target.substr(0, target.find('?'));
    if (websocket::is_upgrade(req_)) {
      if (path == "/stream") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), server_)->start(std::move(req_));
        return;
      }
      return respond(http::status::not_found, R"({"error":"websocket endpoint is /stream"})");
    }
    if (path == "/health" && req_.method() == http::verb::get) return respond(http::status::ok, server_.health().dump());
    respond(http::status::not_found, R"({"error":"not found"})");
  }

  void respond(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "streamhar");
    res->set(http::field::content_type, "application/json");
    res->keep_alive(false);
    res->body() = std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  ServerCore& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

tcp::acceptor bind_acceptor(net::io_context& ioc, const std::string& address, std::uint16_t port) {
  beast::error_code ec;
  const auto addr = net::ip::make_address(address, ec);
  if (ec) throw Error(ErrorCode::BindFailure, "bad listen address '" + address + "'");
  tcp::endpoint ep(addr, port);
  tcp::acceptor acc(ioc);
  acc.open(ep.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(ep, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::BindFailure, "cannot listen on " + address + ":" + std::to_string(port) + ": " + ec.message());
  return acc;
}

void accept_http(ServerCore& core) {
  core.http_acceptor->async_accept(net::make_strand(core.ioc), [&core](beast::error_code ec, tcp::socket socket) {
    if (ec) return;  // acceptor closed
    std::make_shared<HttpSession>(std::move(socket), core)->start();
    accept_http(core);
  });
}

void accept_tcp(ServerCore& core) {
  core.tcp_acceptor->async_accept(net::make_strand(core.ioc), [&core](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<LineConnection>(std::move(socket), core)->start();
    accept_tcp(core);
  });
}

}  // namespace

struct Server::Impl : ServerCore {
  using ServerCore::ServerCore;
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
  if (impl_->config.inbox_capacity == 0) throw Error(ErrorCode::InvalidArgument, "inbox capacity must be positive");
  if (impl_->config.defaults.algorithms.empty())
    throw Error(ErrorCode::InvalidArgument, "server needs at least one algorithm");
}

Server::~Server() {
  stop();
  impl_->ioc.stop();
}

void Server::start() {
  auto& s = *impl_;
  s.http_acceptor.emplace(bind_acceptor(s.ioc, s.config.address, s.config.port));
  if (s.config.tcp_port) s.tcp_acceptor.emplace(bind_acceptor(s.ioc, s.config.address, *s.config.tcp_port));
  accept_http(s);
  if (s.tcp_acceptor) accept_tcp(s);
  spdlog::info("listening address={} port={} tcp_port={}", s.config.address, port(),
               tcp_port() ? std::to_string(*tcp_port()) : std::string("off"));
}

void Server::run() {
  auto& s = *impl_;
  std::vector<std::thread> extra;
  for (std::size_t i = 1; i < s.config.io_threads; ++i) extra.emplace_back([&s] { s.ioc.run(); });
  s.ioc.run();
  for (auto& t : extra) t.join();
  spdlog::info("server_stopped sessions_total={} windows={}", s.stats.total.load(), s.stats.windows.load());
}

void Server::stop() {
  auto& s = *impl_;
  net::post(s.ioc, [&s] {
    std::vector<std::shared_ptr<Connection>> open;
    {
      std::lock_guard lock(s.conn_mu);
      if (s.stopping) return;
      s.stopping = true;
      open.assign(s.connections.begin(), s.connections.end());
      beast::error_code ignored;
      if (s.http_acceptor) s.http_acceptor->close(ignored);
      if (s.tcp_acceptor) s.tcp_acceptor->close(ignored);
      if (!open.empty()) {
        // Connections that do not finish their close handshake in time are cut.
        s.stop_timer.emplace(s.ioc, std::chrono::seconds(3));
        s.stop_timer->async_wait([&s](beast::error_code ec) {
          if (!ec) s.ioc.stop();
        });
      }
    }
    for (auto& c : open) c->shutdown();
  });
}

std::uint16_t Server::port() const {
  return impl_->http_acceptor ? impl_->http_acceptor->local_endpoint().port() : 0;
}

std::optional<std::uint16_t> Server::tcp_port() const {
  if (!impl_->tcp_acceptor) return std::nullopt;
  return impl_->tcp_acceptor->local_endpoint().port();
}

nlohmann::json Server::health() const { return impl_->health(); }

Endpoint parse_url(const std::string& url, std::string* scheme) {
  const auto sep = url.find("://");
  if (sep == std::string::npos) throw Error(ErrorCode::InvalidArgument, "URL needs a scheme: '" + url + "'");
  const auto sch = url.substr(0, sep);
  if (sch != "ws" && sch != "tcp") throw Error(ErrorCode::InvalidArgument, "unsupported scheme '" + sch + "'");
  auto rest = url.substr(sep + 3);
  Endpoint ep;
  const auto slash = rest.find('/');
  if (slash != std::string::npos) {
    ep.target = rest.substr(slash);
    rest = rest.substr(0, slash);
  } else {
    ep.target = sch == "ws" ? "/stream" : "/";
  }
  const auto colon = rest.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "URL needs a port: '" + url + "'");
  ep.host = rest.substr(0, colon);
  try {
    const int p = std::stoi(rest.substr(colon + 1));
    if (p <= 0 || p > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(p);
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "bad port in '" + url + "'");
  }
  if (scheme) *scheme = sch;
  return ep;
}

namespace {

tcp::socket connect_socket(net::io_context& ioc, const Endpoint& ep) {
  tcp::resolver resolver(ioc);
  tcp::socket socket(ioc);
  beast::error_code ec;
  const auto results = resolver.resolve(ep.host, std::to_string(ep.port), ec);
  if (!ec) net::connect(socket, results, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot connect to " + ep.host + ":" + std::to_string(ep.port) + ": " + ec.message());
  socket.set_option(tcp::no_delay(true));
  return socket;
}

class WsClient final : public StreamClient {
 public:
  explicit WsClient(const Endpoint& ep) : ws_(connect_socket(ioc_, ep)) {
    beast::error_code ec;
    ws_.handshake(ep.host + ":" + std::to_string(ep.port), ep.target, ec);
    if (ec) throw Error(ErrorCode::IoError, "WebSocket handshake failed: " + ec.message());
    ws_.text(true);
  }

  void send(const nlohmann::json& msg) override {
    beast::error_code ec;
    ws_.write(net::buffer(msg.dump()), ec);
    if (ec) throw Error(ErrorCode::IoError, "send failed: " + ec.message());
  }

  std::optional<nlohmann::json> receive() override {
    beast::flat_buffer buf;
    beast::error_code ec;
    ws_.read(buf, ec);
    if (ec) return std::nullopt;
    return nlohmann::json::parse(beast::buffers_to_string(buf.data()));
  }

  void close() override {
    beast::error_code ec;
    if (ws_.is_open()) ws_.close(websocket::close_code::normal, ec);
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

class LineClient final : public StreamClient {
 public:
  explicit LineClient(const Endpoint& ep) : socket_(connect_socket(ioc_, ep)) {}

  void send(const nlohmann::json& msg) override {
    const auto line = msg.dump() + "\n";
    beast::error_code ec;
    net::write(socket_, net::buffer(line), ec);
    if (ec) throw Error(ErrorCode::IoError, "send failed: " + ec.message());
  }

  std::optional<nlohmann::json> receive() override {
    beast::error_code ec;
    const auto n = net::read_until(socket_, net::dynamic_buffer(in_), '\n', ec);
    if (ec) return std::nullopt;
    auto ev = nlohmann::json::parse(std::string_view(in_).substr(0, n - 1));
    in_.erase(0, n);
    return ev;
  }

  void close() override {
    beast::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_send, ec);
  }

 private:
  net::io_context ioc_;
  tcp::socket socket_;
  std::string in_;
};

}  // namespace

std::unique_ptr<StreamClient> StreamClient::connect(const std::string& url) {
  std::string scheme;
  const auto ep = parse_url(url, &scheme);
  if (scheme == "ws") return std::make_unique<WsClient>(ep);
  return std::make_unique<LineClient>(ep);
}

std::vector<nlohmann::json> replay_to_server(const Recording& rec, const ReplayOptions& options) {
  auto client = StreamClient::connect(options.url);
  std::vector<nlohmann::json> events;
  std::thread reader([&] {
    while (auto ev = client->receive()) {
      if (options.on_event) options.on_event(*ev);
      const bool last = ev->value("type", "") == "ack" && ev->value("of", "") == "end";
      events.push_back(std::move(*ev));
      if (last) break;
    }
  });

  try {
    client->send(hello_message(options.algorithms, options.seed, options.pipeline));
    const auto start = std::chrono::steady_clock::now();
    const std::int64_t t0 = rec.samples.empty() ? 0 : rec.samples.front().t_ms;
    for (const auto& s : rec.samples) {
      if (options.speed > 0) {
        const auto due = start + std::chrono::duration<double, std::milli>(static_cast<double>(s.t_ms - t0) / options.speed);
        std::this_thread::sleep_until(std::chrono::time_point_cast<std::chrono::steady_clock::duration>(due));
      }
      client->send(sample_message(s, &rec.labels));
    }
    client->send(end_message());
  } catch (...) {
    client->close();
    reader.join();
    throw;
  }
  reader.join();
  client->close();
  return events;
}

nlohmann::json fetch_health(const std::string& host, std::uint16_t port) {
  net::io_context ioc;
  beast::tcp_stream stream(connect_socket(ioc, {host, port, "/health"}));
  http::request<http::empty_body> req(http::verb::get, "/health", 11);
  req.set(http::field::host, host);
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  if (res.result() != http::status::ok) throw Error(ErrorCode::IoError, "health endpoint returned " + std::to_string(res.result_int()));
  return nlohmann::json::parse(res.body());
}

}  // namespace streamhar
