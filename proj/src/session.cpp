#include "streamhar/session.hpp"

#include <algorithm>
#include <cmath>

#include "streamhar/error.hpp"

namespace streamhar {

namespace {

constexpr const char* kChannels[] = {"ax", "ay", "az", "gx", "gy", "gz"};

double channel(const nlohmann::json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end()) throw Error(ErrorCode::MalformedMessage, std::string("sample is missing '") + key + "'");
  // JSON has no NaN/Inf literal; serializers emit null for them
  if (it->is_null()) throw Error(ErrorCode::NonFiniteChannel, std::string("channel '") + key + "' is not finite");
  if (!it->is_number()) throw Error(ErrorCode::MalformedMessage, std::string("channel '") + key + "' is not a number");
  return it->get<double>();
}

std::vector<Algorithm> algorithms_from(const nlohmann::json& msg, std::vector<Algorithm> fallback) {
  std::vector<Algorithm> out;
  if (auto it = msg.find("algos"); it != msg.end()) {
    if (!it->is_array()) throw Error(ErrorCode::MalformedMessage, "'algos' must be an array");
    for (const auto& a : *it) out.push_back(parse_algorithm(a.get<std::string>()));
  } else if (auto one = msg.find("algo"); one != msg.end()) {
    out.push_back(parse_algorithm(one->get<std::string>()));
  } else {
    return fallback;
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "'algos' must not be empty");
  return out;
}

}  // namespace

Session::Session(std::string id, SessionDefaults defaults) : id_(std::move(id)), config_(std::move(defaults)) {
  if (config_.algorithms.empty()) throw Error(ErrorCode::InvalidArgument, "session needs at least one algorithm");
}

std::uint64_t Session::windows() const noexcept {
  return pipeline_ ? pipeline_->assembler().windows_emitted() : 0;
}

nlohmann::json Session::event(std::string_view type) const {
  return {{"v", kWireVersion}, {"type", type}, {"session", id_}};
}

nlohmann::json Session::warning(std::string_view code, const std::string& message) const {
  auto ev = event("warning");
  ev["code"] = code;
  ev["message"] = message;
  return ev;
}

nlohmann::json Session::error(std::string_view code, const std::string& message) const {
  auto ev = event("error");
  ev["code"] = code;
  ev["message"] = message;
  return ev;
}

void Session::ensure_pipeline() {
  if (!pipeline_) pipeline_ = std::make_unique<Pipeline>(config_.pipeline, config_.algorithms, config_.learner);
}

std::vector<nlohmann::json> Session::handle_text(std::string_view text, Clock::time_point received) {
  nlohmann::json msg;
  try {
    msg = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    return {error(to_string(ErrorCode::MalformedMessage), std::string("invalid JSON: ") + e.what())};
  }
  return handle(msg, received);
}

std::vector<nlohmann::json> Session::handle(const nlohmann::json& msg, Clock::time_point received) {
  try {
    if (!msg.is_object()) throw Error(ErrorCode::MalformedMessage, "message must be a JSON object");
    if (msg.value("v", 0) != kWireVersion)
      throw Error(ErrorCode::MalformedMessage, "unsupported or missing protocol version");
    if (auto s = msg.find("session"); s != msg.end() && !s->is_null() && s->get<std::string>() != id_)
      throw Error(ErrorCode::UnknownSession, "unknown session '" + s->get<std::string>() + "'");
    const auto type = msg.at("type").get<std::string>();
    if (ended_) throw Error(ErrorCode::InvalidArgument, "session already ended");
    if (type == "sample") return on_sample(msg, received);
    if (type == "label") return on_label(msg);
    if (type == "hello") return on_hello(msg);
    if (type == "end") return on_end();
    throw Error(ErrorCode::MalformedMessage, "unknown message type '" + type + "'");
  } catch (const Error& e) {
    return {error(to_string(e.code()), e.what())};
  } catch (const nlohmann::json::exception& e) {
    return {error(to_string(ErrorCode::MalformedMessage), e.what())};
  }
}

std::vector<nlohmann::json> Session::on_hello(const nlohmann::json& msg) {
  if (pipeline_) throw Error(ErrorCode::InvalidArgument, "hello must precede the first sample");
  SessionDefaults next = config_;
  next.algorithms = algorithms_from(msg, config_.algorithms);
  if (auto l = msg.find("learner"); l != msg.end()) next.learner = learner_config_from_json(*l, next.learner);
  if (auto s = msg.find("seed"); s != msg.end()) next.learner.seed = s->get<std::uint64_t>();
  if (auto w = msg.find("window"); w != msg.end()) next.pipeline.window.size = w->get<std::size_t>();
  if (auto r = msg.find("rate_hz"); r != msg.end()) next.pipeline.window.rate_hz = r->get<double>();
  if (auto m = msg.find("sma_literal"); m != msg.end()) next.pipeline.features.sma_absolute = !m->get<bool>();
  if (next.pipeline.window.size < 2) throw Error(ErrorCode::InvalidArgument, "window must hold at least 2 samples");
  if (!(next.pipeline.window.rate_hz > 0)) throw Error(ErrorCode::InvalidArgument, "rate_hz must be positive");
  config_ = std::move(next);
  ensure_pipeline();

  auto ack = event("ack");
  ack["of"] = "hello";
  ack["algos"] = nlohmann::json::array();
  for (auto a : config_.algorithms) ack["algos"].push_back(algorithm_id(a));
  ack["seed"] = config_.learner.seed;
  ack["window"] = config_.pipeline.window.size;
  ack["rate_hz"] = config_.pipeline.window.rate_hz;
  return {ack};
}

std::vector<nlohmann::json> Session::on_label(const nlohmann::json& msg) {
  const auto& name = msg.at("name");
  auto ack = event("ack");
  ack["of"] = "label";
  if (name.is_null()) {
    active_.reset();
    ack["label"] = nullptr;
  } else {
    const auto s = name.get<std::string>();
    if (s.empty()) throw Error(ErrorCode::InvalidArgument, "label name must not be empty");
    active_ = labels_.intern(s);
    ack["label"] = s;
    ack["id"] = *active_;
  }
  return {ack};
}

std::vector<nlohmann::json> Session::on_sample(const nlohmann::json& msg, Clock::time_point received) {
  SensorSample s;
  s.t_ms = msg.at("t_ms").get<std::int64_t>();
  s.ax = channel(msg, kChannels[0]);
  s.ay = channel(msg, kChannels[1]);
  s.az = channel(msg, kChannels[2]);
  s.gx = channel(msg, kChannels[3]);
  s.gy = channel(msg, kChannels[4]);
  s.gz = channel(msg, kChannels[5]);
  if (auto l = msg.find("label"); l != msg.end()) {
    if (!l->is_null()) {
      const auto name = l->get<std::string>();
      if (!name.empty()) s.label = labels_.intern(name);
    }
  } else {
    s.label = active_;
  }

  ensure_pipeline();
  const auto step = pipeline_->push(s);

  std::vector<nlohmann::json> out;
  if (step.timestamp_regression)
    out.push_back(warning("timestamp_regression", "t_ms " + std::to_string(s.t_ms) + " is earlier than its predecessor"));
  if (!step.step) return out;

  const auto& w = *step.step;
  for (std::size_t i = 0; i < w.outcomes.size(); ++i) {
    const auto& o = w.outcomes[i];
    auto ev = event("prediction");
    ev["algo"] = algorithm_id(o.algorithm);
    ev["window"] = w.window_index;
    ev["true"] = w.truth ? nlohmann::json(labels_.name(*w.truth)) : nlohmann::json(nullptr);
    if (o.prediction) {
      ev["predicted"] = labels_.name(o.prediction->label);
      auto scores = nlohmann::json::array();
      for (const auto& cs : o.prediction->scores) scores.push_back({{"label", labels_.name(cs.label)}, {"score", cs.score}});
      ev["scores"] = std::move(scores);
    } else {
      ev["predicted"] = nullptr;
      ev["scores"] = nlohmann::json::array();
    }
    if (w.truth)
      ev["correct"] = o.prediction && o.prediction->label == *w.truth;
    else
      ev["correct"] = nullptr;
    ev["predict_s"] = o.predict_s;
    ev["train_s"] = o.train_s;
    ev["latency_ms"] = std::chrono::duration<double, std::milli>(Clock::now() - received).count();
    out.push_back(std::move(ev));
  }
  for (std::size_t i = 0; i < w.outcomes.size(); ++i) out.push_back(metrics_event(i, false));
  return out;
}

std::vector<nlohmann::json> Session::on_end() {
  auto out = final_metrics();
  ended_ = true;
  auto ack = event("ack");
  ack["of"] = "end";
  ack["windows"] = windows();
  out.push_back(std::move(ack));
  return out;
}

nlohmann::json Session::metrics_event(std::size_t algo, bool final) const {
  const auto& m = pipeline_->metrics(algo);
  auto ev = event("metrics");
  ev["algo"] = algorithm_id(pipeline_->algorithms()[algo]);
  ev["windows"] = m.windows;
  ev["evaluated"] = m.evaluated;
  ev["correct"] = m.correct;
  ev["accuracy"] = m.accuracy();
  if (m.evaluated > 0) {
    const auto macro = macro_metrics(m.confusion);
    ev["macro_precision"] = macro.precision;
    ev["macro_recall"] = macro.recall;
    ev["macro_f1"] = macro.f1;
  } else {
    ev["macro_precision"] = ev["macro_recall"] = ev["macro_f1"] = 0.0;
  }
  ev["final"] = final;
  return ev;
}

std::vector<nlohmann::json> Session::final_metrics() const {
  std::vector<nlohmann::json> out;
  if (!pipeline_) return out;
  for (std::size_t i = 0; i < pipeline_->algorithms().size(); ++i) out.push_back(metrics_event(i, true));
  return out;
}

MessageInbox::MessageInbox(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "inbox capacity must be positive");
}

bool MessageInbox::push(std::string_view text, Session::Clock::time_point received) {
  Item item;
  item.received = received;
  try {
    item.msg = nlohmann::json::parse(text);
    item.is_sample = item.msg.is_object() && item.msg.value("type", nlohmann::json()) == "sample";
  } catch (const nlohmann::json::exception& e) {
    item.parse_error = std::string("invalid JSON: ") + e.what();
  }
  bool dropped = false;
  if (items_.size() >= capacity_) {
    auto victim = std::find_if(items_.begin(), items_.end(), [](const Item& i) { return i.is_sample; });
    items_.erase(victim == items_.end() ? items_.begin() : victim);
    ++dropped_;
    dropped = true;
  }
  items_.push_back(std::move(item));
  return dropped;
}

std::optional<MessageInbox::Item> MessageInbox::pop() {
  if (items_.empty()) return std::nullopt;
  auto item = std::move(items_.front());
  items_.pop_front();
  return item;
}

std::vector<nlohmann::json> dispatch(Session& session, const MessageInbox::Item& item) {
  if (!item.parse_error.empty()) return {session.error(to_string(ErrorCode::MalformedMessage), item.parse_error)};
  return session.handle(item.msg, item.received);
}

nlohmann::json hello_message(const std::vector<Algorithm>& algorithms, std::uint64_t seed,
                             const PipelineConfig& pipeline) {
  nlohmann::json msg = {{"v", kWireVersion}, {"type", "hello"}, {"seed", seed}};
  msg["algos"] = nlohmann::json::array();
  for (auto a : algorithms) msg["algos"].push_back(algorithm_id(a));
  msg["window"] = pipeline.window.size;
  msg["rate_hz"] = pipeline.window.rate_hz;
  msg["sma_literal"] = !pipeline.features.sma_absolute;
  return msg;
}

nlohmann::json label_message(const std::optional<std::string>& name) {
  return {{"v", kWireVersion}, {"type", "label"}, {"name", name ? nlohmann::json(*name) : nlohmann::json(nullptr)}};
}

nlohmann::json sample_message(const SensorSample& s, const LabelRegistry* labels) {
  nlohmann::json msg = {{"v", kWireVersion}, {"type", "sample"}, {"t_ms", s.t_ms}, {"ax", s.ax}, {"ay", s.ay},
                        {"az", s.az}, {"gx", s.gx}, {"gy", s.gy}, {"gz", s.gz}};
  if (labels) msg["label"] = s.label ? nlohmann::json(labels->name(*s.label)) : nlohmann::json(nullptr);
  return msg;
}

nlohmann::json end_message() { return {{"v", kWireVersion}, {"type", "end"}}; }

std::optional<PredictionRecord> record_from_event(const nlohmann::json& ev, LabelRegistry& labels) {
  if (ev.value("type", "") != "prediction") throw Error(ErrorCode::MalformedMessage, "not a prediction event");
  if (ev.at("true").is_null()) return std::nullopt;
  PredictionRecord r;
  r.window_index = ev.at("window").get<std::uint64_t>();
  r.truth = labels.intern(ev.at("true").get<std::string>());
  if (!ev.at("predicted").is_null()) {
    r.predicted = labels.intern(ev.at("predicted").get<std::string>());
    for (const auto& s : ev.at("scores"))
      r.scores.push_back({labels.intern(s.at("label").get<std::string>()), s.at("score").get<double>()});
  }
  r.predict_s = ev.value("predict_s", 0.0);
  r.train_s = ev.value("train_s", 0.0);
  return r;
}

}  // namespace streamhar
