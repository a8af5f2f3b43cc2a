#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "streamhar/labels.hpp"
#include "streamhar/pipeline.hpp"
#include "streamhar/prequential.hpp"

namespace streamhar {

inline constexpr int kWireVersion = 1;

// Settings a session starts from; a hello message may override them.
struct SessionDefaults {
  std::vector<Algorithm> algorithms{Algorithm::INB};
  LearnerConfig learner;
  PipelineConfig pipeline;
};

// Protocol state for one connection, independent of the transport. Every
// incoming message yields zero or more outgoing events, in order.
//
// Client messages: hello, label, sample, end. Server events: ack, prediction,
// metrics, warning, error. All carry "v": 1 and the session id.
class Session {
 public:
  using Clock = std::chrono::steady_clock;

  Session(std::string id, SessionDefaults defaults);

  const std::string& id() const noexcept { return id_; }

  std::vector<nlohmann::json> handle(const nlohmann::json& msg, Clock::time_point received = Clock::now());
  // Parses one JSON text; parse failures become an error event.
  std::vector<nlohmann::json> handle_text(std::string_view text, Clock::time_point received = Clock::now());

  // Final metrics, one event per algorithm. Empty if no pipeline was built.
  std::vector<nlohmann::json> final_metrics() const;

  nlohmann::json warning(std::string_view code, const std::string& message) const;
  nlohmann::json error(std::string_view code, const std::string& message) const;

  bool ended() const noexcept { return ended_; }
  std::uint64_t windows() const noexcept;
  const LabelRegistry& labels() const noexcept { return labels_; }
  const std::optional<LabelId>& active_label() const noexcept { return active_; }
  const Pipeline* pipeline() const noexcept { return pipeline_.get(); }

 private:
  nlohmann::json event(std::string_view type) const;
  void ensure_pipeline();
  std::vector<nlohmann::json> on_hello(const nlohmann::json& msg);
  std::vector<nlohmann::json> on_label(const nlohmann::json& msg);
  std::vector<nlohmann::json> on_sample(const nlohmann::json& msg, Clock::time_point received);
  std::vector<nlohmann::json> on_end();
  nlohmann::json metrics_event(std::size_t algo, bool final) const;

  std::string id_;
  SessionDefaults config_;
  LabelRegistry labels_;
  std::optional<LabelId> active_;
  std::unique_ptr<Pipeline> pipeline_;
  bool ended_ = false;
};

// Bounded per-session queue. When full, the oldest queued sample is dropped
// to make room (control messages are kept while any sample remains).
class MessageInbox {
 public:
  struct Item {
    nlohmann::json msg;
    std::string parse_error;  // non-empty when the text was not valid JSON
    bool is_sample = false;
    Session::Clock::time_point received;
  };

  explicit MessageInbox(std::size_t capacity);

  // Parses and queues one message; returns true if an older one was dropped.
  bool push(std::string_view text, Session::Clock::time_point received = Session::Clock::now());
  std::optional<Item> pop();

  std::size_t size() const noexcept { return items_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t dropped() const noexcept { return dropped_; }

 private:
  std::size_t capacity_;
  std::deque<Item> items_;
  std::uint64_t dropped_ = 0;
};

// Runs one queued item through the session.
std::vector<nlohmann::json> dispatch(Session& session, const MessageInbox::Item& item);

// Client-side helpers shared by the replay tool and the tests.
nlohmann::json hello_message(const std::vector<Algorithm>& algorithms, std::uint64_t seed,
                             const PipelineConfig& pipeline = {});
nlohmann::json label_message(const std::optional<std::string>& name);
// With `labels` set, the sample carries its own label field (CSV replay);
// otherwise the session's active label applies.
nlohmann::json sample_message(const SensorSample& s, const LabelRegistry* labels);
nlohmann::json end_message();

// Rebuilds a prediction log entry from a prediction event; label names are
// resolved through `labels`, interning unseen names. Returns nullopt for
// windows without a true label.
std::optional<PredictionRecord> record_from_event(const nlohmann::json& ev, LabelRegistry& labels);

}  // namespace streamhar
