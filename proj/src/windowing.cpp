#include "streamhar/windowing.hpp"

#include <cmath>
#include <map>

#include "streamhar/error.hpp"

namespace streamhar {

bool channels_finite(const SensorSample& s) noexcept {
  return std::isfinite(s.ax) && std::isfinite(s.ay) && std::isfinite(s.az) &&
         std::isfinite(s.gx) && std::isfinite(s.gy) && std::isfinite(s.gz);
}

std::optional<LabelId> modal_label(std::span<const SensorSample> samples) {
  // key -1 stands for "unlabeled"
  struct Tally {
    std::size_t count = 0;
    std::size_t last_pos = 0;
  };
  std::map<LabelId, Tally> tallies;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto& t = tallies[samples[i].label.value_or(-1)];
    ++t.count;
    t.last_pos = i;
  }
  LabelId best = -1;
  Tally best_tally;
  bool first = true;
  for (const auto& [key, t] : tallies) {
    if (first || t.count > best_tally.count ||
        (t.count == best_tally.count && t.last_pos > best_tally.last_pos)) {
      best = key;
      best_tally = t;
      first = false;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

AxisSeries axis_view(const SensorWindow& window, Sensor sensor, Axis axis) {
  AxisSeries out;
  out.reserve(window.samples.size());
  const bool accel = sensor == Sensor::Accel;
  for (const auto& s : window.samples) {
    switch (axis) {
      case Axis::X: out.push_back(accel ? s.ax : s.gx); break;
      case Axis::Y: out.push_back(accel ? s.ay : s.gy); break;
      case Axis::Z: out.push_back(accel ? s.az : s.gz); break;
    }
  }
  return out;
}

WindowAssembler::WindowAssembler(WindowConfig config) : config_(config) {
  if (config_.size == 0) throw Error(ErrorCode::InvalidArgument, "window size must be positive");
  if (!(config_.rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "sampling rate must be positive");
  buffer_.reserve(config_.size);
}

PushOutcome WindowAssembler::push(const SensorSample& sample) {
  if (!channels_finite(sample))
    throw Error(ErrorCode::NonFiniteChannel, "sample at t_ms=" + std::to_string(sample.t_ms) +
                                                 " has a non-finite channel");
  PushOutcome out;
  if (last_t_ms_ && sample.t_ms < *last_t_ms_) {
    out.timestamp_regression = true;
    ++regressions_;
  }
  last_t_ms_ = sample.t_ms;
  buffer_.push_back(sample);
  if (buffer_.size() == config_.size) {
    SensorWindow w;
    w.index = next_index_++;
    w.rate_hz = config_.rate_hz;
    w.label = modal_label(buffer_);
    w.samples = std::move(buffer_);
    buffer_ = {};
    buffer_.reserve(config_.size);
    out.window = std::move(w);
  }
  return out;
}

}  // namespace streamhar
