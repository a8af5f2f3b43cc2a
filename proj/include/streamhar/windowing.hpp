#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "streamhar/labels.hpp"

namespace streamhar {

struct SensorSample {
  std::int64_t t_ms = 0;
  double ax = 0, ay = 0, az = 0;
  double gx = 0, gy = 0, gz = 0;
  std::optional<LabelId> label;

  bool operator==(const SensorSample&) const = default;
};

bool channels_finite(const SensorSample& s) noexcept;

enum class Sensor { Accel, Gyro };
enum class Axis { X, Y, Z };

using AxisSeries = std::vector<double>;

struct SensorWindow {
  std::uint64_t index = 0;
  std::vector<SensorSample> samples;
  std::optional<LabelId> label;
  double rate_hz = 20.0;
};

// Modal label over the samples; absent counts as its own value. Ties go to
// whichever tied value occurs latest in the window, so the last sample wins
// when it is part of the tie.
std::optional<LabelId> modal_label(std::span<const SensorSample> samples);

AxisSeries axis_view(const SensorWindow& window, Sensor sensor, Axis axis);

struct WindowConfig {
  std::size_t size = 40;
  double rate_hz = 20.0;
};

struct PushOutcome {
  std::optional<SensorWindow> window;
  bool timestamp_regression = false;
};

// Tumbling-window state machine, one per stream. Non-finite samples are
// rejected with ErrorCode::NonFiniteChannel and leave the buffer untouched;
// out-of-order timestamps are accepted and flagged.
class WindowAssembler {
 public:
  explicit WindowAssembler(WindowConfig config = {});

  PushOutcome push(const SensorSample& sample);

  const WindowConfig& config() const noexcept { return config_; }
  std::size_t buffered() const noexcept { return buffer_.size(); }
  std::uint64_t windows_emitted() const noexcept { return next_index_; }
  std::uint64_t timestamp_regressions() const noexcept { return regressions_; }

 private:
  WindowConfig config_;
  std::vector<SensorSample> buffer_;
  std::uint64_t next_index_ = 0;
  std::uint64_t regressions_ = 0;
  std::optional<std::int64_t> last_t_ms_;
};

}  // namespace streamhar
