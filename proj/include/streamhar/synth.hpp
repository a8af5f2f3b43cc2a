#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "streamhar/labels.hpp"
#include "streamhar/windowing.hpp"

namespace streamhar {

struct ChannelProfile {
  double offset = 0;
  double amplitude = 0;
  double freq_hz = 0;
  double phase = 0;
  double noise = 0;  // Gaussian sigma
};

// Channel order: ax, ay, az, gx, gy, gz.
struct ActivityProfile {
  std::string name;
  std::array<ChannelProfile, 6> channels{};
};

struct Segment {
  std::string activity;
  double duration_s = 0;
};

struct ScenarioScript {
  std::vector<Segment> segments;
  double rate_hz = 20;
  std::uint64_t seed = 1;
  // Seconds after each label change during which the subject is still doing
  // the previous activity. The samples carry the new label.
  double onset_delay_s = 0;
  // Each segment is lengthened or shortened by a uniform draw in
  // [-jitter_samples, +jitter_samples] so windows straddle activity changes.
  std::size_t jitter_samples = 0;
};

// Samples plus the registry that names their label ids.
struct Recording {
  LabelRegistry labels;
  std::vector<SensorSample> samples;
};

// Field-for-field equality with labels compared by name.
bool same_stream(const Recording& a, const Recording& b);

enum class ProfileSet { WellSeparated, Table1 };

// WellSeparated: five activities with dominant frequencies 5, 1, 9, 3, 7 Hz and
// low noise. Table1: twenty activities named after the smartphone-position
// list, 0.45 Hz apart and noisier. Offsets, amplitudes and phases come from a
// fixed internal seed, so the sets are identical on every call.
std::vector<ActivityProfile> default_profiles(ProfileSet set = ProfileSet::WellSeparated);

void validate(const ActivityProfile& p, double rate_hz);
void validate(const ScenarioScript& s);

// Emits round(duration * rate) samples per segment; channel value is
// offset + amplitude * sin(2 pi f t + phase) + N(0, noise^2). Deterministic
// for a given seed. Label ids follow first appearance in the script.
Recording generate(const std::vector<ActivityProfile>& profiles, const ScenarioScript& script);

// Three rounds over the activities: 2 min each, then 1 min each, then 1 min
// each, at 20 Hz.
ScenarioScript paper_scenario(const std::vector<std::string>& activities, std::uint64_t seed = 1,
                              double onset_delay_s = 2.0);
ScenarioScript paper_scenario(std::size_t n_activities = 5, std::uint64_t seed = 1, double onset_delay_s = 2.0);

// Structured-text configuration (JSON).
nlohmann::json profiles_to_json(const std::vector<ActivityProfile>& profiles);
std::vector<ActivityProfile> profiles_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioScript& s);
ScenarioScript scenario_from_json(const nlohmann::json& j);

// CSV with header t_ms,ax,ay,az,gx,gy,gz,label; doubles use shortest
// round-trip formatting, labels may be empty.
inline constexpr const char* kCsvHeader = "t_ms,ax,ay,az,gx,gy,gz,label";
void record(const Recording& rec, std::ostream& os);
void record(const Recording& rec, const std::filesystem::path& path);
Recording replay(std::istream& is);
Recording replay(const std::filesystem::path& path);
// Parses one data row; used by replay and by streaming readers.
SensorSample parse_csv_row(std::string_view line, std::size_t row, LabelRegistry& labels);
std::string format_csv_row(const SensorSample& s, const LabelRegistry& labels);

}  // namespace streamhar
