#include "streamhar/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <unordered_map>

#include "streamhar/error.hpp"

namespace streamhar {

namespace {

constexpr std::array<const char*, 6> kChannelKeys = {"ax", "ay", "az", "gx", "gy", "gz"};

constexpr std::array<const char*, 20> kTable1Names = {
    "Walking",          "Running",          "Standing Still",    "Sitting on a Chair",
    "Side Leg Lifts",   "Boxer Shuffle",    "Knee Lifts",        "Cycling using Exercise Bicycle",
    "Forward Lunge",    "Torso Rotation",   "Squats",            "Mountain Climber Twist",
    "Arm Swings",       "Forearm Rotation", "Dumbbell Biceps Curl", "Jumping Jack",
    "Chest Expansion",  "Cross Toe Touch",  "Straight Punch",    "Big Arm Circles"};

double& channel_value(SensorSample& s, std::size_t c) {
  switch (c) {
    case 0: return s.ax;
    case 1: return s.ay;
    case 2: return s.az;
    case 3: return s.gx;
    case 4: return s.gy;
    default: return s.gz;
  }
}

std::string fmt_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

}  // namespace

bool same_stream(const Recording& a, const Recording& b) {
  if (a.samples.size() != b.samples.size()) return false;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const auto& x = a.samples[i];
    const auto& y = b.samples[i];
    if (x.t_ms != y.t_ms || x.ax != y.ax || x.ay != y.ay || x.az != y.az || x.gx != y.gx || x.gy != y.gy ||
        x.gz != y.gz)
      return false;
    if (x.label.has_value() != y.label.has_value()) return false;
    if (x.label && a.labels.name(*x.label) != b.labels.name(*y.label)) return false;
  }
  return true;
}

std::vector<ActivityProfile> default_profiles(ProfileSet set) {
  // Offsets, amplitudes and phases are drawn independently per activity so no
  // feature orders the classes monotonically; frequencies are fixed per set.
  std::mt19937_64 rng(set == ProfileSet::WellSeparated ? 42 : 43);
  auto uniform = [&rng](double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };

  std::vector<ActivityProfile> out;
  if (set == ProfileSet::WellSeparated) {
    const std::array<const char*, 5> names = {"Walking", "Running", "Jumping Jack", "Arm Swings",
                                              "Cycling using Exercise Bicycle"};
    const std::array<double, 5> freqs = {5.0, 1.0, 9.0, 3.0, 7.0};
    for (std::size_t i = 0; i < names.size(); ++i) {
      ActivityProfile p;
      p.name = names[i];
      for (std::size_t c = 0; c < 6; ++c) {
        const bool accel = c < 3;
        const double offset = uniform(-2.0, 2.0) + (c == 2 ? 9.81 : 0.0);
        const double amplitude = uniform(0.5, 1.5);
        p.channels[c] = {offset, amplitude, freqs[i], uniform(-3.0, 3.0), accel ? 0.2 : 0.08};
      }
      out.push_back(std::move(p));
    }
    return out;
  }
  std::array<double, kTable1Names.size()> freqs{};
  for (std::size_t i = 0; i < freqs.size(); ++i) freqs[i] = 0.5 + 0.45 * static_cast<double>(i);
  for (std::size_t i = freqs.size() - 1; i > 0; --i) std::swap(freqs[i], freqs[rng() % (i + 1)]);
  for (std::size_t i = 0; i < kTable1Names.size(); ++i) {
    ActivityProfile p;
    p.name = kTable1Names[i];
    for (std::size_t c = 0; c < 6; ++c) {
      const bool accel = c < 3;
      const double offset = uniform(-1.5, 1.5) + (c == 2 ? 9.81 : 0.0);
      const double amplitude = uniform(0.5, 1.5);
      p.channels[c] = {offset, amplitude, freqs[i], uniform(-3.0, 3.0), accel ? 0.5 : 0.2};
    }
    out.push_back(std::move(p));
  }
  return out;
}

void validate(const ActivityProfile& p, double rate_hz) {
  if (p.name.empty()) throw Error(ErrorCode::InvalidArgument, "activity profile needs a name");
  for (const auto& c : p.channels) {
    if (!(c.freq_hz >= 0 && c.freq_hz < rate_hz / 2))
      throw Error(ErrorCode::InvalidArgument, "profile '" + p.name + "' has a frequency outside [0, rate/2)");
    if (!(c.noise >= 0)) throw Error(ErrorCode::InvalidArgument, "profile '" + p.name + "' has negative noise");
    if (!std::isfinite(c.offset) || !std::isfinite(c.amplitude) || !std::isfinite(c.phase))
      throw Error(ErrorCode::InvalidArgument, "profile '" + p.name + "' has a non-finite parameter");
  }
}

void validate(const ScenarioScript& s) {
  if (!(s.rate_hz > 0)) throw Error(ErrorCode::InvalidArgument, "scenario rate must be positive");
  if (!(s.onset_delay_s >= 0)) throw Error(ErrorCode::InvalidArgument, "onset delay must be non-negative");
  for (const auto& seg : s.segments) {
    if (seg.activity.empty()) throw Error(ErrorCode::InvalidArgument, "segment without activity");
    if (!(seg.duration_s > 0)) throw Error(ErrorCode::InvalidArgument, "segment durations must be positive");
  }
}

Recording generate(const std::vector<ActivityProfile>& profiles, const ScenarioScript& script) {
  validate(script);
  std::unordered_map<std::string, const ActivityProfile*> by_name;
  for (const auto& p : profiles) {
    validate(p, script.rate_hz);
    by_name.emplace(p.name, &p);
  }

  std::mt19937_64 rng(script.seed);
  std::vector<std::int64_t> lengths;
  std::vector<const ActivityProfile*> seg_profiles;
  for (const auto& seg : script.segments) {
    auto it = by_name.find(seg.activity);
    if (it == by_name.end()) throw Error(ErrorCode::UnknownActivity, "no profile for activity '" + seg.activity + "'");
    seg_profiles.push_back(it->second);
    lengths.push_back(std::llround(seg.duration_s * script.rate_hz));
  }
  if (script.jitter_samples > 0) {
    const auto j = static_cast<std::int64_t>(script.jitter_samples);
    std::uniform_int_distribution<std::int64_t> jitter(-j, j);
    for (auto& len : lengths) len = std::max<std::int64_t>(1, len + jitter(rng));
  }

  Recording rec;
  std::int64_t total = 0;
  for (auto len : lengths) total += len;
  rec.samples.reserve(static_cast<std::size_t>(total));

  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto onset = std::llround(script.onset_delay_s * script.rate_hz);
  std::int64_t i = 0;
  for (std::size_t s = 0; s < seg_profiles.size(); ++s) {
    const LabelId label = rec.labels.intern(seg_profiles[s]->name);
    for (std::int64_t k = 0; k < lengths[s]; ++k, ++i) {
      const auto* prof = (s > 0 && k < onset) ? seg_profiles[s - 1] : seg_profiles[s];
      const double t = static_cast<double>(i) / script.rate_hz;
      SensorSample smp;
      smp.t_ms = std::llround(static_cast<double>(i) * 1000.0 / script.rate_hz);
      smp.label = label;
      for (std::size_t c = 0; c < 6; ++c) {
        const auto& ch = prof->channels[c];
        const double noise = gauss(rng);
        channel_value(smp, c) =
            ch.offset + ch.amplitude * std::sin(2.0 * std::numbers::pi * ch.freq_hz * t + ch.phase) + ch.noise * noise;
      }
      rec.samples.push_back(smp);
    }
  }
  return rec;
}

ScenarioScript paper_scenario(const std::vector<std::string>& activities, std::uint64_t seed, double onset_delay_s) {
  ScenarioScript s;
  s.rate_hz = 20;
  s.seed = seed;
  s.onset_delay_s = onset_delay_s;
  for (double minutes : {2.0, 1.0, 1.0})
    for (const auto& a : activities) s.segments.push_back({a, minutes * 60.0});
  return s;
}

ScenarioScript paper_scenario(std::size_t n_activities, std::uint64_t seed, double onset_delay_s) {
  const auto profiles = default_profiles(n_activities <= 5 ? ProfileSet::WellSeparated : ProfileSet::Table1);
  if (n_activities == 0 || n_activities > profiles.size())
    throw Error(ErrorCode::InvalidArgument, "paper scenario supports 1 to 20 activities");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n_activities; ++i) names.push_back(profiles[i].name);
  return paper_scenario(names, seed, onset_delay_s);
}

nlohmann::json profiles_to_json(const std::vector<ActivityProfile>& profiles) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : profiles) {
    nlohmann::json ch;
    for (std::size_t c = 0; c < 6; ++c) {
      const auto& x = p.channels[c];
      ch[kChannelKeys[c]] = {{"offset", x.offset},
                             {"amplitude", x.amplitude},
                             {"freq_hz", x.freq_hz},
                             {"phase", x.phase},
                             {"noise", x.noise}};
    }
    arr.push_back({{"name", p.name}, {"channels", std::move(ch)}});
  }
  return {{"profiles", std::move(arr)}};
}

std::vector<ActivityProfile> profiles_from_json(const nlohmann::json& j) {
  std::vector<ActivityProfile> out;
  try {
    for (const auto& jp : j.at("profiles")) {
      ActivityProfile p;
      p.name = jp.at("name").get<std::string>();
      const auto& ch = jp.at("channels");
      for (std::size_t c = 0; c < 6; ++c) {
        if (!ch.contains(kChannelKeys[c])) continue;
        const auto& x = ch.at(kChannelKeys[c]);
        auto& dst = p.channels[c];
        dst.offset = x.value("offset", 0.0);
        dst.amplitude = x.value("amplitude", 0.0);
        dst.freq_hz = x.value("freq_hz", 0.0);
        dst.phase = x.value("phase", 0.0);
        dst.noise = x.value("noise", 0.0);
      }
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad profile file: ") + e.what());
  }
  return out;
}

nlohmann::json scenario_to_json(const ScenarioScript& s) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : s.segments) segs.push_back({{"activity", seg.activity}, {"duration_s", seg.duration_s}});
  return {{"rate_hz", s.rate_hz},
          {"seed", s.seed},
          {"onset_delay_s", s.onset_delay_s},
          {"jitter_samples", s.jitter_samples},
          {"segments", std::move(segs)}};
}

ScenarioScript scenario_from_json(const nlohmann::json& j) {
  ScenarioScript s;
  try {
    s.rate_hz = j.value("rate_hz", 20.0);
    s.seed = j.value("seed", std::uint64_t{1});
    s.onset_delay_s = j.value("onset_delay_s", 0.0);
    s.jitter_samples = j.value("jitter_samples", std::size_t{0});
    for (const auto& seg : j.at("segments"))
      s.segments.push_back({seg.at("activity").get<std::string>(), seg.at("duration_s").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("bad scenario file: ") + e.what());
  }
  validate(s);
  return s;
}

std::string format_csv_row(const SensorSample& s, const LabelRegistry& labels) {
  std::string row = std::to_string(s.t_ms);
  for (double v : {s.ax, s.ay, s.az, s.gx, s.gy, s.gz}) {
    row += ',';
    row += fmt_double(v);
  }
  row += ',';
  if (s.label) {
    const auto& name = labels.name(*s.label);
    if (name.find_first_of(",\"\n\r") != std::string::npos) {
      row += '"';
      for (char ch : name) {
        if (ch == '"') row += '"';
        row += ch;
      }
      row += '"';
    } else {
      row += name;
    }
  }
  return row;
}

void record(const Recording& rec, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& s : rec.samples) os << format_csv_row(s, rec.labels) << '\n';
  if (!os) throw Error(ErrorCode::IoError, "failed writing CSV stream");
}

void record(const Recording& rec, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
  record(rec, os);
}

SensorSample parse_csv_row(std::string_view line, std::size_t row, LabelRegistry& labels) {
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::MalformedRow, "row " + std::to_string(row) + ": " + why);
  };
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  SensorSample s;
  std::size_t pos = 0;
  auto next_field = [&]() -> std::string_view {
    if (pos > line.size()) throw bad("too few fields");
    const auto comma = line.find(',', pos);
    const auto end = comma == std::string_view::npos ? line.size() : comma;
    auto f = line.substr(pos, end - pos);
    pos = end + 1;
    return f;
  };

  const auto t = next_field();
  if (auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), s.t_ms); ec != std::errc{} || p != t.data() + t.size())
    throw bad("bad t_ms '" + std::string(t) + "'");
  for (std::size_t c = 0; c < 6; ++c) {
    const auto f = next_field();
    double v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) throw bad(std::string("bad ") + kChannelKeys[c] + " '" + std::string(f) + "'");
    if (!std::isfinite(v)) throw bad(std::string("non-finite ") + kChannelKeys[c]);
    channel_value(s, c) = v;
  }
  if (pos <= line.size()) {
    auto rest = line.substr(pos);
    std::string name;
    if (!rest.empty() && rest.front() == '"') {
      std::size_t i = 1;
      bool closed = false;
      for (; i < rest.size(); ++i) {
        if (rest[i] == '"') {
          if (i + 1 < rest.size() && rest[i + 1] == '"') {
            name += '"';
            ++i;
          } else {
            closed = true;
            ++i;
            break;
          }
        } else {
          name += rest[i];
        }
      }
      if (!closed || i != rest.size()) throw bad("bad quoted label");
    } else {
      if (rest.find(',') != std::string_view::npos) throw bad("too many fields");
      name = std::string(rest);
    }
    if (!name.empty()) s.label = labels.intern(name);
  }
  return s;
}

Recording replay(std::istream& is) {
  Recording rec;
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::MalformedRow, "row 0: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw Error(ErrorCode::MalformedRow, "row 0: unexpected header '" + line + "'");
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    rec.samples.push_back(parse_csv_row(line, row, rec.labels));
  }
  if (is.bad()) throw Error(ErrorCode::IoError, "failed reading CSV stream");
  return rec;
}

Recording replay(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return replay(is);
}

}  // namespace streamhar
