#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <sstream>

#include "streamhar/error.hpp"
#include "streamhar/pipeline.hpp"
#include "streamhar/synth.hpp"

using namespace streamhar;
using doctest::Approx;

TEST_SUITE("synth") {
  TEST_CASE("paper scenario: 24000 samples, 600 windows, 120 per activity") {
    const auto rec = generate(default_profiles(), paper_scenario(5, 1, 0.0));
    CHECK(rec.samples.size() == 24000);
    CHECK(rec.labels.size() == 5);
    const auto vectors = featurize(rec.samples);
    CHECK(vectors.size() == 600);
    std::map<LabelId, int> per_class;
    for (const auto& v : vectors) {
      CHECK(v.values.size() == 98);
      REQUIRE(v.label);
      ++per_class[*v.label];
    }
    for (const auto& [label, n] : per_class) CHECK(n == 120);
  }

  TEST_CASE("paper scenario durations") {
    double total = 0;
    for (const auto& s : paper_scenario(5).segments) {
      total += s.duration_s;
      CHECK(std::fmod(s.duration_s, 2.0) == 0);
    }
    CHECK(total == 1200);
    const auto one = paper_scenario(1);
    double t1 = 0;
    for (const auto& s : one.segments) {
      t1 += s.duration_s;
      CHECK(s.activity == one.segments.front().activity);
    }
    CHECK(t1 == 240);
    CHECK_THROWS_AS(paper_scenario(0), Error);
    CHECK_THROWS_AS(paper_scenario(21), Error);
  }

  TEST_CASE("window labels stay pure without onset delay or jitter") {
    const auto rec = generate(default_profiles(), paper_scenario(5, 3, 0.0));
    WindowAssembler wa;
    for (const auto& s : rec.samples)
      if (auto out = wa.push(s); out.window)
        for (const auto& x : out.window->samples) CHECK(x.label == out.window->label);
  }

  TEST_CASE("zero noise and amplitude give constant offsets") {
    ActivityProfile p;
    p.name = "Still";
    for (std::size_t c = 0; c < 6; ++c) p.channels[c].offset = static_cast<double>(c) - 2.5;
    ScenarioScript s;
    s.segments = {{"Still", 3.0}};
    const auto rec = generate({p}, s);
    REQUIRE(rec.samples.size() == 60);
    for (const auto& x : rec.samples) {
      CHECK(x.ax == -2.5);
      CHECK(x.gz == 2.5);
      CHECK(x.label == 0);
    }
  }

  TEST_CASE("same seed, same stream; different seed, different stream") {
    const auto a = generate(default_profiles(), paper_scenario(5, 9));
    const auto b = generate(default_profiles(), paper_scenario(5, 9));
    const auto c = generate(default_profiles(), paper_scenario(5, 10));
    CHECK(same_stream(a, b));
    CHECK_FALSE(same_stream(a, c));
    std::ostringstream sa, sb;
    record(a, sa);
    record(b, sb);
    CHECK(sa.str() == sb.str());
  }

  TEST_CASE("unknown activities and bad profiles are rejected") {
    ScenarioScript s;
    s.segments = {{"Flying", 10}};
    try {
      generate(default_profiles(), s);
      FAIL("expected UnknownActivity");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::UnknownActivity);
    }
    ActivityProfile p;
    p.name = "Fast";
    p.channels[0].freq_hz = 10;
    CHECK_THROWS_AS(validate(p, 20), Error);
    p.channels[0].freq_hz = 1;
    p.channels[1].noise = -1;
    CHECK_THROWS_AS(validate(p, 20), Error);
    ScenarioScript bad;
    bad.segments = {{"Walking", 0}};
    CHECK_THROWS_AS(validate(bad), Error);
  }

  TEST_CASE("onset delay keeps the previous motion under the new label") {
    auto script = paper_scenario(5, 1, 2.0);
    const auto delayed = generate(default_profiles(), script);
    script.onset_delay_s = 0;
    const auto prompt = generate(default_profiles(), script);
    REQUIRE(delayed.samples.size() == prompt.samples.size());
    const std::size_t boundary = 2400;  // first switch after 120 s
    CHECK(delayed.samples[boundary].label == prompt.samples[boundary].label);
    CHECK(delayed.samples[boundary].ax != prompt.samples[boundary].ax);
    CHECK(delayed.samples[boundary + 40].ax == prompt.samples[boundary + 40].ax);
  }

  TEST_CASE("jitter changes segment lengths") {
    auto script = paper_scenario(5, 1, 0.0);
    script.jitter_samples = 15;
    const auto rec = generate(default_profiles(), script);
    CHECK(rec.samples.size() != 24000);
    CHECK(rec.samples.size() >= 24000 - 15 * script.segments.size());
    CHECK(rec.samples.size() <= 24000 + 15 * script.segments.size());
  }

  TEST_CASE("default profile sets") {
    const auto five = default_profiles(ProfileSet::WellSeparated);
    CHECK(five.size() == 5);
    const auto twenty = default_profiles(ProfileSet::Table1);
    CHECK(twenty.size() == 20);
    for (const auto& p : twenty) CHECK_NOTHROW(validate(p, 20));
    CHECK(profiles_from_json(profiles_to_json(twenty)).size() == 20);
    const auto back = profiles_from_json(profiles_to_json(five));
    CHECK(back[2].channels[4].phase == five[2].channels[4].phase);
    const auto generated = generate(twenty, paper_scenario(20, 2));
    CHECK(generated.labels.size() == 20);
  }

  TEST_CASE("scenario JSON round-trips") {
    auto s = paper_scenario(3, 4, 1.5);
    s.jitter_samples = 7;
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(back.segments.size() == s.segments.size());
    CHECK(back.seed == 4);
    CHECK(back.onset_delay_s == 1.5);
    CHECK(back.jitter_samples == 7);
    CHECK_THROWS_AS(scenario_from_json(nlohmann::json::parse("{\"segments\": 3}")), Error);
  }

  TEST_CASE("CSV round-trip is bit exact") {
    const auto rec = generate(default_profiles(), paper_scenario(5, 6));
    std::stringstream ss;
    record(rec, ss);
    const auto back = replay(ss);
    CHECK(same_stream(rec, back));
    for (std::size_t i = 0; i < rec.samples.size(); i += 997) {
      CHECK(std::memcmp(&rec.samples[i].ax, &back.samples[i].ax, sizeof(double)) == 0);
      CHECK(std::memcmp(&rec.samples[i].gz, &back.samples[i].gz, sizeof(double)) == 0);
    }
  }

  TEST_CASE("empty stream gives a header-only file") {
    Recording empty;
    std::stringstream ss;
    record(empty, ss);
    CHECK(ss.str() == std::string(kCsvHeader) + "\n");
    CHECK(replay(ss).samples.empty());
  }

  TEST_CASE("rows with missing or quoted labels") {
    std::stringstream ss;
    ss << kCsvHeader << "\n"
       << "0,1,2,3,4,5,6\n"
       << "50,1,2,3,4,5,6,\n"
       << "100,1,2,3,4,5,6,\"Sit, then \"\"stand\"\"\"\n";
    const auto rec = replay(ss);
    REQUIRE(rec.samples.size() == 3);
    CHECK_FALSE(rec.samples[0].label);
    CHECK_FALSE(rec.samples[1].label);
    REQUIRE(rec.samples[2].label);
    CHECK(rec.labels.name(*rec.samples[2].label) == "Sit, then \"stand\"");
    std::stringstream again;
    record(rec, again);
    CHECK(same_stream(replay(again), rec));
  }

  TEST_CASE("malformed rows report their index") {
    std::stringstream ss;
    ss << kCsvHeader << "\n0,1,2,3,4,5,6,A\n50,1,x,3,4,5,6,A\n";
    try {
      replay(ss);
      FAIL("expected MalformedRow");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRow);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
    std::stringstream header("t,ax\n");
    CHECK_THROWS_AS(replay(header), Error);
    LabelRegistry labels;
    CHECK_THROWS_AS(parse_csv_row("1,2,3", 1, labels), Error);
    CHECK_THROWS_AS(parse_csv_row("0,nan,2,3,4,5,6,A", 1, labels), Error);
  }

  TEST_CASE("missing files are IO errors") {
    try {
      replay(std::filesystem::path("/nonexistent/file.csv"));
      FAIL("expected IoError");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IoError);
    }
  }
}
