#include <doctest.h>
#include <wavescat/cwt.hpp>
#include <wavescat/errors.hpp>
#include <wavescat/synth.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

using namespace wavescat;
namespace fs = std::filesystem;

namespace {

std::string bytes_of(const RecordingSession &s) {
  std::ostringstream out;
  write_session(s, out);
  return out.str();
}

std::string read_file(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("wavescat_synth_" + name);
  fs::remove_all(dir);
  return dir;
}

// Mean |CWT|^2 over 4-12 Hz, optionally restricted to one chamber.
double theta(const RecordingSession &s, std::optional<Chamber> only) {
  const std::size_t n = s.hip.samples.size();
  const auto bank = build_filterbank(n, s.fs(), {}, 4, 4.0, 12.0);
  const auto c = cwt(s.hip.samples, bank);
  double sum = 0.0;
  std::size_t cells = 0;
  for (std::size_t t = 0; t < n; t += 10) {
    if (only && chamber_at(s.track, static_cast<double>(t) / s.fs()) != only) continue;
    for (std::size_t j = 0; j < bank.scales(); ++j)
      if (c.axes.valid(j, t)) {
        sum += std::norm(c.coefficients(j, t));
        ++cells;
      }
  }
  REQUIRE(cells > 0);
  return sum / static_cast<double>(cells);
}

} // namespace

TEST_CASE("sessions are deterministic and keyed by their arguments") {
  const SynthSpec spec;
  const auto a = generate_session(spec, "03", Group::Food, Phase::PostTest);
  const auto b = generate_session(spec, "03", Group::Food, Phase::PostTest);
  CHECK(bytes_of(a) == bytes_of(b));
  CHECK(bytes_of(a) != bytes_of(generate_session(spec, "04", Group::Food, Phase::PostTest)));
  CHECK(bytes_of(a) != bytes_of(generate_session(spec, "03", Group::Food, Phase::PreTest)));
  SynthSpec other = spec;
  other.seed = 43;
  CHECK(bytes_of(a) != bytes_of(generate_session(other, "03", Group::Food, Phase::PostTest)));
  validate_session(a);
  CHECK(a.hip.samples.size() == 60000);
  CHECK(a.nac.samples.size() == 60000);
  CHECK(a.ratId == "03");
}

TEST_CASE("baseline is unit-RMS noise with every chamber visited") {
  SynthSpec spec;
  spec.delta = 0.0;
  const auto s = generate_session(spec, "01", Group::Saline, Phase::PreTest);
  for (const auto *ch : {&s.hip, &s.nac}) {
    double ss = 0.0;
    for (double v : ch->samples) ss += v * v;
    CHECK(std::sqrt(ss / static_cast<double>(ch->samples.size())) == doctest::Approx(1.0).epsilon(0.02));
  }
  std::set<Chamber> seen;
  for (const auto &p : s.track) seen.insert(p.chamber);
  CHECK(seen.size() == 3);
  CHECK(s.track.front().t == 0.0);
}

TEST_CASE("zero separability makes every class the same process") {
  SynthSpec spec;
  spec.delta = 0.0;
  const auto a = generate_session(spec, "02", Group::Food, Phase::PostTest);
  const auto b = generate_session(spec, "02", Group::Saline, Phase::PreTest);
  // Same spectral shape: band power ratios agree to within sampling noise.
  auto band = [](const RecordingSession &s, double lo, double hi) {
    const auto bank = build_filterbank(s.hip.samples.size(), s.fs(), {}, 2, lo, hi);
    const auto c = cwt(s.hip.samples, bank);
    double sum = 0.0;
    for (std::size_t j = 0; j < bank.scales(); ++j)
      for (std::size_t t = 5000; t < 55000; t += 50) sum += std::norm(c.coefficients(j, t));
    return sum;
  };
  CHECK(band(a, 4.0, 12.0) / band(b, 4.0, 12.0) == doctest::Approx(1.0).epsilon(0.5));
  CHECK(band(a, 40.0, 80.0) / band(b, 40.0, 80.0) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("full separability raises rewarded-chamber theta in food post-test") {
  SynthSpec spec;
  spec.delta = 1.0;
  int checked = 0;
  for (const auto &m : cohort_members(spec)) {
    if (m.group != Group::Food) continue;
    const auto s = generate_session(spec, m.ratId, Group::Food, Phase::PostTest);
    if (std::none_of(s.track.begin(), s.track.end(), [](const PositionSample &p) { return p.chamber == Chamber::Rewarded; }))
      continue;
    const double pre = theta(generate_session(spec, m.ratId, Group::Food, Phase::PreTest), std::nullopt);
    CHECK(theta(s, Chamber::Rewarded) >= 3.0 * pre);
    ++checked;
  }
  CHECK(checked >= 2);
}

TEST_CASE("tag frequencies are distinct and scale with the sampling rate") {
  const SynthSpec spec;
  std::set<double> tags;
  for (auto g : {Group::Saline, Group::Morphine, Group::Food})
    for (auto p : {Phase::PreTest, Phase::PostTest})
      for (auto c : {Channel::HIP, Channel::NAc}) tags.insert(tag_frequency(spec, g, p, c));
  CHECK(tags.size() == 12);
  CHECK(*tags.rbegin() < spec.fs / 2.0);
  SynthSpec slow = spec;
  slow.fs = 200.0;
  CHECK(scaled_frequency(slow, 130.0) == doctest::Approx(100.0));
  CHECK(scaled_frequency(spec, 130.0) == 130.0);
  CHECK(tag_frequency(slow, Group::Food, Phase::PostTest, Channel::NAc) < 100.0);
}

TEST_CASE("cohort layout and naming") {
  const SynthSpec spec;
  const auto members = cohort_members(spec);
  REQUIRE(members.size() == 19);
  CHECK(members.front().ratId == "01");
  CHECK(members.front().group == Group::Saline);
  CHECK(members[7].group == Group::Morphine);
  CHECK(members.back().ratId == "19");
  CHECK(members.back().group == Group::Food);
  CHECK(session_file_name("07", Group::Saline, Phase::PostTest) == "rat07_saline_post.wscat");

  const auto dir = scratch("cohort");
  const auto files = generate_cohort(spec, dir);
  CHECK(files.size() == 38);
  std::size_t on_disk = 0;
  for (const auto &e : fs::directory_iterator(dir)) on_disk += e.path().extension() == ".wscat";
  CHECK(on_disk == 38);
  for (const auto &f : {files.front(), files.back()}) {
    const auto s = load_session(f);
    CHECK(f.filename() == session_file_name(s.ratId, s.group, s.phase));
  }
  const auto again = scratch("cohort_again");
  const auto files2 = generate_cohort(spec, again);
  for (std::size_t i = 0; i < files.size(); i += 7) CHECK(read_file(files[i]) == read_file(files2[i]));
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("unwritable output is a data error") {
  const auto dir = scratch("blocked");
  fs::create_directories(dir);
  std::ofstream(dir / "file") << "x";
  SynthSpec spec;
  spec.ratsSaline = 1;
  spec.ratsMorphine = spec.ratsFood = 0;
  CHECK_THROWS_AS(generate_cohort(spec, dir / "file" / "sub"), DataError);
  fs::remove_all(dir);
}

TEST_CASE("config files") {
  std::istringstream in("# cohort\nrats_saline = 2\nrats_morphine=1\nrats_food=3\nsession_len=30\nfs=500\ndelta=0.5\nseed=9\nmean_dwell=5\n");
  const auto s = SynthSpec::from_config(in);
  CHECK(s.ratsSaline == 2);
  CHECK(s.ratsFood == 3);
  CHECK(s.fs == 500.0);
  CHECK(s.seed == 9);
  CHECK(s.meanDwell == 5.0);
  std::istringstream round(s.to_config());
  CHECK(SynthSpec::from_config(round).to_config() == s.to_config());

  for (const char *bad : {"delta=1.5\n", "delta=-0.1\n", "fs=100\n", "session_len=5\n", "bogus=1\n",
                          "seed=1\nseed=2\n", "rats_food=x\n", "noequals\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(SynthSpec::from_config(b), ConfigError);
  }
}
