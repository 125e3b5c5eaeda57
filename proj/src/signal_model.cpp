#include "wavescat/signal_model.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/random.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace wavescat {

namespace {

constexpr std::string_view kMagic = "WSCAT1";

template <typename E, std::size_t N>
E parse_token(std::string_view token, const std::array<std::pair<std::string_view, E>, N> &table,
              std::string_view what) {
  for (const auto &[name, value] : table)
    if (name == token)
      return value;
  throw DataError(fmt::format("unknown {} token '{}'", what, token));
}

constexpr std::array<std::pair<std::string_view, Channel>, 2> kChannels{
    {{"hip", Channel::HIP}, {"nac", Channel::NAc}}};
constexpr std::array<std::pair<std::string_view, Group>, 3> kGroups{
    {{"saline", Group::Saline}, {"morphine", Group::Morphine}, {"food", Group::Food}}};
constexpr std::array<std::pair<std::string_view, Phase>, 2> kPhases{
    {{"pre", Phase::PreTest}, {"post", Phase::PostTest}}};
constexpr std::array<std::pair<std::string_view, Chamber>, 3> kChambers{
    {{"unrewarded", Chamber::Unrewarded}, {"null", Chamber::Null}, {"rewarded", Chamber::Rewarded}}};

void put_f64(std::string &out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(std::string_view bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

void check_track(std::span<const PositionSample> track, double duration) {
  for (std::size_t i = 0; i < track.size(); ++i) {
    const double t = track[i].t;
    if (!std::isfinite(t) || t < 0.0)
      throw DataError(fmt::format("track sample {}: invalid time {}", i, t));
    if (i > 0 && !(t > track[i - 1].t))
      throw DataError(fmt::format("track sample {}: non-monotone time {} after {}", i, t,
                                  track[i - 1].t));
    if (t > duration)
      throw DataError(
          fmt::format("track sample {}: time {} beyond signal duration {}", i, t, duration));
  }
}

bool valid_rat_id(std::string_view id) {
  return !id.empty() && std::none_of(id.begin(), id.end(), [](char c) {
    return c == '\n' || c == '\r' || c == '=' || c == '/' || c == ' ' || c == '\t';
  });
}

} // namespace

std::string_view to_token(Channel c) { return kChannels[static_cast<int>(c)].first; }
std::string_view to_token(Group g) { return kGroups[static_cast<int>(g)].first; }
std::string_view to_token(Phase p) { return kPhases[static_cast<int>(p)].first; }
std::string_view to_token(Chamber c) { return kChambers[static_cast<int>(c)].first; }

Channel parse_channel(std::string_view t) { return parse_token(t, kChannels, "channel"); }
Group parse_group(std::string_view t) { return parse_token(t, kGroups, "group"); }
Phase parse_phase(std::string_view t) { return parse_token(t, kPhases, "phase"); }
Chamber parse_chamber(std::string_view t) { return parse_token(t, kChambers, "chamber"); }

std::string_view display_name(Channel c) { return c == Channel::HIP ? "HIP" : "NAc"; }
std::string_view display_name(Group g) {
  constexpr std::array<std::string_view, 3> names{"Saline", "Morphine", "Food"};
  return names[static_cast<int>(g)];
}
std::string_view display_name(Phase p) { return p == Phase::PreTest ? "Pre" : "Post"; }
std::string_view display_name(Chamber c) {
  constexpr std::array<std::string_view, 3> names{"Unrewarded", "Null", "Rewarded"};
  return names[static_cast<int>(c)];
}

void validate_session(const RecordingSession &s) {
  if (!(s.hip.fs > 0.0) || !std::isfinite(s.hip.fs))
    throw DataError(fmt::format("invalid sampling rate {}", s.hip.fs));
  if (s.hip.fs != s.nac.fs)
    throw DataError(fmt::format("sampling rate mismatch: hip {} Hz, nac {} Hz", s.hip.fs, s.nac.fs));
  if (s.hip.channel != Channel::HIP || s.nac.channel != Channel::NAc)
    throw DataError("channel tags do not match their slots");
  if (s.hip.samples.empty())
    throw DataError("empty recording");
  if (s.hip.samples.size() != s.nac.samples.size())
    throw DataError(fmt::format("channel length mismatch: hip has {} samples, nac has {}",
                                s.hip.samples.size(), s.nac.samples.size()));
  for (const TimeSeries *ts : {&s.hip, &s.nac})
    for (std::size_t i = 0; i < ts->samples.size(); ++i)
      if (!std::isfinite(ts->samples[i]))
        throw DataError(
            fmt::format("{} sample {} is not finite", to_token(ts->channel), i));
  if (!valid_rat_id(s.ratId))
    throw DataError(fmt::format("invalid rat identifier '{}'", s.ratId));
  check_track(s.track, s.duration());
}

std::optional<Chamber> chamber_at(std::span<const PositionSample> track, double t) {
  auto it = std::upper_bound(track.begin(), track.end(), t,
                             [](double v, const PositionSample &p) { return v < p.t; });
  if (it == track.begin())
    return std::nullopt;
  return std::prev(it)->chamber;
}

void write_session(const RecordingSession &s, std::ostream &out) {
  validate_session(s);
  std::string buf;
  buf += fmt::format("{}\nfs={}\nrat={}\ngroup={}\nphase={}\nnsamples={}\nntrack={}\n\n", kMagic,
                     s.hip.fs, s.ratId, to_token(s.group), to_token(s.phase),
                     s.hip.samples.size(), s.track.size());
  buf.reserve(buf.size() + 16 * s.hip.samples.size() + 9 * s.track.size());
  for (double v : s.hip.samples)
    put_f64(buf, v);
  for (double v : s.nac.samples)
    put_f64(buf, v);
  for (const auto &p : s.track) {
    put_f64(buf, p.t);
    buf.push_back(static_cast<char>(p.chamber));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void save_session(const RecordingSession &s, const std::filesystem::path &path) {
  validate_session(s);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError(fmt::format("cannot write {}", tmp.string()));
    write_session(s, out);
    if (!out)
      throw DataError(fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

RecordingSession parse_session(std::string_view bytes) {
  std::size_t pos = 0;
  int line_no = 0;
  auto next_line = [&]() -> std::string_view {
    auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos)
      throw DataError(fmt::format("line {}: unterminated header", line_no + 1));
    auto line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    return line;
  };

  if (next_line() != kMagic)
    throw DataError("line 1: missing WSCAT1 magic");

  std::map<std::string, std::pair<std::string, int>> header;
  for (;;) {
    auto line = next_line();
    if (line.empty())
      break;
    auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw DataError(fmt::format("line {}: malformed header line '{}'", line_no, line));
    std::string key(line.substr(0, eq));
    if (header.contains(key))
      throw DataError(fmt::format("line {}: duplicate header key '{}'", line_no, key));
    header.emplace(key, std::make_pair(std::string(line.substr(eq + 1)), line_no));
  }

  auto field = [&](const char *key) -> const std::pair<std::string, int> & {
    auto it = header.find(key);
    if (it == header.end())
      throw DataError(fmt::format("header: missing key '{}'", key));
    return it->second;
  };
  for (const auto &[key, v] : header)
    if (key != "fs" && key != "rat" && key != "group" && key != "phase" && key != "nsamples" &&
        key != "ntrack")
      throw DataError(fmt::format("line {}: unknown header key '{}'", v.second, key));

  auto parse_uint = [](const std::pair<std::string, int> &f, const char *key) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(f.first.data(), f.first.data() + f.first.size(), v);
    if (ec != std::errc{} || p != f.first.data() + f.first.size())
      throw DataError(fmt::format("line {}: '{}' is not an integer: '{}'", f.second, key, f.first));
    return v;
  };

  RecordingSession s;
  {
    const auto &f = field("fs");
    double fs = 0.0;
    auto [p, ec] = std::from_chars(f.first.data(), f.first.data() + f.first.size(), fs);
    if (ec != std::errc{} || p != f.first.data() + f.first.size() || !(fs > 0.0) ||
        !std::isfinite(fs))
      throw DataError(fmt::format("line {}: invalid fs '{}'", f.second, f.first));
    s.hip.fs = s.nac.fs = fs;
  }
  s.hip.channel = Channel::HIP;
  s.nac.channel = Channel::NAc;
  {
    const auto &f = field("rat");
    if (!valid_rat_id(f.first))
      throw DataError(fmt::format("line {}: invalid rat identifier '{}'", f.second, f.first));
    s.ratId = f.first;
  }
  try {
    s.group = parse_group(field("group").first);
  } catch (const DataError &e) {
    throw DataError(fmt::format("line {}: {}", field("group").second, e.what()));
  }
  try {
    s.phase = parse_phase(field("phase").first);
  } catch (const DataError &e) {
    throw DataError(fmt::format("line {}: {}", field("phase").second, e.what()));
  }
  const std::uint64_t n = parse_uint(field("nsamples"), "nsamples");
  const std::uint64_t m = parse_uint(field("ntrack"), "ntrack");
  if (n == 0)
    throw DataError(fmt::format("line {}: nsamples must be positive", field("nsamples").second));

  const std::size_t body = pos;
  const std::size_t payload = bytes.size() - body;
  const std::size_t expected = 16 * n + 9 * m;
  if (payload < expected) {
    const std::size_t deficit = expected - payload;
    if (deficit % 8 == 0 && deficit <= 8 * n)
      throw DataError(fmt::format(
          "byte {}: channel length mismatch: hip has {} samples, nac has {}", bytes.size(), n,
          n - deficit / 8));
    throw DataError(fmt::format("byte {}: truncated payload ({} of {} bytes)", bytes.size(),
                                payload, expected));
  }
  if (payload > expected)
    throw DataError(fmt::format("byte {}: {} trailing bytes after track", body + expected,
                                payload - expected));

  s.hip.samples.resize(n);
  s.nac.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off_h = body + 8 * i, off_n = body + 8 * (n + i);
    s.hip.samples[i] = get_f64(bytes, off_h);
    s.nac.samples[i] = get_f64(bytes, off_n);
    if (!std::isfinite(s.hip.samples[i]))
      throw DataError(fmt::format("byte {}: hip sample {} is not finite", off_h, i));
    if (!std::isfinite(s.nac.samples[i]))
      throw DataError(fmt::format("byte {}: nac sample {} is not finite", off_n, i));
  }
  const double duration = s.duration();
  s.track.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t off = body + 16 * n + 9 * i;
    const double t = get_f64(bytes, off);
    const auto code = static_cast<unsigned char>(bytes[off + 8]);
    if (code > 2)
      throw DataError(fmt::format("byte {}: unknown chamber code {}", off + 8, code));
    if (!std::isfinite(t) || t < 0.0)
      throw DataError(fmt::format("byte {}: invalid track time {}", off, t));
    if (i > 0 && !(t > s.track[i - 1].t))
      throw DataError(fmt::format("byte {}: non-monotone track time {} after {}", off, t,
                                  s.track[i - 1].t));
    if (t > duration)
      throw DataError(
          fmt::format("byte {}: track time {} beyond signal duration {}", off, t, duration));
    s.track[i] = {t, static_cast<Chamber>(code)};
  }
  return s;
}

RecordingSession load_session(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_session(ss.view());
  } catch (const DataError &e) {
    throw DataError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<Segment> segment_by_chamber(const RecordingSession &s,
                                        const SegmentationConfig &config) {
  if (!(config.windowLen > 0.0) || !(config.hop > 0.0))
    throw ConfigError("segmentation: window length and hop must be positive");
  if (s.track.empty())
    throw DataError("segmentation: empty chamber track");
  const double fs = s.fs();
  const auto n = s.hip.samples.size();
  const auto len = static_cast<std::size_t>(std::llround(config.windowLen * fs));
  if (len < 2)
    throw ConfigError(fmt::format("segmentation: window of {} s is shorter than two samples",
                                  config.windowLen));
  if (len > n)
    throw ConfigError(fmt::format("segmentation: window of {} s exceeds session duration {} s",
                                  config.windowLen, s.duration()));

  std::vector<Segment> out;
  for (std::size_t k = 0;; ++k) {
    const auto start =
        static_cast<std::size_t>(std::llround(static_cast<double>(k) * config.hop * fs));
    if (start + len > n)
      break;
    const double t0 = static_cast<double>(start) / fs;
    const double t1 = static_cast<double>(start + len - 1) / fs;
    auto it = std::upper_bound(s.track.begin(), s.track.end(), t0,
                               [](double v, const PositionSample &p) { return v < p.t; });
    if (it == s.track.begin())
      continue; // before the first position sample
    if (it != s.track.end() && it->t <= t1)
      continue; // chamber changes inside the window
    const Chamber chamber = std::prev(it)->chamber;
    for (Channel c : {Channel::HIP, Channel::NAc}) {
      const auto &src = s.channel(c).samples;
      Segment seg;
      seg.samples.assign(src.begin() + static_cast<std::ptrdiff_t>(start),
                         src.begin() + static_cast<std::ptrdiff_t>(start + len));
      seg.labels = {s.group, s.phase, c, chamber};
      seg.startTime = t0;
      seg.fs = fs;
      seg.ratId = s.ratId;
      out.push_back(std::move(seg));
    }
  }
  return out;
}

std::vector<int> assign_folds(std::span<const int> strata, int k, std::uint64_t seed) {
  if (k < 2)
    throw ConfigError(fmt::format("k-fold: K must be at least 2 (got {})", k));
  if (static_cast<std::size_t>(k) > strata.size())
    throw ConfigError(
        fmt::format("k-fold: K={} exceeds the number of items ({})", k, strata.size()));
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < strata.size(); ++i)
    members[strata[i]].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(strata.size(), -1);
  std::size_t position = 0;
  for (auto &[key, idx] : members) {
    rng.shuffle(std::span(idx));
    for (std::size_t i : idx)
      fold[i] = static_cast<int>(position++ % static_cast<std::size_t>(k));
  }
  return fold;
}

std::vector<std::vector<std::size_t>> split_folds(std::span<const Segment> segments, int k,
                                                  std::uint64_t seed) {
  std::vector<int> strata(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto &l = segments[i].labels;
    strata[i] = ((static_cast<int>(l.group) * 2 + static_cast<int>(l.phase)) * 2 +
                 static_cast<int>(l.channel)) *
                    3 +
                static_cast<int>(l.chamber);
  }
  auto fold = assign_folds(strata, k, seed);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold.size(); ++i)
    out[static_cast<std::size_t>(fold[i])].push_back(i);
  return out;
}

std::vector<int> assign_group_folds(std::span<const std::string> groups, int k,
                                    std::uint64_t seed) {
  std::vector<std::string> unique(groups.begin(), groups.end());
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (k < 2 || static_cast<std::size_t>(k) > unique.size())
    throw ConfigError(fmt::format("grouped k-fold: K={} needs between 2 and {} groups", k,
                                  unique.size()));
  Rng rng(seed);
  rng.shuffle(std::span(unique));
  std::map<std::string, int> fold_of;
  for (std::size_t i = 0; i < unique.size(); ++i)
    fold_of[unique[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  std::vector<int> fold(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i)
    fold[i] = fold_of[groups[i]];
  return fold;
}

void write_folds_csv(std::ostream &out, std::span<const std::vector<std::size_t>> folds) {
  std::vector<std::pair<std::size_t, std::size_t>> rows;
  for (std::size_t f = 0; f < folds.size(); ++f)
    for (std::size_t i : folds[f])
      rows.emplace_back(i, f);
  std::sort(rows.begin(), rows.end());
  out << "segment_index,fold\n";
  for (const auto &[i, f] : rows)
    out << i << ',' << f << '\n';
}

} // namespace wavescat
