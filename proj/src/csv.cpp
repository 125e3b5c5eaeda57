#include "wavescat/feature_table.hpp"

#include "wavescat/errors.hpp"

#include <fmt/format.h>

#include <atomic>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <mutex>
#include <thread>

namespace wavescat {

namespace {

std::vector<std::string> split(const std::string &line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  // Column names like S2[32,4] contain commas inside brackets.
  int depth = 0;
  for (char c : line) {
    if (c == '[')
      ++depth;
    else if (c == ']')
      --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

constexpr std::array<const char *, 5> kLabelColumns{"rat", "group", "phase", "channel", "chamber"};

} // namespace

void write_feature_csv(std::ostream &out, const FeatureTable &table, std::string_view metadata) {
  if (!metadata.empty())
    out << "# wavescat-config: " << metadata << '\n';
  for (const auto &c : table.columns)
    out << c << ',';
  out << "rat,group,phase,channel,chamber\n";
  std::string line;
  for (std::size_t r = 0; r < table.features.rows(); ++r) {
    line.clear();
    for (double v : table.features.row(r))
      fmt::format_to(std::back_inserter(line), "{:.17g},", v);
    const auto &l = table.labels[r];
    fmt::format_to(std::back_inserter(line), "{},{},{},{},{}\n", table.ratIds[r],
                   to_token(l.group), to_token(l.phase), to_token(l.channel),
                   to_token(l.chamber));
    out << line;
  }
}

FeatureTable read_feature_csv(std::istream &in) {
  std::string line;
  do {
    if (!std::getline(in, line))
      throw DataError("feature csv: missing header");
  } while (line.starts_with("#"));
  auto header = split(line, ',');
  if (header.size() < kLabelColumns.size())
    throw DataError("feature csv: header lacks label columns");
  const std::size_t nfeat = header.size() - kLabelColumns.size();
  for (std::size_t i = 0; i < kLabelColumns.size(); ++i)
    if (header[nfeat + i] != kLabelColumns[i])
      throw DataError(fmt::format("feature csv: expected column '{}'", kLabelColumns[i]));

  FeatureTable t;
  t.columns.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(nfeat));
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty())
      continue;
    auto cells = split(line, ',');
    if (cells.size() != header.size())
      throw DataError(fmt::format("feature csv line {}: expected {} cells, got {}", line_no,
                                  header.size(), cells.size()));
    for (std::size_t i = 0; i < nfeat; ++i) {
      double v = 0.0;
      const auto &c = cells[i];
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc{} || p != c.data() + c.size())
        throw DataError(fmt::format("feature csv line {}: bad number '{}'", line_no, c));
      values.push_back(v);
    }
    t.ratIds.push_back(cells[nfeat]);
    t.labels.push_back({parse_group(cells[nfeat + 1]), parse_phase(cells[nfeat + 2]),
                        parse_channel(cells[nfeat + 3]), parse_chamber(cells[nfeat + 4])});
  }
  t.features = Grid<double>(t.labels.size(), nfeat);
  std::copy(values.begin(), values.end(), t.features.data().begin());
  return t;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)> &fn) {
  if (threads == 0)
    threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count)
          return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error)
            error = std::current_exception();
        }
      }
    });
  pool.clear();
  if (error)
    std::rethrow_exception(error);
}

} // namespace wavescat
