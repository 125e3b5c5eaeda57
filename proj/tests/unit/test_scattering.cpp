#include "oracles.hpp"

#include <doctest.h>
#include <wavescat/errors.hpp>
#include <wavescat/scattering.hpp>

#include <fmt/format.h>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace wavescat;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> tone(std::size_t n, double f, double fs, double am = 0.0, double fm = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = std::cos(kTwoPi * f * t) * (1.0 + am * std::cos(kTwoPi * fm * t));
  }
  return x;
}

double norm2(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double distance(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Averaging weights built in the time domain: valid-sample mask correlated
// with a periodized Gaussian of std sigma samples, normalized by the count.
std::vector<double> average_weights(std::size_t n, std::size_t margin, double sigma) {
  std::vector<double> g(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (long k = -8; k <= 8; ++k) {
      const double t = static_cast<double>(i) + static_cast<double>(k) * static_cast<double>(n);
      g[i] += std::exp(-0.5 * t * t / (sigma * sigma)) / (sigma * std::sqrt(kTwoPi));
    }
  std::vector<double> w(n, 0.0);
  const double count = static_cast<double>(n - 2 * margin);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t m = margin; m < n - margin; ++m) w[i] += g[(i + n - m) % n] / count;
  return w;
}

double lp_gain(std::size_t n, const std::vector<double> &omegas, double gamma, double p2) {
  const double wp = std::pow(p2 / gamma, 1.0 / gamma);
  double peak = 0.0;
  for (std::size_t k = 1; 2 * k <= n; ++k) {
    const double w = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
    double sum = 0.0;
    for (double wj : omegas) sum += std::pow(oracle::morse(w * wp / wj, gamma, p2), 2);
    if (2 * k == n) sum *= 2.0;
    peak = std::max(peak, sum);
  }
  return std::sqrt(2.0 / peak);
}

std::vector<double> omegas_of(const FilterBank &bank) {
  std::vector<double> w;
  for (std::size_t j = 0; j < bank.scales(); ++j) w.push_back(bank.omega(j));
  return w;
}

} // namespace

TEST_CASE("defaults at one-second segments give 218 ordered paths") {
  const ScatteringNetwork net(1000, {});
  const auto &paths = net.paths();
  // 49 first-order centers from 128 Hz down to 2 Hz; octave-spaced children
  // strictly below each parent.
  CHECK(paths.size() == 1 + 49 + 168);
  CHECK(paths[0].order == 0);
  CHECK(paths[0].name() == "S0");
  CHECK(paths[1].name() == "S1[128]");
  for (std::size_t i = 1; i < paths.size(); ++i) {
    const auto &a = paths[i - 1], &b = paths[i];
    CHECK(a.order <= b.order);
    if (a.order == b.order && b.order == 1) CHECK(a.f1 > b.f1);
    if (a.order == b.order && b.order == 2) CHECK((a.f1 > b.f1 || (a.f1 == b.f1 && a.f2 > b.f2)));
    if (b.order == 2) CHECK(b.f2 < b.f1);
  }
  CHECK(paths.back().name() == fmt::format("S2[{:.4g},2]", paths.back().f1));
}

TEST_CASE("constant input") {
  for (double c : {1.0, -3.5, 1e3}) {
    const std::vector<double> x(1000, c);
    const auto f = scatter(x, {});
    CHECK(std::abs(f.values[0] - c) <= 1e-9 * std::max(1.0, std::abs(c)));
    for (std::size_t i = 1; i < f.values.size(); ++i) CHECK(std::abs(f.values[i]) < 1e-6 * std::abs(c) + 1e-9);
  }
}

TEST_CASE("features match a time-domain reconstruction of the cascade") {
  ScatteringParams p;
  p.invarianceScale = 0.25;
  p.fmin = 16.0;
  p.fmax = 128.0;
  p.q1 = 4;
  const std::size_t n = 512;
  const ScatteringNetwork net(n, p);
  const auto x = oracle::noise(n, 77);
  const auto f = net.transform(x);

  const auto bank1 = build_filterbank(n, p.fs, p.wavelet1, p.q1, p.fmin, p.fmax);
  const auto bank2 = build_filterbank(n, p.fs, p.wavelet2, p.q2, p.fmin, p.fmax);
  const double g1 = lp_gain(n, omegas_of(bank1), 3.0, 60.0);
  const double g2 = lp_gain(n, omegas_of(bank2), 3.0, 3.0);
  const double sigma = 0.5 * p.invarianceScale * p.fs;
  auto margin = [&](double e) { return std::min(static_cast<std::size_t>(std::ceil(e)), n / 4); };
  auto average = [&](const std::vector<double> &u, std::size_t m) {
    const auto w = average_weights(n, m, sigma);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += u[i] * w[i];
    return s;
  };

  CHECK(std::abs(f.values[0] - average(x, 0)) <= 1e-9 * std::abs(f.values[0]) + 1e-12);
  const auto w1 = oracle::cwt_quadrature(x, n, omegas_of(bank1), 3.0, 60.0);
  std::vector<std::vector<double>> u1(bank1.scales(), std::vector<double>(n));
  for (std::size_t a = 0; a < bank1.scales(); ++a) {
    for (std::size_t i = 0; i < n; ++i) u1[a][i] = g1 * std::abs(w1[a][i]);
    const double ref = average(u1[a], margin(bank1.efold(a)));
    CHECK(std::abs(f.values[1 + a] - ref) <= 1e-6 * ref);
  }
  // A few second-order paths; the wide second-order wavelet needs a wider
  // quadrature range.
  for (std::size_t i = 1 + bank1.scales(); i < f.paths.size(); i += 3) {
    const auto &path = f.paths[i];
    std::size_t a = 0, b = 0;
    while (bank1.centerFrequencies()[a] != path.f1) ++a;
    while (bank2.centerFrequencies()[b] != path.f2) ++b;
    const auto w2 = oracle::cwt_quadrature(u1[a], n, {bank2.omega(b)}, 3.0, 3.0, 0.0, 4.0);
    std::vector<double> u2(n);
    for (std::size_t t = 0; t < n; ++t) u2[t] = g2 * std::abs(w2[0][t]);
    const double ref = average(u2, margin(std::max(bank1.efold(a), bank2.efold(b))));
    CHECK(std::abs(f.values[i] - ref) <= 1e-6 * std::max(ref, f.values[1 + a]));
  }
}

TEST_CASE("layer energies do not increase") {
  const ScatteringNetwork net(1000, {});
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = oracle::noise(1000, 300 + static_cast<std::uint64_t>(trial));
    if (trial % 2 == 1) {
      const auto t = tone(1000, 8.0 + 5.0 * trial, 1000.0, 0.8, 3.0);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * x[i] + t[i];
    }
    const auto e = net.energies(x);
    CHECK(e.layer1 <= e.input);
    CHECK(e.layer2 <= e.layer1);
    CHECK(e.layer2 > 0.0);
  }
}

TEST_CASE("non-expansive on random pairs") {
  const ScatteringNetwork net(1000, {});
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto x = oracle::noise(1000, 400 + trial);
    auto y = oracle::noise(1000, 500 + trial);
    for (std::size_t i = 0; i < 1000; ++i) y[i] = x[i] + 0.3 * y[i];
    const auto fx = net.transform(x).values, fy = net.transform(y).values;
    CHECK(distance(fx, fy) <= distance(x, y) * 1.05);
  }
}

TEST_CASE("stable under small shifts") {
  const ScatteringNetwork net(1000, {});
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> freq(4.0, 100.0), ph(0.0, kTwoPi);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> f(6), phase(6);
    for (int c = 0; c < 6; ++c) {
      f[static_cast<std::size_t>(c)] = freq(gen);
      phase[static_cast<std::size_t>(c)] = ph(gen);
    }
    std::vector<double> s(1100, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t c = 0; c < 6; ++c)
        s[i] += std::cos(kTwoPi * f[c] * static_cast<double>(i) / 1000.0 + phase[c]) *
                (1.0 + 0.5 * std::cos(kTwoPi * 2.0 * static_cast<double>(i) / 1000.0 + phase[5 - c]));
    const std::vector<double> base(s.begin(), s.begin() + 1000);
    const auto fb = net.transform(base).values;
    for (std::size_t tau : {1u, 10u, 31u, 62u}) {
      const std::vector<double> shifted(s.begin() + static_cast<long>(tau), s.begin() + static_cast<long>(tau) + 1000);
      CHECK(distance(net.transform(shifted).values, fb) / norm2(fb) < 0.1);
    }
  }
}

TEST_CASE("pure tone peaks at the nearest first-order path") {
  const ScatteringNetwork net(1000, {});
  for (double f0 : {32.0, 10.0, 90.0}) {
    const auto f = net.transform(tone(1000, f0, 1000.0));
    std::size_t best = 1, nearest = 1;
    for (std::size_t i = 1; i < f.paths.size() && f.paths[i].order == 1; ++i) {
      if (f.values[i] > f.values[best]) best = i;
      if (std::abs(std::log(f.paths[i].f1 / f0)) < std::abs(std::log(f.paths[nearest].f1 / f0))) nearest = i;
    }
    CHECK(best == nearest);
  }
}

TEST_CASE("modulated tone peaks at the modulation frequency in the second order") {
  const ScatteringNetwork net(1000, {});
  const auto f = net.transform(tone(1000, 32.0, 1000.0, 0.5, 4.0));
  double f1 = 0.0;
  for (const auto &p : f.paths)
    if (p.order == 1 && std::abs(std::log(p.f1 / 32.0)) < std::abs(std::log(f1 / 32.0))) f1 = p.f1;
  std::size_t best = 0;
  double nearest = 0.0;
  for (std::size_t i = 0; i < f.paths.size(); ++i) {
    if (f.paths[i].order != 2 || f.paths[i].f1 != f1) continue;
    if (best == 0 || f.values[i] > f.values[best]) best = i;
    if (nearest == 0.0 || std::abs(std::log(f.paths[i].f2 / 4.0)) < std::abs(std::log(nearest / 4.0)))
      nearest = f.paths[i].f2;
  }
  REQUIRE(best != 0);
  CHECK(f.paths[best].f2 == nearest);
}

TEST_CASE("values are nonnegative and deterministic") {
  const auto x = oracle::noise(1000, 9);
  const auto a = scatter(x, {}), b = scatter(x, {});
  CHECK(a.values == b.values);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (a.paths[i].order > 0) CHECK(a.values[i] >= 0.0);
}

TEST_CASE("feature matrix rows follow the input order") {
  std::vector<Segment> segs;
  for (std::uint64_t i = 0; i < 6; ++i) {
    Segment s;
    s.samples = oracle::noise(1000, 600 + i);
    s.fs = 1000.0;
    s.ratId = fmt::format("{:02}", i);
    s.labels.chamber = static_cast<Chamber>(i % 3);
    segs.push_back(s);
  }
  const auto table = feature_matrix(segs, {}, 3);
  REQUIRE(table.features.rows() == 6);
  CHECK(table.columns.size() == 218);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto row = table.features.row(i);
    CHECK(std::vector<double>(row.begin(), row.end()) == scatter(segs[i].samples, {}).values);
    CHECK(table.ratIds[i] == segs[i].ratId);
    CHECK(table.labels[i] == segs[i].labels);
  }
  std::vector<Segment> reversed(segs.rbegin(), segs.rend());
  const auto rt = feature_matrix(reversed, {}, 1);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto a = rt.features.row(i), b = table.features.row(5 - i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }

  Segment constant;
  constant.samples.assign(1000, 2.0);
  const auto single = feature_matrix(std::span<const Segment>(&constant, 1), {}, 1);
  const auto row = single.features.row(0);
  CHECK(std::vector<double>(row.begin(), row.end()) == scatter(constant.samples, {}).values);
}

TEST_CASE("errors") {
  std::vector<Segment> segs(2);
  segs[0].samples.assign(1000, 0.0);
  segs[1].samples.assign(999, 0.0);
  CHECK_THROWS_AS(feature_matrix(segs, {}, 1), DataError);
  CHECK_THROWS_AS(feature_matrix(std::span<const Segment>{}, {}, 1), DataError);
  CHECK_THROWS_AS(scatter(std::vector<double>(400, 0.0), {}), DataError);
  ScatteringParams bad;
  bad.q2 = 9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.invarianceScale = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.maxOrder = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
