#include "oracles.hpp"

#include <doctest.h>
#include <wavescat/cwt.hpp>
#include <wavescat/errors.hpp>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace wavescat;

namespace {

std::vector<double> omegas(const FilterBank &bank) {
  std::vector<double> w;
  for (std::size_t j = 0; j < bank.scales(); ++j) w.push_back(bank.omega(j));
  return w;
}

std::vector<cplx> row_vector(const Scalogram &s, std::size_t j) {
  const auto r = s.coefficients.row(j);
  return {r.begin(), r.end()};
}

double grid_rel(const Grid<cplx> &a, const Grid<cplx> &b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    num += std::norm(a.data()[i] - b.data()[i]);
    den += std::norm(b.data()[i]);
  }
  return std::sqrt(num / den);
}

} // namespace

TEST_CASE("zero input gives exactly zero coefficients") {
  const auto bank = build_filterbank(256, 1000.0, {}, 4, 10.0, 200.0);
  const std::vector<double> x(256, 0.0);
  const auto s = cwt(x, bank);
  for (const cplx &c : s.coefficients.data()) CHECK(c == cplx{});
}

TEST_CASE("FFT path matches time-domain quadrature of the wavelet integral") {
  SUBCASE("N=256, random input, every scale") {
    const auto bank = build_filterbank(256, 1000.0, {}, 4, 20.0, 250.0);
    const auto x = oracle::noise(256, 17);
    const auto s = cwt(x, bank);
    const auto ref = oracle::cwt_quadrature(x, 256, omegas(bank), 3.0, 60.0);
    for (std::size_t j = 0; j < bank.scales(); ++j)
      CHECK(oracle::relative_l2(row_vector(s, j), ref[j]) < 1e-6);
  }
  SUBCASE("N=512, impulse at the center") {
    const auto bank = build_filterbank(512, 1000.0, {}, 2, 20.0, 200.0);
    std::vector<double> x(512, 0.0);
    x[256] = 1.0;
    const auto s = cwt(x, bank);
    const auto ref = oracle::cwt_quadrature(x, 512, omegas(bank), 3.0, 60.0);
    for (std::size_t j = 0; j < bank.scales(); ++j) {
      CHECK(oracle::relative_l2(row_vector(s, j), ref[j]) < 1e-6);
      // Magnitude integrates to the dilated wavelet's L1 norm.
      double l1 = 0.0, l1ref = 0.0;
      for (std::size_t t = 0; t < 512; ++t) {
        l1 += std::abs(s.coefficients(j, t)) / 1000.0;
        l1ref += std::abs(ref[j][t]) / 1000.0;
      }
      CHECK(std::abs(l1 - l1ref) <= 1e-6 * l1ref);
    }
  }
  SUBCASE("N=1024, padded input, selected scales") {
    const auto bank = build_filterbank(1024, 1000.0, {}, 1, 40.0, 160.0);
    const auto x = oracle::noise(1000, 23);
    const auto s = cwt(x, bank);
    const auto ref = oracle::cwt_quadrature(x, 1024, omegas(bank), 3.0, 60.0);
    for (std::size_t j = 0; j < bank.scales(); ++j)
      CHECK(oracle::relative_l2(row_vector(s, j), ref[j]) < 1e-6);
  }
}

TEST_CASE("linearity and shift covariance") {
  const auto bank = build_filterbank(1024, 1000.0, {}, 8, 2.0, 200.0);
  const auto x = oracle::noise(1024, 1), y = oracle::noise(1024, 2);
  const double a = 0.37, b = -2.1;
  std::vector<double> z(1024);
  for (std::size_t i = 0; i < 1024; ++i) z[i] = a * x[i] + b * y[i];
  const auto cx = cwt(x, bank), cy = cwt(y, bank), cz = cwt(z, bank);
  Grid<cplx> combo(cx.coefficients.rows(), cx.coefficients.cols());
  for (std::size_t i = 0; i < combo.data().size(); ++i)
    combo.data()[i] = a * cx.coefficients.data()[i] + b * cy.coefficients.data()[i];
  CHECK(grid_rel(cz.coefficients, combo) < 1e-10);

  for (std::size_t m : {1u, 37u, 500u}) {
    std::vector<double> xs(1024);
    for (std::size_t i = 0; i < 1024; ++i) xs[(i + m) % 1024] = x[i];
    const auto cs = cwt(xs, bank);
    Grid<cplx> rolled(cx.coefficients.rows(), 1024);
    for (std::size_t j = 0; j < rolled.rows(); ++j)
      for (std::size_t t = 0; t < 1024; ++t) rolled(j, (t + m) % 1024) = cx.coefficients(j, t);
    CHECK(grid_rel(cs.coefficients, rolled) < 1e-10);
  }
}

TEST_CASE("8 Hz cosine: ridge within one voice and unit magnitude") {
  // 32 whole cycles so the periodic transform sees no wrap discontinuity.
  const std::size_t n = 4000;
  const auto bank = build_filterbank(n, 1000.0, {}, 10, 1.0, 100.0);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(2.0 * std::numbers::pi * 8.0 * static_cast<double>(i) / 1000.0);
  const auto s = cwt(x, bank);
  const double voice = std::exp2(1.0 / 10.0);
  std::size_t checked = 0;
  for (std::size_t t = 0; t < n; t += 16) {
    const auto r = ridge_at(s, t);
    if (!s.axes.valid(r.scale, t)) continue;
    ++checked;
    CHECK(s.axes.frequencies[r.scale] <= 8.0 * voice);
    CHECK(s.axes.frequencies[r.scale] >= 8.0 / voice);
    CHECK(std::abs(r.magnitude - 1.0) <= 0.02);
    CHECK(std::abs(r.frequency - 8.0) <= 8.0 * (voice - 1.0));
  }
  CHECK(checked > 50);
}

TEST_CASE("magnitude view") {
  Scalogram s;
  s.coefficients = Grid<cplx>(2, 2);
  s.coefficients(0, 1) = {3.0, 4.0};
  const auto m = scalogram_magnitude(s);
  CHECK(m(0, 1) == 5.0);
  CHECK(m(1, 1) == 0.0);
}

TEST_CASE("cone of influence") {
  const auto bank = build_filterbank(2048, 1000.0, {}, 10, 1.0, 100.0);
  const auto s = cwt(oracle::noise(2000, 4), bank);
  const auto coi = s.axes.coi();
  // Trustworthy cells: only the high frequencies reach the edges.
  for (std::size_t t = 1; t < 1000; ++t) CHECK(coi[t] <= coi[t - 1]);
  for (std::size_t t = 1000; t + 1 < 2000; ++t) CHECK(coi[t + 1] >= coi[t]);
  for (std::size_t t = 2000; t < 2048; ++t) CHECK(std::isinf(coi[t]));
  CHECK(!s.axes.valid(0, 0));
  CHECK(s.axes.valid(0, 1000));
  for (std::size_t j = 0; j < s.axes.scales(); ++j)
    for (std::size_t t = 0; t < 2048; t += 97)
      if (s.axes.valid(j, t)) CHECK(s.axes.frequencies[j] >= coi[t]);
}

TEST_CASE("input errors") {
  const auto bank = build_filterbank(64, 1000.0, {}, 1, 50.0, 200.0);
  CHECK_THROWS_AS(cwt(std::vector<double>(65, 0.0), bank), DataError);
  CHECK_THROWS_AS(cwt(std::vector<double>{}, bank), DataError);
  CHECK_THROWS_AS(cwt(std::vector<double>{1.0, std::nan("")}, bank), DataError);
}

TEST_CASE("CSV and PGM exports") {
  const auto bank = build_filterbank(8, 100.0, {}, 1, 10.0, 40.0);
  const auto s = cwt(std::vector<double>{1, 0, 0, 0, 0, 0, 0, 0}, bank);
  const auto mag = scalogram_magnitude(s);
  std::ostringstream csv;
  write_grid_csv(csv, s.axes, mag, "k=v");
  CHECK(csv.str().rfind("# wavescat-config: k=v\nfreq_hz,0,0.01,", 0) == 0);

  Grid<double> g(2, 3);
  g(0, 0) = 1.0;
  g(0, 1) = 0.5;
  g(1, 2) = 2.0;
  std::ostringstream pgm;
  write_pgm(pgm, g, 1.0, "k=v");
  const std::string p = pgm.str();
  const std::string header = "P5\n# wavescat-config: k=v\n3 2\n255\n";
  REQUIRE(p.size() == header.size() + 6);
  CHECK(p.substr(0, header.size()) == header);
  CHECK(static_cast<unsigned char>(p[header.size()]) == 255);
  CHECK(static_cast<unsigned char>(p[header.size() + 1]) == 128);
  CHECK(static_cast<unsigned char>(p[header.size() + 5]) == 255);
}
