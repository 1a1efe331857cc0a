#include <cmath>

#include "doctest.h"
#include "rydpol/errors.hpp"
#include "rydpol/fits.hpp"
#include "rydpol/propagation.hpp"
#include "rydpol/units.hpp"

using namespace rydpol;
using units::two_pi_mhz;

namespace {

TransmissionSeries constant_series(double value) {
  TransmissionSeries s;
  for (int i = 0; i < 10; ++i) {
    s.t_us.push_back(0.3 * i);
    s.transmission.push_back(value);
  }
  return s;
}

std::vector<double> grid(double step, int count) {
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back(step * i);
  return t;
}

}  // namespace

TEST_CASE("effective optical depth") {
  for (double x : effective_od(constant_series(1.0))) CHECK(x == 0.0);
  for (double x : effective_od(constant_series(std::exp(-1.0)))) CHECK(x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(effective_od(constant_series(0.0)), DomainError);
  auto s = constant_series(0.5);
  s.t_us[3] = s.t_us[2];
  CHECK_THROWS_AS(effective_od(s), DomainError);
}

TEST_CASE("linear dephasing rate") {
  const auto t = grid(0.25, 17);
  std::vector<double> flat(t.size(), 2.3), line;
  const auto f0 = fit_R_OD(t, flat, 0.0, 4.0);
  CHECK(f0.value("R_OD") == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(f0.value("OD_0") == doctest::Approx(2.3));
  for (double x : t) line.push_back(0.4 + 0.8 * x);
  const auto f = fit_R_OD(t, line, 0.0, 4.0);
  CHECK(std::abs(f.value("R_OD") - 0.8) < 1e-6);
  CHECK(f.sigma("R_OD") >= 0.0);
  CHECK(std::isfinite(f.residual_norm));
  CHECK(f.points_used == 17);
  CHECK_THROWS_AS(fit_R_OD(t, line, 0.0, 0.3), FitError);
  CHECK_THROWS_AS(f.value("k"), ConfigError);
}

TEST_CASE("transmission series slope is the conversion rate") {
  MediumConfig m;
  m.omega = two_pi_mhz(10.8);
  const double n = 3.1, od_im = 1.5;
  const auto s = transmission_time_series(m, n, 0.2, od_im, grid(0.1, 31));
  const auto od = effective_od(s);
  for (std::size_t i = 1; i < od.size(); ++i)
    CHECK((od[i] - od[i - 1]) / 0.1 == doctest::Approx(n * (1.0 - std::exp(-od_im))).epsilon(1e-9));
  CHECK(std::abs(fit_R_OD(s.t_us, od, 0.0, 3.0).value("R_OD") - n * (1.0 - std::exp(-od_im))) < 1e-6);
}

TEST_CASE("rate constant of an exact parabola") {
  std::vector<RatePoint> p;
  for (double r : {0.2, 0.4, 0.6, 0.8, 1.0}) p.push_back({r, 0.1 * r * r});
  const auto f = fit_rate_constant(p, 10.0);
  CHECK(std::abs(f.value("C") - 0.1) < 1e-8);
  CHECK(f.points_used == 5);
  CHECK_THROWS_AS(fit_rate_constant({{0.3, 0.009}}, 10.0), FitError);
  CHECK_THROWS_AS(fit_rate_constant(p, 0.1), FitError);
  CHECK_THROWS_AS(fit_rate_constant({{-1.0, 0.1}}, 10.0), DomainError);
}

TEST_CASE("windowed fit ignores the saturated tail") {
  std::vector<RatePoint> p;
  for (double r : {0.25, 0.5, 0.75, 1.0, 1.25, 1.5}) p.push_back({r, 0.07 * r * r});
  const double edge = quadratic_window(1.0 / 1.5 * 2.0, 2.0);
  CHECK(edge == doctest::Approx(1.5));
  const auto inside = fit_rate_constant(p, edge);
  // Kinked points above the edge, as saturation would produce.
  auto kinked = p;
  for (double r : {1.75, 2.0, 2.3, 3.0}) kinked.push_back({r, 0.07 * 1.5 * r});
  const auto f = fit_rate_constant(kinked, edge);
  CHECK(std::abs(f.value("C") - 0.07) < 1e-12);
  CHECK(f.value("C") == inside.value("C"));
  CHECK(f.sigma("C") == inside.sigma("C"));
  CHECK(f.points_used == inside.points_used);
  CHECK_THROWS_AS(quadratic_window(0.0), DomainError);
}

TEST_CASE("quadratic window follows the photon number in the medium") {
  MediumConfig m;
  m.od = 146.0;
  m.omega = two_pi_mhz(12.0);
  CHECK(quadratic_window(m.delay_us()) * m.delay_us() == doctest::Approx(2.0));
  CHECK(quadratic_window(m.delay_us(), 1.0) == doctest::Approx(0.5 * quadratic_window(m.delay_us())));
}

TEST_CASE("power law of exact samples") {
  std::vector<PowerLawPoint> p;
  for (double om : {6.1, 8.3, 10.8, 16.6, 26.3}) p.push_back({two_pi_mhz(om), 5.0 * std::pow(om, -1.67)});
  const auto f = fit_power_law(p);
  CHECK(std::abs(f.value("k") - 1.67) < 1e-8);
  CHECK(f.value("a") == doctest::Approx(5.0).epsilon(1e-10));
  CHECK(f.sigma("k") >= 0.0);

  // Scale equivariance.
  auto scaled = p;
  for (auto& q : scaled) q.c *= 7.5;
  const auto g = fit_power_law(scaled);
  CHECK(g.value("k") == doctest::Approx(f.value("k")).epsilon(1e-13));
  CHECK(g.value("a") == doctest::Approx(7.5 * f.value("a")).epsilon(1e-13));

  // Two points determine the law exactly.
  const auto two = fit_power_law({{two_pi_mhz(2.0), 1.0}, {two_pi_mhz(8.0), 1.0 / 16.0}});
  CHECK(two.value("k") == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(two.value("a") == doctest::Approx(4.0).epsilon(1e-14));

  CHECK_THROWS_AS(fit_power_law({{two_pi_mhz(2.0), 1.0}}), FitError);
  CHECK_THROWS_AS(fit_power_law({{two_pi_mhz(2.0), 1.0}, {two_pi_mhz(3.0), 0.0}}), DomainError);
  CHECK_THROWS_AS(fit_power_law({{two_pi_mhz(2.0), 1.0}, {two_pi_mhz(2.0), 0.5}}), FitError);
}

TEST_CASE("rate constants scaled as Omega^-4 give k = 4") {
  std::vector<ConversionResult> sweep;
  for (double om : {6.1, 8.3, 10.8, 16.6, 26.3}) {
    ConversionResult r;
    r.medium.omega = two_pi_mhz(om);
    r.n = 1e3 * std::pow(om, -4.0);
    r.od_im = 2.0;
    sweep.push_back(r);
  }
  std::vector<PowerLawPoint> p;
  for (const auto& row : rate_constant_theory(sweep)) p.push_back({row.omega, row.c});
  CHECK(fit_power_law(p).value("k") == doctest::Approx(4.0).epsilon(1e-12));

  // R_in cancels in C.
  auto doubled = sweep;
  for (auto& r : doubled) {
    r.medium.r_in *= 2.0;
    r.n *= 4.0;
  }
  const auto a = rate_constant_theory(sweep), b = rate_constant_theory(doubled);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i].c == doctest::Approx(a[i].c).epsilon(1e-15));
}

TEST_CASE("round trip from conversion rate to rate constant") {
  MediumConfig m;
  m.omega = two_pi_mhz(8.3);
  m.gamma_gr = two_pi_mhz(0.2);
  const double c_true = 0.37, od_im = 2.2, od_sat = 0.15;
  std::vector<RatePoint> points;
  for (double r_in : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    m.r_in = r_in;
    const double n = c_true * r_in * r_in / (1.0 - std::exp(-od_im));
    const auto s = transmission_time_series(m, n, od_sat, od_im, grid(0.5, 21));
    points.push_back({r_in, fit_R_OD(s.t_us, effective_od(s), 0.0, 10.0).value("R_OD")});
  }
  CHECK(std::abs(fit_rate_constant(points, 10.0).value("C") - c_true) < 1e-6 * c_true);
}
