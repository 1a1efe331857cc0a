#include "rydpol/fits.hpp"

#include <cmath>

#include "rydpol/errors.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

void TransmissionSeries::validate() const {
  if (t_us.size() != transmission.size()) throw DomainError("time and transmission lengths differ");
  for (std::size_t i = 1; i < t_us.size(); ++i)
    if (!(t_us[i] > t_us[i - 1])) throw DomainError("times must be strictly increasing");
  for (double v : transmission)
    if (!(v > 0.0)) throw DomainError("transmission must be positive");
}

const FitParameter& FitResult::parameter(const std::string& name) const {
  for (const auto& p : parameters)
    if (p.name == name) return p;
  throw ConfigError("fit result has no parameter '" + name + "'");
}

std::vector<double> effective_od(const TransmissionSeries& series) {
  series.validate();
  std::vector<double> od;
  od.reserve(series.transmission.size());
  for (double v : series.transmission) od.push_back(-std::log(v));
  return od;
}

namespace {

struct Line {
  double intercept, slope, sigma_intercept, sigma_slope, residual_norm;
};

Line ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("degenerate fit window: all abscissae equal");
  Line l;
  l.slope = sxy / sxx;
  l.intercept = my - l.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - l.intercept - l.slope * x[i];
    rss += r * r;
  }
  l.residual_norm = std::sqrt(rss);
  const double s2 = x.size() > 2 ? rss / (n - 2.0) : 0.0;
  l.sigma_slope = std::sqrt(s2 / sxx);
  l.sigma_intercept = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  return l;
}

}  // namespace

FitResult fit_R_OD(const std::vector<double>& t_us, const std::vector<double>& od, double t_lo_us,
                   double t_hi_us) {
  if (t_us.size() != od.size()) throw DomainError("time and OD lengths differ");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t_us.size(); ++i) {
    if (t_us[i] < t_lo_us || t_us[i] > t_hi_us) continue;
    x.push_back(t_us[i]);
    y.push_back(od[i]);
  }
  if (x.size() < 3) throw FitError("R_OD fit needs at least 3 points in the window");
  const Line l = ols(x, y);
  FitResult r;
  r.model = "OD_eff = OD_0 + R_OD t";
  r.parameters = {{"R_OD", l.slope, l.sigma_slope}, {"OD_0", l.intercept, l.sigma_intercept}};
  r.residual_norm = l.residual_norm;
  r.window_lo = t_lo_us;
  r.window_hi = t_hi_us;
  r.points_used = x.size();
  return r;
}

double quadratic_window(double delay_us, double photons) {
  if (!(delay_us > 0.0) || !(photons > 0.0)) throw DomainError("delay and photon number must be positive");
  return photons / delay_us;
}

FitResult fit_rate_constant(const std::vector<RatePoint>& points, double r_in_max) {
  double sxx = 0.0, sxy = 0.0;
  std::vector<RatePoint> used;
  for (const auto& p : points) {
    if (!(p.r_in > 0.0)) throw DomainError("R_in must be positive");
    if (p.r_in > r_in_max) continue;
    used.push_back(p);
    const double x = p.r_in * p.r_in;
    sxx += x * x;
    sxy += x * p.r_od;
  }
  if (used.empty()) throw FitError("no rate points inside the quadratic window");
  if (used.size() < 3) throw FitError("rate-constant fit needs at least 3 points inside the window");
  const double c = sxy / sxx;
  double rss = 0.0;
  for (const auto& p : used) {
    const double r = p.r_od - c * p.r_in * p.r_in;
    rss += r * r;
  }
  FitResult f;
  f.model = "R_OD = C R_in^2";
  f.parameters = {{"C", c, std::sqrt(rss / static_cast<double>(used.size() - 1) / sxx)}};
  f.residual_norm = std::sqrt(rss);
  f.window_lo = 0.0;
  f.window_hi = r_in_max;
  f.points_used = used.size();
  return f;
}

FitResult fit_power_law(const std::vector<PowerLawPoint>& points) {
  if (points.size() < 2) throw FitError("power-law fit needs at least 2 points");
  std::vector<double> x, y;
  for (const auto& p : points) {
    if (!(p.omega > 0.0) || !(p.c > 0.0)) throw DomainError("power-law fit needs positive Omega and C");
    x.push_back(std::log(units::to_mhz(p.omega)));
    y.push_back(std::log(p.c));
  }
  const Line l = ols(x, y);
  FitResult f;
  f.model = "C = a Omega^-k, Omega in 2pi MHz";
  const double a = std::exp(l.intercept);
  f.parameters = {{"k", -l.slope, l.sigma_slope}, {"a", a, a * l.sigma_intercept}};
  f.residual_norm = l.residual_norm;
  f.window_lo = units::to_mhz(points.front().omega);
  f.window_hi = units::to_mhz(points.back().omega);
  f.points_used = points.size();
  return f;
}

}  // namespace rydpol
