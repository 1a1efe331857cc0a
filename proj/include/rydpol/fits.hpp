#pragma once

// Analysis chain for transmission time series: OD_eff = -ln T, linear
// dephasing rate R_OD, quadratic rate constant C and power law C = a Omega^-k.

#include <string>
#include <vector>

namespace rydpol {

struct TransmissionSeries {
  std::vector<double> t_us;
  std::vector<double> transmission;
  double r_in = 0.0;   // photons/us
  double omega = 0.0;  // rad/us
  int n = 0;

  void validate() const;
};

struct FitParameter {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;
};

struct FitResult {
  std::string model;
  std::vector<FitParameter> parameters;
  double residual_norm = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t points_used = 0;

  const FitParameter& parameter(const std::string& name) const;
  double value(const std::string& name) const { return parameter(name).value; }
  double sigma(const std::string& name) const { return parameter(name).sigma; }
};

std::vector<double> effective_od(const TransmissionSeries& series);

// OLS line OD_eff = intercept + R_OD t over t in [t_lo, t_hi].
FitResult fit_R_OD(const std::vector<double>& t_us, const std::vector<double>& od, double t_lo_us,
                   double t_hi_us);

struct RatePoint {
  double r_in = 0.0;  // photons/us
  double r_od = 0.0;  // 1/us
};

// One-parameter fit R_OD = C R_in^2 over points with R_in <= r_in_max.
FitResult fit_rate_constant(const std::vector<RatePoint>& points, double r_in_max);

// Window edge where the mean photon number in the medium, R_in tau_delay,
// reaches `photons` (default 2).
double quadratic_window(double delay_us, double photons = 2.0);

struct PowerLawPoint {
  double omega = 0.0;  // rad/us
  double c = 0.0;
};

// Log-log OLS for C = a Omega^-k. Omega is taken in units of 2pi MHz, so a
// carries C's units at Omega = 2pi x 1 MHz.
FitResult fit_power_law(const std::vector<PowerLawPoint>& points);

}  // namespace rydpol
