#pragma once

// Steady-state EIT propagation of one and two photons on resonance, the
// conversion rate N into stationary Rydberg impurities and the resulting
// transmission decay T(t). Rates in rad/us, lengths in um, times in us.

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "rydpol/dephasing.hpp"
#include "rydpol/fits.hpp"

namespace rydpol {

struct MediumConfig {
  double od = 146.0;
  double sigma_z_um = 80.0;
  double length_um = 320.0;  // 4 sigma_z
  double gamma_e = 2.0 * 3.14159265358979323846 * 6.1;
  double gamma_gr = 2.0 * 3.14159265358979323846 * 0.2;
  double omega = 2.0 * 3.14159265358979323846 * 12.0;
  double w_eff_um = 7.0;
  double r_in = 1.0;  // photons/us
  double speed_of_light = 299792458.0;  // um/us
  // Carried for provenance only.
  std::optional<double> sigma_r_um;
  std::optional<double> w0_um;

  void validate() const;
  double coupling() const;        // G, with OD = 2 G^2 L / (c gamma_e)
  double group_velocity() const;  // c Omega^2 / (G^2 + Omega^2)
  double delay_us() const;        // OD gamma_e / (2 Omega^2)
};

struct SinglePolariton {
  double transmission = 1.0;  // exp(-OD_dec)
  double group_velocity = 0.0;
  double delay_us = 0.0;
  double od_dec = 0.0;
  double numeric_od_dec = 0.0;    // RK4 integration of the field equation
  double numeric_delay_us = 0.0;  // phase slope of the transmitted field
};

SinglePolariton single_polariton_transmission(const MediumConfig& medium);

// Steady-state single-excitation amplitudes per unit input field at z.
struct SingleAmplitudes {
  std::complex<double> e, p, s;
};
SingleAmplitudes single_amplitudes(const MediumConfig& medium, double z_um);

using Profile = std::function<double(double)>;  // relative coordinate z1 - z2 -> rad/us

struct SolverOptions {
  int nodes = 257;
  double max_step_rate = 1.0;  // largest allowed h x (fastest spatial rate)
};

// Amplitudes on the (z1, z2) grid; first index z1. SS is psi_dd.
struct TwoPhotonField {
  std::vector<double> z_um;
  Eigen::MatrixXcd ee, ep, pe, es, se, pp, ps, sp, ss;
  double input_amplitude = 0.0;  // EE(0, 0)
  double r_perp_um = 0.0;
  std::vector<double> v_profile;      // V(z_i - z_0) per node offset i
  std::vector<double> gamma_profile;  // Gamma(z_i - z_0)

  double step() const { return z_um[1] - z_um[0]; }
  double two_photon_transmission() const;  // |EE(L, L)|^2 / |EE(0, 0)|^2
};

TwoPhotonField solve_two_photon(const MediumConfig& medium, const Profile& v, const Profile& gamma,
                                const SolverOptions& options = {});

// int int Gamma(z1 - z2) |SS|^2 dz1 dz2 over the square (trapezoid weights).
double dephasing_integral(const TwoPhotonField& field, const Profile& gamma);

// Gauss-Laguerre nodes and weights for int_0^inf e^-u f(u) du.
void gauss_laguerre(int order, std::vector<double>& nodes, std::vector<double>& weights);

struct ConversionNode {
  double r_perp_um = 0.0;
  double weight = 0.0;
  double n = 0.0;
};

struct ConversionResult {
  MediumConfig medium;
  double n = 0.0;  // events/us
  std::vector<ConversionNode> nodes;
  double od_im = 0.0;
  double rate_constant = 0.0;  // N (1 - e^-OD_im) / R_in^2
};

struct ConversionOptions {
  int transverse_nodes = 12;
  SolverOptions solver;
  std::optional<double> od_im;  // default: impurity_od
  int jobs = 1;
};

// (OD / L) 2 <r_b>_theta with r_b per map ray from the effective potential.
double impurity_od(const MediumConfig& medium, const DephasingMap& map);

ConversionResult conversion_rate(const MediumConfig& medium, const DephasingMap& map,
                                 const ConversionOptions& options = {});

// T(t) = exp(-OD_dec - OD_sat) exp(-N t (1 - e^-OD_im)).
TransmissionSeries transmission_time_series(const MediumConfig& medium, double n, double od_sat,
                                            double od_im, const std::vector<double>& t_us);

struct RateConstantRow {
  double omega = 0.0;
  double c = 0.0;
  double n = 0.0;
  double od_im = 0.0;
};

// Per-Omega rate constants; all other medium fields must agree.
std::vector<RateConstantRow> rate_constant_theory(const std::vector<ConversionResult>& sweep);

}  // namespace rydpol
