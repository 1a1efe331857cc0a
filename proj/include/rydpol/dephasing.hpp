#pragma once

// Coherent evolution of a rotated Zeeman pair state and its condensation
// into an effective potential V and dephasing rate Gamma on a (R, theta)
// grid, re-expressed over (z, r_perp).

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydpol/pair.hpp"

namespace rydpol {

// Components with weight below this are dropped from the evolution sum.
inline constexpr double kNegligibleWeight = 1e-14;

// Spectrum (GHz) and weights at R, interpolated along tracks in ln R between
// grid nodes. Refuses R outside the grid.
WeightedSpectrum spectrum_at(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um);

struct PairEvolution {
  double r_um = 0.0;
  double theta = 0.0;
  std::vector<double> t_us;
  std::vector<double> survival;  // |<initial|psi(t)>|^2
};

// P(t) = |sum_k w_k exp(-i omega_k t)|^2 on a uniform grid; omega in rad/us.
PairEvolution evolve_spectrum(const Eigen::VectorXd& omega, const Eigen::VectorXd& weights,
                              double t_max_us, std::size_t samples);

PairEvolution pair_evolution(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um,
                             std::span<const double> t_us);

// Least-squares fit of P(t) ~ exp(-2 Gamma t) over [t_lo, t_hi]; Gamma >= 0.
double extract_gamma(const PairEvolution& evolution, double t_lo_us, double t_hi_us);

// First time P rises above 1.05 x its running minimum.
std::optional<double> detect_revival(const PairEvolution& evolution);

enum class PotentialDefinition { max_overlap, first_moment };

std::string to_string(PotentialDefinition d);
PotentialDefinition potential_definition_from_string(const std::string& s);

// Eigenvalues closer than this (GHz) count as one degenerate cluster.
inline constexpr double kDegeneracyToleranceGHz = 1e-7;

// V in rad/us. max_overlap: energy of the degenerate cluster carrying the
// largest summed weight; first_moment: sum_k w_k E_k.
double effective_potential(const WeightedSpectrum& spectrum, PotentialDefinition definition);
double effective_potential(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um,
                           PotentialDefinition definition);

// Blockade radius for one rotation, from the effective potential on the grid.
double blockade_radius(const PairEigensystem& eig, const OverlapTable& overlaps, double omega,
                       double gamma_e, PotentialDefinition definition);

// Gamma is fitted to the survival within a band around the dominant
// cluster: components detuned further than `band` (rad/us) are treated as
// static dressing, dropped, and the remaining weights renormalized.
struct GammaOptions {
  double window_us = 1.0;
  double band = 2.0 * 3.14159265358979323846 * 200.0;  // <= 0: keep everything
  std::size_t samples_per_window = 400;
  double phase_step = 0.05;  // max spread-frequency x dt
  std::size_t max_samples = 400000;
  std::size_t min_window_samples = 16;
};

struct GammaResult {
  double gamma = 0.0;      // rad/us
  double window_us = 0.0;  // after revival clipping
  bool revival_clipped = false;
};

GammaResult dephasing_rate(const WeightedSpectrum& spectrum, const GammaOptions& options);

struct MapOptions {
  std::vector<double> theta_grid;  // radians in [0, pi/2]
  int two_m1_lab = 5;
  int two_m2_lab = 5;
  GammaOptions gamma;
  PotentialDefinition potential = PotentialDefinition::max_overlap;
  int jobs = 1;
};

// V and Gamma (rad/us) sampled on R x theta. z = R cos(theta), r_perp = R sin(theta).
struct DephasingMap {
  std::vector<double> r_grid;      // um, increasing
  std::vector<double> theta_grid;  // rad, increasing in [0, pi/2]
  Eigen::MatrixXd v;               // rows R, cols theta
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd window_us;
  std::vector<std::pair<std::string, std::string>> provenance;

  std::string provenance_value(const std::string& key) const;

  // Bilinear in (ln R, theta). R below the grid clamps to the innermost
  // ring; beyond the grid both V and Gamma vanish.
  double v_at(double z_um, double r_perp_um) const;
  double gamma_at(double z_um, double r_perp_um) const;
  double r_max() const { return r_grid.back(); }

 private:
  double sample(const Eigen::MatrixXd& field, double z_um, double r_perp_um) const;
};

DephasingMap build_map(const PairEigensystem& eig, const MapOptions& options);

void write_map(const std::filesystem::path& file, const DephasingMap& map);
DephasingMap read_map(const std::filesystem::path& file);

}  // namespace rydpol
