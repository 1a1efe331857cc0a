#pragma once

// Two-atom bases, the dipole-dipole Hamiltonian in the interatomic frame,
// per-M-block diagonalization over a distance grid and the Wigner rotation
// of lab-frame Zeeman pair states into that frame.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rydpol/structure.hpp"

namespace rydpol {

struct PairTarget {
  Level a;
  Level b;
};

struct PairCutoffs {
  int delta_n = 4;
  int l_max = -1;  // < 0: max(l_a, l_b) + depth
  double delta_e_ghz = 25.0;
  int depth = 2;  // dipole transitions away from the target
  double r_floor_um = 1.0;
};

struct PairState {
  QuantumState a;
  QuantumState b;

  int two_M() const { return a.two_mj + b.two_mj; }
  bool operator==(const PairState&) const = default;
};

struct PairBasis {
  PairTarget target;
  PairCutoffs cutoffs;
  std::optional<int> two_M;  // unset for an unblocked basis
  std::vector<PairState> states;
  Eigen::VectorXd detuning_ghz;  // pair energy minus target asymptote
  std::vector<Eigen::Index> target_indices;

  Eigen::Index size() const { return static_cast<Eigen::Index>(states.size()); }
  Eigen::Index index_of(const PairState& s) const;
};

// One basis per M block reachable from a rotated target (|M| <= j_a + j_b),
// ordered by M. With split_by_m = false a single basis holds every state.
std::vector<PairBasis> build_pair_basis(const SpeciesParameters& species, const PairTarget& target,
                                        const PairCutoffs& cutoffs, bool split_by_m = true);

// H(R) = diag(detuning) + C3 / R^3 with the R-independent parts cached.
struct PairHamiltonian {
  Eigen::VectorXd detuning_ghz;
  Eigen::MatrixXd c3_ghz_um3;
  double r_floor_um = 1.0;

  Eigen::MatrixXd at(double r_um) const;
};

PairHamiltonian assemble_pair_hamiltonian(const PairBasis& basis, RadialCache& radial);

// GHz, relative to the target asymptote.
Eigen::MatrixXd dd_hamiltonian(const PairBasis& basis, double r_um, RadialCache& radial);

struct TargetRow {
  int two_m1;
  int two_m2;
};

struct BlockSpectrum {
  int two_M = 0;
  Eigen::Index dimension = 0;
  std::vector<TargetRow> target_rows;
  // Per R node, columns in track order.
  std::vector<Eigen::VectorXd> eigenvalues;
  std::vector<Eigen::MatrixXd> target_components;  // rows: target_rows
  std::vector<Eigen::MatrixXd> eigenvectors;       // only with keep_eigenvectors
};

struct PairEigensystem {
  std::string species;
  PairTarget target;
  PairCutoffs cutoffs;
  std::vector<double> r_grid;  // um
  std::vector<BlockSpectrum> blocks;

  const BlockSpectrum* block(int two_M) const;
};

struct DiagonalizeOptions {
  int jobs = 1;
  bool keep_eigenvectors = false;
  bool track = true;
};

PairEigensystem diagonalize_over_grid(const std::vector<PairBasis>& bases,
                                      const std::vector<double>& r_grid, RadialCache& radial,
                                      const DiagonalizeOptions& options = {});

// Log-spaced distance grid.
std::vector<double> log_grid(double lo, double hi, int points);

struct ZeemanAmplitude {
  int two_m1;
  int two_m2;
  double value;
};

struct RotationCoefficients {
  double theta = 0.0;
  int two_j1 = 0;
  int two_j2 = 0;
  Eigen::MatrixXd d1;  // rows m', cols m, ordered -j..j
  Eigen::MatrixXd d2;
  std::vector<ZeemanAmplitude> amplitudes;  // interatomic frame

  double amplitude(int two_m1, int two_m2) const;
  double norm() const;
};

// |m>_lab = sum_m' d^j_{m',m}(theta) |m'>_int for each atom.
RotationCoefficients rotate_pair_state(const PairTarget& target, int two_m1_lab, int two_m2_lab,
                                       double theta);

// Overlap amplitudes <eig_k | rotated target> per R node and block.
struct OverlapTable {
  std::vector<double> r_grid;
  std::vector<int> block_two_M;
  std::vector<std::vector<Eigen::VectorXd>> amplitudes;  // [r][block]

  double total_weight(std::size_t r) const;
};

OverlapTable project_onto_eigenstates(const PairEigensystem& eig,
                                      const RotationCoefficients& rotation);

// Flattened spectrum at one grid node: energies (GHz) and weights |c_k|^2.
struct WeightedSpectrum {
  Eigen::VectorXd energies_ghz;
  Eigen::VectorXd weights;
};

WeightedSpectrum weighted_spectrum(const PairEigensystem& eig, const OverlapTable& overlaps,
                                   std::size_t r_index);

// Outermost R at which |V(R)| reaches the EIT linewidth Omega^2 / gamma_e,
// interpolated in log-log between grid nodes. V, Omega, gamma_e in rad/us.
double blockade_radius(std::span<const double> r_um, std::span<const double> v, double omega,
                       double gamma_e);

// Columnar export: R_um, M, track, eigenvalue_ghz, weight.
void write_eigensystem_table(const std::filesystem::path& file, const PairEigensystem& eig,
                             const OverlapTable& overlaps, const std::vector<std::string>& header);

// Binary cache image; a load replays the stored doubles bit for bit.
void save_eigensystem(const std::filesystem::path& file, const PairEigensystem& eig);
PairEigensystem load_eigensystem(const std::filesystem::path& file);

}  // namespace rydpol
