#pragma once

// Single-atom Rydberg data: quantum-defect level energies, Numerov radial
// wavefunctions and dipole matrix elements.

#include <Eigen/Dense>
#include <compare>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

namespace rydpol {

// Fine-structure level (n, l, j) without the magnetic quantum number.
struct Level {
  int n = 1;
  int l = 0;
  int two_j = 1;

  double j() const { return 0.5 * two_j; }
  auto operator<=>(const Level&) const = default;
};

// Single-atom state |n l j m_j>. Half-integers are stored doubled.
struct QuantumState {
  int n = 1;
  int l = 0;
  int two_j = 1;
  int two_mj = 1;

  QuantumState() = default;
  QuantumState(int n_, int l_, double j_, double mj_);
  static QuantumState from_doubled(int n, int l, int two_j, int two_mj);

  double j() const { return 0.5 * two_j; }
  double mj() const { return 0.5 * two_mj; }
  Level level() const { return {n, l, two_j}; }
  bool valid() const;

  bool operator==(const QuantumState&) const = default;
  auto operator<=>(const QuantumState&) const = default;
};

Level make_level(int n, int l, double j);
bool valid_level(const Level& level);
char orbital_letter(int l);
int orbital_from_letter(char c);
std::string to_string(const Level& level);
std::string to_string(const QuantumState& state);

struct DefectChannel {
  double delta0 = 0.0;
  double delta2 = 0.0;
};

struct SpeciesParameters {
  std::string name;
  int format_version = 1;
  double rydberg_constant = 0.5;   // Hartree (reduced-mass corrected)
  double core_polarizability = 0;  // a.u.; inner cutoff is alpha_c^(1/3)
  std::map<std::pair<int, int>, DefectChannel> channels;  // (l, two_j)
  // Channels with l >= this value fall back to zero defect.
  std::optional<int> zero_defect_from_l;

  const DefectChannel* channel(int l, int two_j) const;
  bool covers(int l, int two_j) const;

  static SpeciesParameters hydrogen();
  static SpeciesParameters rubidium87();
  static SpeciesParameters load(const std::filesystem::path& file);
  std::string to_json() const;
};

// Rydberg-Ritz defect delta(n, l, j).
double quantum_defect(const SpeciesParameters& species, const Level& level);
double effective_quantum_number(const SpeciesParameters& species, const Level& level);

// Level energy in Hartree and in GHz.
double level_energy_au(const SpeciesParameters& species, const Level& level);
double level_energy(const SpeciesParameters& species, const QuantumState& state);
double level_energy_ghz(const SpeciesParameters& species, const Level& level);

struct RadialGridSpec {
  double step = 0.01;  // step in x = sqrt(r / a0)
  // Inner cutoff in a0. Unset: alpha_c^(1/3) from the species, or a
  // single grid step for a bare Coulomb core.
  std::optional<double> inner_cutoff;
  double outer_factor = 2.0;  // r_max = outer_factor * n * (n + 15)
  bool truncate_divergence = true;
};

// u(r) = r R(r) on a square-root grid x = sqrt(r); grid nodes sit at
// integer multiples of the step so wavefunctions with equal steps share
// nodes.
struct RadialWavefunction {
  double step = 0.0;
  long first_index = 0;  // x_0 = first_index * step
  Eigen::VectorXd r;     // a0, strictly increasing
  Eigen::VectorXd u;
  bool normalized = false;

  Eigen::Index size() const { return r.size(); }
  double x(Eigen::Index i) const { return static_cast<double>(first_index + i) * step; }
  double norm_squared() const;
  double expectation_r() const;
  int node_count() const;
};

RadialWavefunction radial_wavefunction(const SpeciesParameters& species, const Level& level,
                                       const RadialGridSpec& grid = {});

// Integral u_a(r) r u_b(r) dr in a0. Exactly 0 unless |l_a - l_b| = 1.
double radial_dipole_element(const RadialWavefunction& a, const RadialWavefunction& b);
double radial_dipole_element(const SpeciesParameters& species, const QuantumState& a,
                             const QuantumState& b, const RadialGridSpec& grid = {});

// Angular part <a| C^1_q |b> for l-j coupled states (spin spectator).
double dipole_angular_factor(const QuantumState& a, const QuantumState& b, int q);

// <a| d_q |b> in e*a0, d_{+-1} = -+(x +- i y)/sqrt 2, d_0 = z.
// Nonzero only if m_a = m_b + q, |l_a - l_b| = 1, |j_a - j_b| <= 1.
double dipole_matrix_element(const SpeciesParameters& species, const QuantumState& a,
                             const QuantumState& b, int q, const RadialGridSpec& grid = {});

// Memoizes wavefunctions and radial integrals per level pair. Lookups are
// safe from multiple threads.
class RadialCache {
 public:
  explicit RadialCache(SpeciesParameters species, RadialGridSpec grid = {});

  const SpeciesParameters& species() const { return species_; }
  const RadialGridSpec& grid() const { return grid_; }

  std::shared_ptr<const RadialWavefunction> wavefunction(const Level& level);
  double radial(const Level& a, const Level& b);
  double dipole(const QuantumState& a, const QuantumState& b, int q);

 private:
  SpeciesParameters species_;
  RadialGridSpec grid_;
  std::mutex mutex_;
  std::map<Level, std::shared_ptr<const RadialWavefunction>> wavefunctions_;
  std::map<std::pair<Level, Level>, double> radial_;
};

}  // namespace rydpol
