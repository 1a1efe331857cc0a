#include "rydpol/structure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rydpol/angular.hpp"
#include "rydpol/errors.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

namespace {

int doubled(double v) { return static_cast<int>(std::lround(2.0 * v)); }

}  // namespace

QuantumState::QuantumState(int n_, int l_, double j_, double mj_)
    : n(n_), l(l_), two_j(doubled(j_)), two_mj(doubled(mj_)) {}

QuantumState QuantumState::from_doubled(int n, int l, int two_j, int two_mj) {
  QuantumState s;
  s.n = n;
  s.l = l;
  s.two_j = two_j;
  s.two_mj = two_mj;
  return s;
}

bool valid_level(const Level& level) {
  if (level.n < 1 || level.l < 0 || level.l >= level.n) return false;
  if (level.l == 0) return level.two_j == 1;
  return level.two_j == 2 * level.l - 1 || level.two_j == 2 * level.l + 1;
}

bool QuantumState::valid() const {
  return valid_level(level()) && std::abs(two_mj) <= two_j && ((two_j - two_mj) % 2 == 0);
}

Level make_level(int n, int l, double j) { return {n, l, doubled(j)}; }

char orbital_letter(int l) {
  static constexpr const char* kLetters = "SPDFGHIKLMNOQRTUV";
  if (l < 0 || l > 16) return '?';
  return kLetters[l];
}

int orbital_from_letter(char c) {
  static const std::string kLetters = "SPDFGHIKLMNOQRTUV";
  const auto pos = kLetters.find(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (pos == std::string::npos) throw ConfigError(std::string("unknown orbital letter '") + c + "'");
  return static_cast<int>(pos);
}

std::string to_string(const Level& level) {
  std::ostringstream os;
  os << level.n << orbital_letter(level.l) << level.two_j << "/2";
  return os.str();
}

std::string to_string(const QuantumState& s) {
  std::ostringstream os;
  os << to_string(s.level()) << ",m=" << s.two_mj << "/2";
  return os.str();
}

// ---------------------------------------------------------------------------
// Species data

const DefectChannel* SpeciesParameters::channel(int l, int two_j) const {
  auto it = channels.find({l, two_j});
  return it == channels.end() ? nullptr : &it->second;
}

bool SpeciesParameters::covers(int l, int two_j) const {
  return channel(l, two_j) != nullptr || (zero_defect_from_l && l >= *zero_defect_from_l);
}

SpeciesParameters SpeciesParameters::hydrogen() {
  SpeciesParameters s;
  s.name = "H";
  s.rydberg_constant = 0.5;
  s.core_polarizability = 0.0;
  s.zero_defect_from_l = 0;
  return s;
}

SpeciesParameters SpeciesParameters::rubidium87() {
  return load(std::filesystem::path(RYDPOL_DATA_DIR) / "rb87.json");
}

SpeciesParameters SpeciesParameters::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open species file " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("species file " + file.string() + ": " + e.what());
  }
  SpeciesParameters s;
  try {
    s.format_version = j.at("format_version").get<int>();
    if (s.format_version != 1)
      throw ConfigError("species file " + file.string() + ": unsupported format_version");
    s.name = j.at("species").get<std::string>();
    s.rydberg_constant = j.at("rydberg_constant_hartree").get<double>();
    s.core_polarizability = j.value("core_polarizability_au", 0.0);
    if (j.contains("zero_defect_from_l") && !j["zero_defect_from_l"].is_null())
      s.zero_defect_from_l = j["zero_defect_from_l"].get<int>();
    for (const auto& c : j.at("channels")) {
      const int l = c.at("l").get<int>();
      const int two_j = doubled(c.at("j").get<double>());
      s.channels[{l, two_j}] = {c.at("delta0").get<double>(), c.value("delta2", 0.0)};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("species file " + file.string() + ": " + e.what());
  }
  return s;
}

std::string SpeciesParameters::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["species"] = name;
  j["rydberg_constant_hartree"] = rydberg_constant;
  j["core_polarizability_au"] = core_polarizability;
  j["zero_defect_from_l"] = zero_defect_from_l ? nlohmann::ordered_json(*zero_defect_from_l)
                                               : nlohmann::ordered_json(nullptr);
  auto arr = nlohmann::ordered_json::array();
  for (const auto& [key, ch] : channels) {
    nlohmann::ordered_json c;
    c["l"] = key.first;
    c["j"] = 0.5 * key.second;
    c["delta0"] = ch.delta0;
    c["delta2"] = ch.delta2;
    arr.push_back(c);
  }
  j["channels"] = arr;
  return j.dump();
}

// ---------------------------------------------------------------------------
// Energies

double quantum_defect(const SpeciesParameters& species, const Level& level) {
  if (const auto* ch = species.channel(level.l, level.two_j)) {
    const double nd = level.n - ch->delta0;
    return ch->delta0 + ch->delta2 / (nd * nd);
  }
  if (species.zero_defect_from_l && level.l >= *species.zero_defect_from_l) return 0.0;
  throw ChannelCoverageError("species " + species.name + " has no defect data for " +
                             std::string(1, orbital_letter(level.l)) + std::to_string(level.two_j) +
                             "/2");
}

double effective_quantum_number(const SpeciesParameters& species, const Level& level) {
  return level.n - quantum_defect(species, level);
}

double level_energy_au(const SpeciesParameters& species, const Level& level) {
  const double ns = effective_quantum_number(species, level);
  return -species.rydberg_constant / (ns * ns);
}

double level_energy_ghz(const SpeciesParameters& species, const Level& level) {
  return units::hartree_to_ghz(level_energy_au(species, level));
}

double level_energy(const SpeciesParameters& species, const QuantumState& state) {
  return level_energy_ghz(species, state.level());
}

// ---------------------------------------------------------------------------
// Radial wavefunctions

double RadialWavefunction::norm_squared() const {
  // dr = 2 x dx on the uniform x grid
  double s = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) s += u[i] * u[i] * 2.0 * x(i);
  return s * step;
}

double RadialWavefunction::expectation_r() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < size(); ++i) s += u[i] * u[i] * r[i] * 2.0 * x(i);
  return s * step / norm_squared();
}

int RadialWavefunction::node_count() const {
  const double floor = 1e-8 * u.cwiseAbs().maxCoeff();
  int nodes = 0;
  int last_sign = 0;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (std::abs(u[i]) < floor) continue;
    const int sg = u[i] > 0 ? 1 : -1;
    if (last_sign != 0 && sg != last_sign) ++nodes;
    last_sign = sg;
  }
  return nodes;
}

RadialWavefunction radial_wavefunction(const SpeciesParameters& species, const Level& level,
                                       const RadialGridSpec& spec) {
  if (!valid_level(level)) throw DomainError("invalid level " + to_string(level));
  const double ns = effective_quantum_number(species, level);
  if (ns <= 0.0) throw DomainError("effective quantum number <= 0 for " + to_string(level));
  const double h = spec.step;
  const double energy = -0.5 / (ns * ns);
  const double r_max = spec.outer_factor * level.n * (level.n + 15.0);
  double r_in = spec.inner_cutoff.value_or(species.core_polarizability > 0.0
                                               ? std::cbrt(species.core_polarizability)
                                               : h * h);
  const long i_out = static_cast<long>(std::floor(std::sqrt(r_max) / h));
  const long i_in = std::max(1L, static_cast<long>(std::ceil(std::sqrt(r_in) / h)));
  if (i_out - i_in < 8) throw DomainError("radial grid too short for " + to_string(level));
  const long count = i_out - i_in + 1;

  const double centrifugal = (2.0 * level.l + 0.5) * (2.0 * level.l + 1.5);
  auto g = [&](long i) {
    const double x = static_cast<double>(i) * h;
    return -8.0 - 8.0 * energy * x * x + centrifugal / (x * x);
  };

  std::vector<double> X(static_cast<size_t>(count), 0.0);
  std::vector<double> gk(static_cast<size_t>(count));
  for (long k = 0; k < count; ++k) gk[static_cast<size_t>(k)] = g(i_in + k);

  const double h12 = h * h / 12.0;
  X[count - 1] = 1e-30;
  X[count - 2] = 1e-30 * std::exp(h * std::sqrt(std::max(gk[count - 1], 0.0)));
  long first = 0;
  bool seen_allowed = false;
  for (long k = count - 2; k >= 1; --k) {
    const double num = 2.0 * (1.0 + 5.0 * h12 * gk[k]) * X[k] - (1.0 - h12 * gk[k + 1]) * X[k + 1];
    X[k - 1] = num / (1.0 - h12 * gk[k - 1]);
    if (gk[k] < 0.0) seen_allowed = true;
    if (std::abs(X[k - 1]) > 1e200) {
      for (long m = k - 1; m < count; ++m) X[m] *= 1e-200;
    }
    if (spec.truncate_divergence && seen_allowed && gk[k - 1] > 0.0 &&
        std::abs(X[k - 1]) > std::abs(X[k])) {
      first = k;  // entering the inner forbidden region, drop the divergent tail
      if (X[k] * X[k + 1] < 0.0) first = k + 1;
      break;
    }
  }

  RadialWavefunction wf;
  wf.step = h;
  wf.first_index = i_in + first;
  const long n_keep = count - first;
  wf.r.resize(n_keep);
  wf.u.resize(n_keep);
  for (long k = 0; k < n_keep; ++k) {
    const double x = static_cast<double>(wf.first_index + k) * h;
    wf.r[k] = x * x;
    wf.u[k] = std::sqrt(x) * X[first + k];
  }

  if (!spec.truncate_divergence) {
    // innermost classically allowed point
    long k_turn = -1;
    for (long k = first; k < count; ++k)
      if (gk[k] < 0.0) {
        k_turn = k - first;
        break;
      }
    if (k_turn > 0) {
      const double outer = wf.u.tail(n_keep - k_turn).cwiseAbs().maxCoeff();
      Eigen::Index where = 0;
      const double inner = wf.u.head(k_turn).cwiseAbs().maxCoeff(&where);
      if (inner > 10.0 * outer)
        throw IntegrationError("radial integration diverges at the inner cutoff for " +
                                   to_string(level),
                               wf.r[where]);
    }
  }

  const double norm = std::sqrt(wf.norm_squared());
  if (!std::isfinite(norm) || norm == 0.0)
    throw IntegrationError("radial wavefunction not normalizable for " + to_string(level),
                           wf.r[0]);
  wf.u /= norm;

  // sign: outermost lobe positive
  for (Eigen::Index k = wf.size() - 2; k >= 1; --k) {
    if (std::abs(wf.u[k]) >= std::abs(wf.u[k + 1]) && std::abs(wf.u[k]) >= std::abs(wf.u[k - 1]) &&
        std::abs(wf.u[k]) > 0.0) {
      if (wf.u[k] < 0.0) wf.u = -wf.u;
      break;
    }
  }
  wf.normalized = true;
  return wf;
}

namespace {

double interpolate_u(const RadialWavefunction& wf, double x) {
  const double t = x / wf.step - static_cast<double>(wf.first_index);
  if (t < 0.0 || t > static_cast<double>(wf.size() - 1)) return 0.0;
  const auto i = static_cast<Eigen::Index>(std::floor(t));
  if (i >= wf.size() - 1) return wf.u[wf.size() - 1];
  const double f = t - static_cast<double>(i);
  return (1.0 - f) * wf.u[i] + f * wf.u[i + 1];
}

}  // namespace

double radial_dipole_element(const RadialWavefunction& a, const RadialWavefunction& b) {
  double s = 0.0;
  if (a.step == b.step) {
    const long lo = std::max(a.first_index, b.first_index);
    const long hi = std::min(a.first_index + a.size(), b.first_index + b.size());
    for (long i = lo; i < hi; ++i) {
      const double x = static_cast<double>(i) * a.step;
      s += a.u[i - a.first_index] * b.u[i - b.first_index] * x * x * 2.0 * x;
    }
    return s * a.step;
  }
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.x(i);
    s += a.u[i] * interpolate_u(b, x) * a.r[i] * 2.0 * x;
  }
  return s * a.step;
}

double radial_dipole_element(const SpeciesParameters& species, const QuantumState& a,
                             const QuantumState& b, const RadialGridSpec& grid) {
  if (std::abs(a.l - b.l) != 1) return 0.0;
  const auto wa = radial_wavefunction(species, a.level(), grid);
  const auto wb = radial_wavefunction(species, b.level(), grid);
  return radial_dipole_element(wa, wb);
}

double dipole_angular_factor(const QuantumState& a, const QuantumState& b, int q) {
  if (a.two_mj != b.two_mj + 2 * q) return 0.0;
  if (std::abs(a.l - b.l) != 1 || std::abs(a.two_j - b.two_j) > 2) return 0.0;
  constexpr int two_s = 1;
  const double w3 = wigner_3j(a.two_j, 2, b.two_j, -a.two_mj, 2 * q, b.two_mj);
  if (w3 == 0.0) return 0.0;
  const double w6 = wigner_6j(2 * a.l, a.two_j, two_s, b.two_j, 2 * b.l, 2);
  const double w3l = wigner_3j(2 * a.l, 2, 2 * b.l, 0, 0, 0);
  const int phase_we = (a.two_j - a.two_mj) / 2;
  const int phase_j = a.l + (two_s + b.two_j) / 2 + 1;
  const int phase_l = a.l;
  const double mag = std::sqrt((a.two_j + 1.0) * (b.two_j + 1.0)) *
                     std::sqrt((2.0 * a.l + 1.0) * (2.0 * b.l + 1.0));
  const int phase = phase_we + phase_j + phase_l;
  const double v = w3 * w6 * w3l * mag;
  return (phase % 2 == 0) ? v : -v;
}

double dipole_matrix_element(const SpeciesParameters& species, const QuantumState& a,
                             const QuantumState& b, int q, const RadialGridSpec& grid) {
  const double ang = dipole_angular_factor(a, b, q);
  if (ang == 0.0) return 0.0;
  return ang * radial_dipole_element(species, a, b, grid);
}

// ---------------------------------------------------------------------------

RadialCache::RadialCache(SpeciesParameters species, RadialGridSpec grid)
    : species_(std::move(species)), grid_(grid) {}

std::shared_ptr<const RadialWavefunction> RadialCache::wavefunction(const Level& level) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = wavefunctions_.find(level); it != wavefunctions_.end()) return it->second;
  }
  auto wf = std::make_shared<const RadialWavefunction>(radial_wavefunction(species_, level, grid_));
  std::lock_guard lock(mutex_);
  return wavefunctions_.try_emplace(level, std::move(wf)).first->second;
}

double RadialCache::radial(const Level& a, const Level& b) {
  if (std::abs(a.l - b.l) != 1) return 0.0;
  const auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  {
    std::lock_guard lock(mutex_);
    if (auto it = radial_.find(key); it != radial_.end()) return it->second;
  }
  const double v = radial_dipole_element(*wavefunction(key.first), *wavefunction(key.second));
  std::lock_guard lock(mutex_);
  return radial_.try_emplace(key, v).first->second;
}

double RadialCache::dipole(const QuantumState& a, const QuantumState& b, int q) {
  const double ang = dipole_angular_factor(a, b, q);
  if (ang == 0.0) return 0.0;
  return ang * radial(a.level(), b.level());
}

}  // namespace rydpol
