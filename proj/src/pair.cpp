#include "rydpol/pair.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "rydpol/angular.hpp"
#include "rydpol/errors.hpp"
#include "rydpol/parallel.hpp"
#include "rydpol/table.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

namespace {

bool dipole_coupled(const Level& x, const Level& y) {
  return std::abs(x.l - y.l) == 1 && std::abs(x.two_j - y.two_j) <= 2;
}

std::vector<Level> candidate_levels(const SpeciesParameters& species, int n0, int delta_n,
                                    int l_max) {
  std::vector<Level> out;
  for (int n = std::max(1, n0 - delta_n); n <= n0 + delta_n; ++n) {
    for (int l = 0; l <= std::min(l_max, n - 1); ++l) {
      for (int two_j : {2 * l - 1, 2 * l + 1}) {
        if (two_j < 1) continue;
        if (!species.covers(l, two_j)) continue;
        out.push_back({n, l, two_j});
      }
    }
  }
  return out;
}

}  // namespace

Eigen::Index PairBasis::index_of(const PairState& s) const {
  for (Eigen::Index i = 0; i < size(); ++i)
    if (states[static_cast<std::size_t>(i)] == s) return i;
  return -1;
}

std::vector<PairBasis> build_pair_basis(const SpeciesParameters& species, const PairTarget& target,
                                        const PairCutoffs& cutoffs, bool split_by_m) {
  if (cutoffs.delta_n < 0 || cutoffs.delta_e_ghz < 0.0 || cutoffs.depth < 0)
    throw ConfigError("pair cutoffs must be non-negative");
  if (!valid_level(target.a) || !valid_level(target.b))
    throw ConfigError("invalid target levels " + to_string(target.a) + ", " + to_string(target.b));
  const int l_max = cutoffs.l_max >= 0 ? cutoffs.l_max
                                       : std::max(target.a.l, target.b.l) + cutoffs.depth;
  if (target.a.l > l_max || target.b.l > l_max)
    throw ConfigError("l_max excludes the target pair");

  std::set<Level> cand_set;
  for (const auto& lv : candidate_levels(species, target.a.n, cutoffs.delta_n, l_max))
    cand_set.insert(lv);
  for (const auto& lv : candidate_levels(species, target.b.n, cutoffs.delta_n, l_max))
    cand_set.insert(lv);
  const std::vector<Level> cand(cand_set.begin(), cand_set.end());
  std::map<Level, double> energy;
  for (const auto& lv : cand) energy[lv] = level_energy_ghz(species, lv);
  const double e_target = level_energy_ghz(species, target.a) + level_energy_ghz(species, target.b);

  // Breadth-first over pair levels connected by the dipole-dipole operator.
  using LevelPair = std::pair<Level, Level>;
  std::set<LevelPair> visited{{target.a, target.b}};
  std::vector<LevelPair> frontier{{target.a, target.b}};
  for (int step = 0; step < cutoffs.depth; ++step) {
    std::vector<LevelPair> next;
    for (const auto& [pa, pb] : frontier) {
      for (const auto& c : cand) {
        if (!dipole_coupled(pa, c)) continue;
        for (const auto& d : cand) {
          if (!dipole_coupled(pb, d)) continue;
          const double det = energy[c] + energy[d] - e_target;
          if (std::abs(det) > cutoffs.delta_e_ghz) continue;
          if (visited.insert({c, d}).second) next.push_back({c, d});
        }
      }
    }
    frontier = std::move(next);
  }

  const int two_M_max = target.a.two_j + target.b.two_j;
  struct Entry {
    PairState state;
    double det;
  };
  std::map<int, std::vector<Entry>> by_M;
  for (const auto& [la, lb] : visited) {
    const double det = energy.count(la) && energy.count(lb)
                           ? energy[la] + energy[lb] - e_target
                           : level_energy_ghz(species, la) + level_energy_ghz(species, lb) - e_target;
    for (int m1 = -la.two_j; m1 <= la.two_j; m1 += 2) {
      for (int m2 = -lb.two_j; m2 <= lb.two_j; m2 += 2) {
        const int M = m1 + m2;
        if (std::abs(M) > two_M_max) continue;
        PairState s{QuantumState::from_doubled(la.n, la.l, la.two_j, m1),
                    QuantumState::from_doubled(lb.n, lb.l, lb.two_j, m2)};
        by_M[split_by_m ? M : 0].push_back({s, det});
      }
    }
  }

  std::vector<PairBasis> out;
  for (auto& [M, entries] : by_M) {
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
      if (x.det != y.det) return x.det < y.det;
      return std::tie(x.state.a, x.state.b) < std::tie(y.state.a, y.state.b);
    });
    PairBasis basis;
    basis.target = target;
    basis.cutoffs = cutoffs;
    basis.cutoffs.l_max = l_max;
    if (split_by_m) basis.two_M = M;
    basis.detuning_ghz.resize(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) {
      basis.states.push_back(entries[i].state);
      basis.detuning_ghz[static_cast<Eigen::Index>(i)] = entries[i].det;
      if (entries[i].state.a.level() == target.a && entries[i].state.b.level() == target.b)
        basis.target_indices.push_back(static_cast<Eigen::Index>(i));
    }
    out.push_back(std::move(basis));
  }
  if (out.empty()) throw ConfigError("pair basis is empty");
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd PairHamiltonian::at(double r_um) const {
  if (!(r_um > 0.0)) throw DomainError("pair distance must be positive");
  if (r_um < r_floor_um)
    throw DomainError("pair distance " + format_double(r_um) + " um is below the validity floor " +
                      format_double(r_floor_um) + " um");
  Eigen::MatrixXd h = c3_ghz_um3 / (r_um * r_um * r_um);
  h.diagonal() += detuning_ghz;
  return h;
}

PairHamiltonian assemble_pair_hamiltonian(const PairBasis& basis, RadialCache& radial) {
  const Eigen::Index dim = basis.size();
  PairHamiltonian h;
  h.detuning_ghz = basis.detuning_ghz;
  h.r_floor_um = basis.cutoffs.r_floor_um;
  h.c3_ghz_um3 = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& bra = basis.states[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      const auto& ket = basis.states[static_cast<std::size_t>(j)];
      if (bra.two_M() != ket.two_M()) continue;
      if (!dipole_coupled(bra.a.level(), ket.a.level()) ||
          !dipole_coupled(bra.b.level(), ket.b.level()))
        continue;
      // V = -(1/R^3) [2 d1,0 d2,0 + d1,+1 d2,-1 + d1,-1 d2,+1]
      const double v = -(2.0 * radial.dipole(bra.a, ket.a, 0) * radial.dipole(bra.b, ket.b, 0) +
                         radial.dipole(bra.a, ket.a, +1) * radial.dipole(bra.b, ket.b, -1) +
                         radial.dipole(bra.a, ket.a, -1) * radial.dipole(bra.b, ket.b, +1));
      h.c3_ghz_um3(i, j) = v * units::kDipoleC3;
      h.c3_ghz_um3(j, i) = h.c3_ghz_um3(i, j);
    }
  }
  return h;
}

Eigen::MatrixXd dd_hamiltonian(const PairBasis& basis, double r_um, RadialCache& radial) {
  if (!(r_um > 0.0)) throw DomainError("pair distance must be positive");
  return assemble_pair_hamiltonian(basis, radial).at(r_um);
}

// ---------------------------------------------------------------------------

const BlockSpectrum* PairEigensystem::block(int two_M) const {
  for (const auto& b : blocks)
    if (b.two_M == two_M) return &b;
  return nullptr;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw ConfigError("invalid log grid");
  std::vector<double> g(static_cast<std::size_t>(points));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

namespace {

// Greedy maximal-overlap assignment of current eigenvectors to previous
// tracks, ties broken by eigenvalue proximity. Returns perm with
// current column perm[k] continuing track k.
std::vector<Eigen::Index> match_tracks(const Eigen::MatrixXd& prev_vecs, const Eigen::VectorXd& prev_vals,
                                       const Eigen::MatrixXd& cur_vecs, const Eigen::VectorXd& cur_vals) {
  const Eigen::Index d = prev_vecs.cols();
  const Eigen::MatrixXd overlap = (prev_vecs.transpose() * cur_vecs).cwiseAbs();
  struct Cand {
    double ov;
    double de;
    Eigen::Index k;
    Eigen::Index l;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index l = 0; l < d; ++l)
    for (Eigen::Index k = 0; k < d; ++k)
      cands.push_back({overlap(k, l), std::abs(prev_vals[k] - cur_vals[l]), k, l});
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.ov != y.ov) return x.ov > y.ov;
    if (x.de != y.de) return x.de < y.de;
    return std::tie(x.k, x.l) < std::tie(y.k, y.l);
  });
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(d), -1);
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  Eigen::Index assigned = 0;
  for (const auto& c : cands) {
    if (perm[static_cast<std::size_t>(c.k)] >= 0 || used[static_cast<std::size_t>(c.l)]) continue;
    perm[static_cast<std::size_t>(c.k)] = c.l;
    used[static_cast<std::size_t>(c.l)] = true;
    if (++assigned == d) break;
  }
  return perm;
}

}  // namespace

PairEigensystem diagonalize_over_grid(const std::vector<PairBasis>& bases,
                                      const std::vector<double>& r_grid, RadialCache& radial,
                                      const DiagonalizeOptions& options) {
  if (bases.empty()) throw ConfigError("no pair bases to diagonalize");
  for (std::size_t i = 1; i < r_grid.size(); ++i)
    if (!(r_grid[i] > r_grid[i - 1])) throw ConfigError("distance grid must be strictly increasing");
  if (r_grid.empty()) throw ConfigError("empty distance grid");

  PairEigensystem eig;
  eig.species = radial.species().name;
  eig.target = bases.front().target;
  eig.cutoffs = bases.front().cutoffs;
  eig.r_grid = r_grid;

  for (const auto& basis : bases) {
    const PairHamiltonian ham = assemble_pair_hamiltonian(basis, radial);
    BlockSpectrum block;
    block.two_M = basis.two_M.value_or(0);
    block.dimension = basis.size();
    std::vector<Eigen::Index> rows;
    for (auto idx : basis.target_indices) {
      const auto& s = basis.states[static_cast<std::size_t>(idx)];
      block.target_rows.push_back({s.a.two_mj, s.b.two_mj});
      rows.push_back(idx);
    }
    const std::size_t nr = r_grid.size();
    block.eigenvalues.resize(nr);
    block.target_components.resize(nr);
    if (options.keep_eigenvectors) block.eigenvectors.resize(nr);

    Eigen::MatrixXd prev_vecs;
    Eigen::VectorXd prev_vals;
    const std::size_t chunk = static_cast<std::size_t>(std::max(1, options.jobs));
    for (std::size_t start = 0; start < nr; start += chunk) {
      const std::size_t count = std::min(chunk, nr - start);
      std::vector<Eigen::VectorXd> vals(count);
      std::vector<Eigen::MatrixXd> vecs(count);
      parallel_for(count, options.jobs, [&](std::size_t c) {
        const double r = r_grid[start + c];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ham.at(r));
        if (solver.info() != Eigen::Success)
          throw NumericError("eigensolver failed for block M=" + std::to_string(block.two_M) +
                             "/2 at R=" + format_double(r) + " um");
        vals[c] = solver.eigenvalues();
        vecs[c] = solver.eigenvectors();
      });
      for (std::size_t c = 0; c < count; ++c) {
        const std::size_t ir = start + c;
        if (options.track && prev_vecs.size() > 0) {
          const auto perm = match_tracks(prev_vecs, prev_vals, vecs[c], vals[c]);
          Eigen::MatrixXd pv(vecs[c].rows(), vecs[c].cols());
          Eigen::VectorXd pe(vals[c].size());
          for (Eigen::Index k = 0; k < pe.size(); ++k) {
            pv.col(k) = vecs[c].col(perm[static_cast<std::size_t>(k)]);
            pe[k] = vals[c][perm[static_cast<std::size_t>(k)]];
          }
          vecs[c] = std::move(pv);
          vals[c] = std::move(pe);
        }
        // fix the gauge: largest component of each vector positive
        for (Eigen::Index k = 0; k < vecs[c].cols(); ++k) {
          Eigen::Index imax = 0;
          vecs[c].col(k).cwiseAbs().maxCoeff(&imax);
          if (vecs[c](imax, k) < 0.0) vecs[c].col(k) *= -1.0;
        }
        block.eigenvalues[ir] = vals[c];
        block.target_components[ir] = vecs[c](rows, Eigen::all);
        if (options.keep_eigenvectors) block.eigenvectors[ir] = vecs[c];
        prev_vals = vals[c];
        prev_vecs = std::move(vecs[c]);
      }
    }
    eig.blocks.push_back(std::move(block));
  }
  return eig;
}

// ---------------------------------------------------------------------------

double RotationCoefficients::amplitude(int two_m1, int two_m2) const {
  for (const auto& a : amplitudes)
    if (a.two_m1 == two_m1 && a.two_m2 == two_m2) return a.value;
  return 0.0;
}

double RotationCoefficients::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += a.value * a.value;
  return std::sqrt(s);
}

RotationCoefficients rotate_pair_state(const PairTarget& target, int two_m1_lab, int two_m2_lab,
                                       double theta) {
  if (theta < 0.0 || theta > units::kPi + 1e-12)
    throw DomainError("rotation angle must lie in [0, pi]");
  if (std::abs(two_m1_lab) > target.a.two_j || std::abs(two_m2_lab) > target.b.two_j)
    throw DomainError("lab-frame magnetic quantum number exceeds j");
  RotationCoefficients rot;
  rot.theta = theta;
  rot.two_j1 = target.a.two_j;
  rot.two_j2 = target.b.two_j;
  rot.d1 = wigner_d_matrix<double>(rot.two_j1, theta);
  rot.d2 = wigner_d_matrix<double>(rot.two_j2, theta);
  const int c1 = (two_m1_lab + rot.two_j1) / 2;
  const int c2 = (two_m2_lab + rot.two_j2) / 2;
  for (int a = 0; a <= rot.two_j1; ++a) {
    for (int b = 0; b <= rot.two_j2; ++b) {
      const double v = rot.d1(a, c1) * rot.d2(b, c2);
      if (v == 0.0) continue;
      rot.amplitudes.push_back({2 * a - rot.two_j1, 2 * b - rot.two_j2, v});
    }
  }
  return rot;
}

double OverlapTable::total_weight(std::size_t r) const {
  double s = 0.0;
  for (const auto& a : amplitudes[r]) s += a.squaredNorm();
  return s;
}

OverlapTable project_onto_eigenstates(const PairEigensystem& eig,
                                      const RotationCoefficients& rotation) {
  if (rotation.two_j1 != eig.target.a.two_j || rotation.two_j2 != eig.target.b.two_j)
    throw DomainError("rotation built for a different target than the eigensystem");
  OverlapTable t;
  t.r_grid = eig.r_grid;
  for (const auto& b : eig.blocks) t.block_two_M.push_back(b.two_M);
  t.amplitudes.resize(eig.r_grid.size());
  for (std::size_t ir = 0; ir < eig.r_grid.size(); ++ir) {
    for (const auto& b : eig.blocks) {
      Eigen::VectorXd coeff(static_cast<Eigen::Index>(b.target_rows.size()));
      for (std::size_t k = 0; k < b.target_rows.size(); ++k)
        coeff[static_cast<Eigen::Index>(k)] =
            rotation.amplitude(b.target_rows[k].two_m1, b.target_rows[k].two_m2);
      const auto& comp = b.target_components[ir];
      if (comp.rows() != coeff.size()) throw DomainError("target rows do not match eigensystem");
      t.amplitudes[ir].push_back(comp.transpose() * coeff);
    }
  }
  return t;
}

WeightedSpectrum weighted_spectrum(const PairEigensystem& eig, const OverlapTable& overlaps,
                                   std::size_t r_index) {
  Eigen::Index total = 0;
  for (const auto& b : eig.blocks) total += b.eigenvalues[r_index].size();
  WeightedSpectrum s;
  s.energies_ghz.resize(total);
  s.weights.resize(total);
  Eigen::Index off = 0;
  for (std::size_t ib = 0; ib < eig.blocks.size(); ++ib) {
    const auto& e = eig.blocks[ib].eigenvalues[r_index];
    s.energies_ghz.segment(off, e.size()) = e;
    s.weights.segment(off, e.size()) = overlaps.amplitudes[r_index][ib].array().square().matrix();
    off += e.size();
  }
  return s;
}

double blockade_radius(std::span<const double> r_um, std::span<const double> v, double omega,
                       double gamma_e) {
  if (!(omega > 0.0) || !(gamma_e > 0.0)) throw DomainError("Omega and gamma_e must be positive");
  if (r_um.size() != v.size() || r_um.size() < 2) throw DomainError("bad potential curve");
  const double linewidth = omega * omega / gamma_e;
  const std::size_t n = r_um.size();
  if (std::abs(v[n - 1]) >= linewidth)
    throw DomainError("interaction exceeds the EIT linewidth at the largest grid distance; extend "
                      "the distance grid outward");
  for (std::size_t i = n - 1; i-- > 0;) {
    if (std::abs(v[i]) >= linewidth) {
      const double v0 = std::abs(v[i]), v1 = std::abs(v[i + 1]);
      if (v1 <= 0.0) return r_um[i + 1];
      const double t = std::log(linewidth / v0) / std::log(v1 / v0);
      return std::exp(std::log(r_um[i]) + t * (std::log(r_um[i + 1]) - std::log(r_um[i])));
    }
  }
  throw DomainError("interaction stays below the EIT linewidth on the whole grid; extend the "
                    "distance grid inward");
}

void write_eigensystem_table(const std::filesystem::path& file, const PairEigensystem& eig,
                             const OverlapTable& overlaps, const std::vector<std::string>& header) {
  Table t;
  for (const auto& h : header) {
    const auto colon = h.find(": ");
    if (colon == std::string::npos) t.meta.emplace_back(h, "");
    else t.meta.emplace_back(h.substr(0, colon), h.substr(colon + 2));
  }
  t.meta.emplace_back("units", "R_um=um, eigenvalue_ghz=GHz relative to target asymptote");
  t.columns = {"R_um", "M", "track", "eigenvalue_ghz", "weight"};
  for (std::size_t ir = 0; ir < eig.r_grid.size(); ++ir) {
    for (std::size_t ib = 0; ib < eig.blocks.size(); ++ib) {
      const auto& e = eig.blocks[ib].eigenvalues[ir];
      const auto& a = overlaps.amplitudes[ir][ib];
      for (Eigen::Index k = 0; k < e.size(); ++k)
        t.rows.push_back({eig.r_grid[ir], 0.5 * eig.blocks[ib].two_M, static_cast<double>(k), e[k],
                          a[k] * a[k]});
    }
  }
  write_table(file, t);
}

// ---------------------------------------------------------------------------
// Binary cache image

namespace {

constexpr char kMagic[8] = {'R', 'Y', 'D', 'P', 'E', 'I', 'G', '1'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("truncated eigensystem cache file");
  return v;
}
void put_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  put<std::int64_t>(out, m.rows());
  put<std::int64_t>(out, m.cols());
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
}
Eigen::MatrixXd get_matrix(std::ifstream& in) {
  const auto r = get<std::int64_t>(in);
  const auto c = get<std::int64_t>(in);
  Eigen::MatrixXd m(r, c);
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  if (!in) throw ConfigError("truncated eigensystem cache file");
  return m;
}
void put_level(std::ofstream& out, const Level& l) {
  put<std::int32_t>(out, l.n);
  put<std::int32_t>(out, l.l);
  put<std::int32_t>(out, l.two_j);
}
Level get_level(std::ifstream& in) {
  Level l;
  l.n = get<std::int32_t>(in);
  l.l = get<std::int32_t>(in);
  l.two_j = get<std::int32_t>(in);
  return l;
}

}  // namespace

void save_eigensystem(const std::filesystem::path& file, const PairEigensystem& eig) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  const auto tmp = file.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write cache file " + tmp);
    out.write(kMagic, sizeof kMagic);
    put<std::int64_t>(out, static_cast<std::int64_t>(eig.species.size()));
    out.write(eig.species.data(), static_cast<std::streamsize>(eig.species.size()));
    put_level(out, eig.target.a);
    put_level(out, eig.target.b);
    put<std::int32_t>(out, eig.cutoffs.delta_n);
    put<std::int32_t>(out, eig.cutoffs.l_max);
    put<double>(out, eig.cutoffs.delta_e_ghz);
    put<std::int32_t>(out, eig.cutoffs.depth);
    put<double>(out, eig.cutoffs.r_floor_um);
    put<std::int64_t>(out, static_cast<std::int64_t>(eig.r_grid.size()));
    for (double r : eig.r_grid) put<double>(out, r);
    put<std::int64_t>(out, static_cast<std::int64_t>(eig.blocks.size()));
    for (const auto& b : eig.blocks) {
      put<std::int32_t>(out, b.two_M);
      put<std::int64_t>(out, b.dimension);
      put<std::int64_t>(out, static_cast<std::int64_t>(b.target_rows.size()));
      for (const auto& tr : b.target_rows) {
        put<std::int32_t>(out, tr.two_m1);
        put<std::int32_t>(out, tr.two_m2);
      }
      for (std::size_t ir = 0; ir < eig.r_grid.size(); ++ir) {
        put_matrix(out, b.eigenvalues[ir]);
        put_matrix(out, b.target_components[ir]);
      }
    }
  }
  std::filesystem::rename(tmp, file);
}

PairEigensystem load_eigensystem(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read cache file " + file.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMagic))
    throw ConfigError(file.string() + " is not an eigensystem cache file");
  PairEigensystem eig;
  const auto name_len = get<std::int64_t>(in);
  eig.species.resize(static_cast<std::size_t>(name_len));
  in.read(eig.species.data(), name_len);
  eig.target.a = get_level(in);
  eig.target.b = get_level(in);
  eig.cutoffs.delta_n = get<std::int32_t>(in);
  eig.cutoffs.l_max = get<std::int32_t>(in);
  eig.cutoffs.delta_e_ghz = get<double>(in);
  eig.cutoffs.depth = get<std::int32_t>(in);
  eig.cutoffs.r_floor_um = get<double>(in);
  const auto nr = get<std::int64_t>(in);
  for (std::int64_t i = 0; i < nr; ++i) eig.r_grid.push_back(get<double>(in));
  const auto nb = get<std::int64_t>(in);
  for (std::int64_t ib = 0; ib < nb; ++ib) {
    BlockSpectrum b;
    b.two_M = get<std::int32_t>(in);
    b.dimension = get<std::int64_t>(in);
    const auto nt = get<std::int64_t>(in);
    for (std::int64_t k = 0; k < nt; ++k) {
      const int m1 = get<std::int32_t>(in);
      const int m2 = get<std::int32_t>(in);
      b.target_rows.push_back({m1, m2});
    }
    for (std::int64_t ir = 0; ir < nr; ++ir) {
      b.eigenvalues.push_back(get_matrix(in));
      b.target_components.push_back(get_matrix(in));
    }
    eig.blocks.push_back(std::move(b));
  }
  return eig;
}

}  // namespace rydpol
