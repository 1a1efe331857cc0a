#include "rydpol/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <numeric>

#include "rydpol/errors.hpp"
#include "rydpol/parallel.hpp"
#include "rydpol/table.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

namespace {

// Sorts by energy and merges exactly or nearly degenerate components.
WeightedSpectrum merge_clusters(const WeightedSpectrum& s) {
  const Eigen::Index n = s.energies_ghz.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return s.energies_ghz[a] < s.energies_ghz[b];
  });
  std::vector<double> e, w;
  for (std::size_t i = 0; i < order.size();) {
    double we = 0.0, ws = 0.0;
    const double start = s.energies_ghz[order[i]];
    std::size_t k = i;
    for (; k < order.size() && s.energies_ghz[order[k]] - start <= kDegeneracyToleranceGHz; ++k) {
      we += s.weights[order[k]] * s.energies_ghz[order[k]];
      ws += s.weights[order[k]];
    }
    e.push_back(ws > 0.0 ? we / ws : start);
    w.push_back(ws);
    i = k;
  }
  WeightedSpectrum out;
  out.energies_ghz = Eigen::Map<Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
  out.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return out;
}

// Keeps components above kNegligibleWeight, as angular frequencies relative
// to the weighted mean.
void active_components(const WeightedSpectrum& s, Eigen::VectorXd& omega, Eigen::VectorXd& weights) {
  const WeightedSpectrum merged = merge_clusters(s);
  std::vector<double> om, w;
  for (Eigen::Index k = 0; k < merged.weights.size(); ++k) {
    if (merged.weights[k] < kNegligibleWeight) continue;
    om.push_back(units::ghz_to_rad_per_us(merged.energies_ghz[k]));
    w.push_back(merged.weights[k]);
  }
  omega = Eigen::Map<Eigen::VectorXd>(om.data(), static_cast<Eigen::Index>(om.size()));
  weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  const double total = weights.sum();
  if (total > 0.0) omega.array() -= omega.dot(weights) / total;
}

// Phasor recurrence; stops after `stop_after_revival` once P exceeds 1.05x
// its running minimum.
PairEvolution evolve(const Eigen::VectorXd& omega, const Eigen::VectorXd& weights, double dt,
                     std::size_t samples, bool stop_after_revival) {
  PairEvolution ev;
  ev.t_us.reserve(samples + 1);
  ev.survival.reserve(samples + 1);
  const Eigen::Index n = omega.size();
  Eigen::VectorXcd phasor = weights.cast<std::complex<double>>();
  Eigen::VectorXcd step(n);
  for (Eigen::Index k = 0; k < n; ++k) step[k] = std::polar(1.0, -omega[k] * dt);
  double running_min = 2.0;
  for (std::size_t i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) * dt;
    // Re-anchor every 1024 steps to keep rounding drift negligible.
    if (i % 1024 == 0 && i > 0)
      for (Eigen::Index k = 0; k < n; ++k) phasor[k] = std::polar(weights[k], -omega[k] * t);
    const double p = std::min(1.0, std::norm(phasor.sum()));
    ev.t_us.push_back(t);
    ev.survival.push_back(p);
    if (stop_after_revival && p > 1.05 * running_min) break;
    running_min = std::min(running_min, p);
    phasor.array() *= step.array();
  }
  return ev;
}

}  // namespace

WeightedSpectrum spectrum_at(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um) {
  const auto& g = eig.r_grid;
  if (g.empty()) throw DomainError("empty eigensystem");
  const double tol = 1e-12 * g.back();
  if (r_um < g.front() - tol || r_um > g.back() + tol)
    throw DomainError("R = " + format_double(r_um) + " um lies outside the eigensystem grid [" +
                      format_double(g.front()) + ", " + format_double(g.back()) +
                      "]; extrapolation is refused");
  const auto it = std::lower_bound(g.begin(), g.end(), r_um - tol);
  const std::size_t hi = static_cast<std::size_t>(it - g.begin());
  if (std::abs(g[hi] - r_um) <= tol) return weighted_spectrum(eig, overlaps, hi);
  const std::size_t lo = hi - 1;
  const double f = (std::log(r_um) - std::log(g[lo])) / (std::log(g[hi]) - std::log(g[lo]));
  const WeightedSpectrum a = weighted_spectrum(eig, overlaps, lo);
  const WeightedSpectrum b = weighted_spectrum(eig, overlaps, hi);
  WeightedSpectrum s;
  s.energies_ghz = a.energies_ghz + f * (b.energies_ghz - a.energies_ghz);
  s.weights = a.weights + f * (b.weights - a.weights);
  return s;
}

PairEvolution evolve_spectrum(const Eigen::VectorXd& omega, const Eigen::VectorXd& weights,
                              double t_max_us, std::size_t samples) {
  if (omega.size() != weights.size()) throw DomainError("spectrum size mismatch");
  if (samples < 1 || !(t_max_us > 0.0)) throw DomainError("invalid time grid");
  return evolve(omega, weights, t_max_us / static_cast<double>(samples), samples, false);
}

PairEvolution pair_evolution(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um,
                             std::span<const double> t_us) {
  const WeightedSpectrum s = spectrum_at(eig, overlaps, r_um);
  Eigen::VectorXd omega, weights;
  active_components(s, omega, weights);
  PairEvolution ev;
  ev.r_um = r_um;
  ev.t_us.assign(t_us.begin(), t_us.end());
  ev.survival.reserve(t_us.size());
  for (double t : t_us) {
    std::complex<double> amp = 0.0;
    for (Eigen::Index k = 0; k < omega.size(); ++k) amp += std::polar(weights[k], -omega[k] * t);
    ev.survival.push_back(std::min(1.0, std::norm(amp)));
  }
  return ev;
}

double extract_gamma(const PairEvolution& evolution, double t_lo_us, double t_hi_us) {
  std::vector<double> t, p;
  for (std::size_t i = 0; i < evolution.t_us.size(); ++i) {
    if (evolution.t_us[i] < t_lo_us || evolution.t_us[i] > t_hi_us) continue;
    t.push_back(evolution.t_us[i]);
    p.push_back(evolution.survival[i]);
  }
  if (t.size() < 3) throw FitError("dephasing fit window holds fewer than 3 samples");

  auto cost = [&](double g) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double r = p[i] - std::exp(-2.0 * g * t[i]);
      s += r * r;
    }
    return s;
  };
  // Coarse log scan, then golden section inside the best bracket.
  const double span = t.back() - t.front() > 0.0 ? t.back() : 1.0;
  const double g_lo = 1e-8 / span, g_hi = 1e8 / span;
  const int scan = 321;
  std::vector<double> gs{0.0};
  for (int i = 0; i < scan; ++i)
    gs.push_back(g_lo * std::pow(g_hi / g_lo, static_cast<double>(i) / (scan - 1)));
  std::size_t best = 0;
  double best_cost = cost(0.0);
  for (std::size_t i = 1; i < gs.size(); ++i) {
    const double c = cost(gs[i]);
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  double a = gs[best == 0 ? 0 : best - 1];
  double b = gs[std::min(best + 1, gs.size() - 1)];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = cost(x1), f2 = cost(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = cost(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = cost(x2);
    }
  }
  double g = 0.5 * (a + b);
  // Gauss-Newton polish.
  for (int it = 0; it < 20; ++it) {
    double jr = 0.0, jj = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double e = std::exp(-2.0 * g * t[i]);
      const double r = p[i] - e;
      const double d = 2.0 * t[i] * e;  // d(residual)/dg
      jr += d * r;
      jj += d * d;
    }
    if (jj <= 0.0) break;
    const double next = g - jr / jj;
    if (!(next >= 0.0) || cost(next) > cost(g)) break;
    if (std::abs(next - g) <= 1e-15 * std::max(1.0, g)) {
      g = next;
      break;
    }
    g = next;
  }
  if (cost(0.0) <= cost(g)) g = 0.0;
  return std::max(0.0, g);
}

std::optional<double> detect_revival(const PairEvolution& evolution) {
  double running_min = 2.0;
  for (std::size_t i = 0; i < evolution.survival.size(); ++i) {
    const double p = evolution.survival[i];
    if (p > 1.05 * running_min) return evolution.t_us[i];
    running_min = std::min(running_min, p);
  }
  return std::nullopt;
}

std::string to_string(PotentialDefinition d) {
  return d == PotentialDefinition::max_overlap ? "max_overlap" : "first_moment";
}

PotentialDefinition potential_definition_from_string(const std::string& s) {
  if (s == "max_overlap") return PotentialDefinition::max_overlap;
  if (s == "first_moment") return PotentialDefinition::first_moment;
  throw ConfigError("unknown potential definition '" + s + "' (max_overlap | first_moment)");
}

double effective_potential(const WeightedSpectrum& spectrum, PotentialDefinition definition) {
  if (definition == PotentialDefinition::first_moment) {
    const double total = spectrum.weights.sum();
    if (!(total > 0.0)) return 0.0;
    return units::ghz_to_rad_per_us(spectrum.energies_ghz.dot(spectrum.weights) / total);
  }
  const WeightedSpectrum merged = merge_clusters(spectrum);
  Eigen::Index k = 0;
  merged.weights.maxCoeff(&k);
  return units::ghz_to_rad_per_us(merged.energies_ghz[k]);
}

double effective_potential(const PairEigensystem& eig, const OverlapTable& overlaps, double r_um,
                           PotentialDefinition definition) {
  return effective_potential(spectrum_at(eig, overlaps, r_um), definition);
}

double blockade_radius(const PairEigensystem& eig, const OverlapTable& overlaps, double omega,
                       double gamma_e, PotentialDefinition definition) {
  std::vector<double> v(eig.r_grid.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = effective_potential(weighted_spectrum(eig, overlaps, i), definition);
  return blockade_radius(eig.r_grid, v, omega, gamma_e);
}

GammaResult dephasing_rate(const WeightedSpectrum& spectrum, const GammaOptions& options) {
  if (!(options.window_us > 0.0) || options.samples_per_window < 3)
    throw ConfigError("invalid dephasing fit window");
  Eigen::VectorXd omega, weights;
  active_components(spectrum, omega, weights);
  if (options.band > 0.0 && weights.size() > 0) {
    Eigen::Index dominant = 0;
    weights.maxCoeff(&dominant);
    const double center = omega[dominant];
    std::vector<double> om, w;
    for (Eigen::Index k = 0; k < omega.size(); ++k) {
      if (std::abs(omega[k] - center) > options.band) continue;
      om.push_back(omega[k]);
      w.push_back(weights[k]);
    }
    omega = Eigen::Map<Eigen::VectorXd>(om.data(), static_cast<Eigen::Index>(om.size()));
    weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    weights /= weights.sum();
    omega.array() -= omega.dot(weights);
  }
  const double total = weights.sum();
  const double spread =
      total > 0.0 ? std::sqrt(std::max(0.0, omega.array().square().matrix().dot(weights) / total))
                  : 0.0;
  double dt = options.window_us / static_cast<double>(options.samples_per_window);
  if (spread > 0.0) dt = std::min(dt, options.phase_step / spread);
  std::size_t samples = static_cast<std::size_t>(std::ceil(options.window_us / dt));
  samples = std::min(samples, options.max_samples);
  dt = options.window_us / static_cast<double>(samples);

  GammaResult result;
  result.window_us = options.window_us;
  PairEvolution ev = evolve(omega, weights, dt, samples, true);
  if (const auto revival = detect_revival(ev)) {
    result.revival_clipped = true;
    result.window_us = 0.5 * *revival;
    std::size_t inside = 0;
    for (double t : ev.t_us)
      if (t <= result.window_us) ++inside;
    if (inside < options.min_window_samples)
      ev = evolve(omega, weights, result.window_us / static_cast<double>(options.samples_per_window),
                  options.samples_per_window, false);
  }
  result.gamma = extract_gamma(ev, 0.0, result.window_us);
  return result;
}

// ---------------------------------------------------------------------------

std::string DephasingMap::provenance_value(const std::string& key) const {
  for (const auto& [k, v] : provenance)
    if (k == key) return v;
  return "";
}

double DephasingMap::sample(const Eigen::MatrixXd& field, double z_um, double r_perp_um) const {
  const double r = std::hypot(z_um, r_perp_um);
  if (r > r_grid.back()) return 0.0;
  const double theta = std::atan2(std::abs(r_perp_um), std::abs(z_um));
  const double lr = std::log(std::max(r, r_grid.front()));

  auto bracket = [](const std::vector<double>& g, double x, auto key) {
    if (g.size() == 1) return std::pair<std::size_t, double>{0, 0.0};
    if (x <= key(g.front())) return std::pair<std::size_t, double>{0, 0.0};
    if (x >= key(g.back())) return std::pair<std::size_t, double>{g.size() - 2, 1.0};
    std::size_t hi = 1;
    while (key(g[hi]) < x) ++hi;
    const double a = key(g[hi - 1]), b = key(g[hi]);
    return std::pair<std::size_t, double>{hi - 1, (x - a) / (b - a)};
  };
  const auto [ir, fr] = bracket(r_grid, lr, [](double x) { return std::log(x); });
  const auto [it, ft] = bracket(theta_grid, theta, [](double x) { return x; });
  const Eigen::Index i0 = static_cast<Eigen::Index>(ir);
  const Eigen::Index j0 = static_cast<Eigen::Index>(it);
  const Eigen::Index i1 = r_grid.size() > 1 ? i0 + 1 : i0;
  const Eigen::Index j1 = theta_grid.size() > 1 ? j0 + 1 : j0;
  auto node = [&](Eigen::Index i, Eigen::Index j, double w) { return w == 0.0 ? 0.0 : w * field(i, j); };
  return node(i0, j0, (1 - fr) * (1 - ft)) + node(i1, j0, fr * (1 - ft)) + node(i0, j1, (1 - fr) * ft) +
         node(i1, j1, fr * ft);
}

double DephasingMap::v_at(double z_um, double r_perp_um) const { return sample(v, z_um, r_perp_um); }

double DephasingMap::gamma_at(double z_um, double r_perp_um) const {
  return sample(gamma, z_um, r_perp_um);
}

DephasingMap build_map(const PairEigensystem& eig, const MapOptions& options) {
  if (options.theta_grid.empty()) throw ConfigError("empty theta grid");
  for (std::size_t i = 0; i < options.theta_grid.size(); ++i) {
    const double th = options.theta_grid[i];
    if (th < 0.0 || th > 0.5 * units::kPi + 1e-12)
      throw ConfigError("theta grid must lie in [0, pi/2]");
    if (i > 0 && !(th > options.theta_grid[i - 1]))
      throw ConfigError("theta grid must be strictly increasing");
  }
  DephasingMap map;
  map.r_grid = eig.r_grid;
  map.theta_grid = options.theta_grid;
  const auto nr = static_cast<Eigen::Index>(eig.r_grid.size());
  const auto nt = static_cast<Eigen::Index>(options.theta_grid.size());
  map.v.resize(nr, nt);
  map.gamma.resize(nr, nt);
  map.window_us.resize(nr, nt);

  std::vector<OverlapTable> overlaps;
  for (double th : options.theta_grid)
    overlaps.push_back(project_onto_eigenstates(
        eig, rotate_pair_state(eig.target, options.two_m1_lab, options.two_m2_lab, th)));

  parallel_for(static_cast<std::size_t>(nr * nt), options.jobs, [&](std::size_t node) {
    const auto i = static_cast<Eigen::Index>(node) / nt;
    const auto j = static_cast<Eigen::Index>(node) % nt;
    const WeightedSpectrum s =
        weighted_spectrum(eig, overlaps[static_cast<std::size_t>(j)], static_cast<std::size_t>(i));
    const GammaResult g = dephasing_rate(s, options.gamma);
    map.v(i, j) = effective_potential(s, options.potential);
    map.gamma(i, j) = g.gamma;
    map.window_us(i, j) = g.window_us;
  });

  map.provenance = {
      {"species", eig.species},
      {"target", to_string(eig.target.a) + ";" + to_string(eig.target.b)},
      {"lab_state_2m", std::to_string(options.two_m1_lab) + "," + std::to_string(options.two_m2_lab)},
      {"cutoffs", "delta_n=" + std::to_string(eig.cutoffs.delta_n) +
                      " l_max=" + std::to_string(eig.cutoffs.l_max) +
                      " delta_e_ghz=" + format_double(eig.cutoffs.delta_e_ghz) +
                      " depth=" + std::to_string(eig.cutoffs.depth)},
      {"fit_window_us", format_double(options.gamma.window_us)},
      {"fit_model", "P(t)=exp(-2 Gamma t), window clipped to half the first revival"},
      {"potential_definition", to_string(options.potential)},
  };
  return map;
}

void write_map(const std::filesystem::path& file, const DephasingMap& map) {
  Table t;
  t.meta = map.provenance;
  t.meta.emplace_back("units", "lengths um, theta rad, V and Gamma rad/us (2pi MHz), window us");
  t.columns = {"R_um", "theta_rad", "z_um", "r_perp_um", "V_rad_per_us", "Gamma_rad_per_us", "window_us"};
  for (std::size_t i = 0; i < map.r_grid.size(); ++i) {
    for (std::size_t j = 0; j < map.theta_grid.size(); ++j) {
      const double r = map.r_grid[i], th = map.theta_grid[j];
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      t.rows.push_back({r, th, r * std::cos(th), r * std::sin(th), map.v(ii, jj), map.gamma(ii, jj),
                        map.window_us(ii, jj)});
    }
  }
  write_table(file, t);
}

DephasingMap read_map(const std::filesystem::path& file) {
  const Table t = read_table(file);
  const std::size_t cr = t.column("R_um"), ct = t.column("theta_rad"), cv = t.column("V_rad_per_us"),
                    cg = t.column("Gamma_rad_per_us"), cw = t.column("window_us");
  DephasingMap map;
  for (const auto& [k, v] : t.meta)
    if (k != "units") map.provenance.emplace_back(k, v);
  for (const auto& row : t.rows) {
    if (map.r_grid.empty() || row[cr] > map.r_grid.back()) map.r_grid.push_back(row[cr]);
    if (map.r_grid.size() == 1) map.theta_grid.push_back(row[ct]);
  }
  const auto nr = static_cast<Eigen::Index>(map.r_grid.size());
  const auto nt = static_cast<Eigen::Index>(map.theta_grid.size());
  if (nt == 0 || static_cast<Eigen::Index>(t.rows.size()) != nr * nt)
    throw ConfigError(file.string() + " is not a rectangular dephasing map");
  map.v.resize(nr, nt);
  map.gamma.resize(nr, nt);
  map.window_us.resize(nr, nt);
  for (Eigen::Index i = 0; i < nr; ++i) {
    for (Eigen::Index j = 0; j < nt; ++j) {
      const auto& row = t.rows[static_cast<std::size_t>(i * nt + j)];
      if (row[cr] != map.r_grid[static_cast<std::size_t>(i)] ||
          row[ct] != map.theta_grid[static_cast<std::size_t>(j)])
        throw ConfigError(file.string() + " rows are not in R-major grid order");
      map.v(i, j) = row[cv];
      map.gamma(i, j) = row[cg];
      map.window_us(i, j) = row[cw];
    }
  }
  return map;
}

}  // namespace rydpol
