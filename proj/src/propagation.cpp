#include "rydpol/propagation.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "rydpol/errors.hpp"
#include "rydpol/parallel.hpp"
#include "rydpol/table.hpp"
#include "rydpol/units.hpp"

namespace rydpol {

using cd = std::complex<double>;
namespace {
constexpr cd kI{0.0, 1.0};
}

void MediumConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(od, "OD");
  positive(length_um, "medium length");
  positive(gamma_e, "gamma_e");
  if (!(gamma_gr >= 0.0)) throw ConfigError("gamma_gr must be non-negative");
  positive(omega, "Omega");
  positive(w_eff_um, "w_eff");
  positive(r_in, "R_in");
  positive(speed_of_light, "speed of light");
  if (!(sigma_z_um > 0.0)) throw ConfigError("sigma_z must be positive");
}

double MediumConfig::coupling() const {
  return std::sqrt(od * speed_of_light * gamma_e / (2.0 * length_um));
}

double MediumConfig::group_velocity() const {
  const double g2 = od * speed_of_light * gamma_e / (2.0 * length_um);
  return speed_of_light * omega * omega / (g2 + omega * omega);
}

double MediumConfig::delay_us() const { return od * gamma_e / (2.0 * omega * omega); }

SingleAmplitudes single_amplitudes(const MediumConfig& m, double z_um) {
  const double g = m.coupling();
  const double den = m.gamma_e * m.gamma_gr + m.omega * m.omega;
  const double kappa = g * g * m.gamma_gr / (m.speed_of_light * den);
  const double e = std::exp(-kappa * z_um);
  return {e, kI * g * m.gamma_gr / den * e, -g * m.omega / den * e};
}

namespace {

// Spatial rate of the probe field at probe detuning delta: dE/dz = k(delta) E.
cd field_rate(const MediumConfig& m, double delta) {
  const double g = m.coupling();
  const cd chi = 1.0 / ((m.gamma_e - kI * delta) + m.omega * m.omega / (m.gamma_gr - kI * delta));
  return (-g * g * chi + kI * delta) / m.speed_of_light;
}

}  // namespace

SinglePolariton single_polariton_transmission(const MediumConfig& m) {
  m.validate();
  SinglePolariton s;
  s.od_dec = m.od * m.gamma_e * m.gamma_gr / (m.omega * m.omega + m.gamma_e * m.gamma_gr);
  s.transmission = std::exp(-s.od_dec);
  s.group_velocity = m.group_velocity();
  s.delay_us = m.delay_us();

  // RK4 on c dE/dz = i G P with P from the algebraic matter equations.
  const double g = m.coupling();
  auto rhs = [&](cd e) {
    // 0 = iG E + i Omega S - gamma_e P, 0 = i Omega P - gamma_gr S
    const cd p = kI * g * e / (m.gamma_e + m.omega * m.omega / m.gamma_gr);
    return kI * g * p / m.speed_of_light;
  };
  if (m.gamma_gr > 0.0) {
    const int steps = 4096;
    const double h = m.length_um / steps;
    cd e = 1.0;
    for (int i = 0; i < steps; ++i) {
      const cd k1 = rhs(e), k2 = rhs(e + 0.5 * h * k1), k3 = rhs(e + 0.5 * h * k2),
               k4 = rhs(e + h * k3);
      e += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    s.numeric_od_dec = -2.0 * std::log(std::abs(e));
  }

  // Central difference of the transmitted phase around two-photon resonance.
  const double d = 1e-4 * std::min(m.omega * m.omega / m.gamma_e, m.gamma_e);
  const double phase_plus = std::imag(field_rate(m, d)) * m.length_um;
  const double phase_minus = std::imag(field_rate(m, -d)) * m.length_um;
  s.numeric_delay_us = (phase_plus - phase_minus) / (2.0 * d);
  return s;
}

// ---------------------------------------------------------------------------

double TwoPhotonField::two_photon_transmission() const {
  const auto n = ee.rows() - 1;
  return std::norm(ee(n, n)) / std::norm(ee(0, 0));
}

namespace {

// Unknown ordering of the transported amplitudes.
enum : int { kEE = 0, kEP = 1, kES = 2, kPE = 3, kSE = 4 };
using Vec5 = Eigen::Matrix<cd, 5, 1>;
using Mat5 = Eigen::Matrix<cd, 5, 5>;
using Mat45 = Eigen::Matrix<cd, 4, 5>;

struct OffsetSystem {
  Mat45 closure;  // (PP, PS, SP, SS) = closure * u
  Mat5 rate;      // du/ds = rate * u along each component's characteristic
  Eigen::PartialPivLU<Mat5> implicit;
  Mat5 lhs;
};

OffsetSystem offset_system(const MediumConfig& m, double v, double gamma, double h) {
  const double g = m.coupling(), om = m.omega, ge = m.gamma_e, gg = m.gamma_gr;
  const double c = m.speed_of_light;
  Eigen::Matrix<cd, 4, 4> a = Eigen::Matrix<cd, 4, 4>::Zero();
  a(0, 0) = 2.0 * ge;
  a(0, 1) = a(0, 2) = -kI * om;
  a(1, 0) = -kI * om;
  a(1, 1) = ge + gg;
  a(1, 3) = -kI * om;
  a(2, 0) = -kI * om;
  a(2, 2) = ge + gg;
  a(2, 3) = -kI * om;
  a(3, 1) = a(3, 2) = -kI * om;
  a(3, 3) = 2.0 * gg + gamma + kI * v;
  Mat45 b = Mat45::Zero();
  b(0, kEP) = b(0, kPE) = kI * g;
  b(1, kES) = kI * g;
  b(2, kSE) = kI * g;
  OffsetSystem s;
  s.closure = a.fullPivLu().solve(b);

  Mat5 f = Mat5::Zero();
  f(kEE, kEP) = f(kEE, kPE) = kI * g;
  f(kEP, kEE) = kI * g;
  f(kEP, kEP) = -ge;
  f(kEP, kES) = kI * om;
  f(kES, kEP) = kI * om;
  f(kES, kES) = -gg;
  f(kPE, kEE) = kI * g;
  f(kPE, kPE) = -ge;
  f(kPE, kSE) = kI * om;
  f(kSE, kPE) = kI * om;
  f(kSE, kSE) = -gg;
  f.row(kEP) += kI * g * s.closure.row(0);
  f.row(kPE) += kI * g * s.closure.row(0);
  f.row(kES) += kI * g * s.closure.row(1);
  f.row(kSE) += kI * g * s.closure.row(2);
  s.rate = f / c;
  s.lhs = Mat5::Identity() - 0.5 * h * s.rate;
  s.implicit.compute(s.lhs);
  return s;
}

// Solves lhs(rows, rows) x = rhs(rows) - lhs(rows, known) u(known) for the
// unknown components `rows`, keeping the known components of u.
template <int K>
void solve_partial(const Mat5& lhs, const Vec5& rhs, const std::array<int, K>& rows, Vec5& u) {
  Eigen::Matrix<cd, K, K> a;
  Eigen::Matrix<cd, K, 1> b;
  for (int r = 0; r < K; ++r) {
    b[r] = rhs[rows[r]];
    for (int k = 0; k < 5; ++k) {
      const bool unknown = std::find(rows.begin(), rows.end(), k) != rows.end();
      if (!unknown) b[r] -= lhs(rows[r], k) * u[k];
    }
    for (int cidx = 0; cidx < K; ++cidx) a(r, cidx) = lhs(rows[r], rows[cidx]);
  }
  const Eigen::Matrix<cd, K, 1> x = a.fullPivLu().solve(b);
  for (int r = 0; r < K; ++r) u[rows[r]] = x[r];
}

}  // namespace

TwoPhotonField solve_two_photon(const MediumConfig& m, const Profile& v, const Profile& gamma,
                                const SolverOptions& options) {
  m.validate();
  if (options.nodes < 3) throw ConfigError("two-photon grid needs at least 3 nodes per axis");
  const int n = options.nodes;
  const double h = m.length_um / (n - 1);

  TwoPhotonField field;
  field.z_um.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) field.z_um[static_cast<std::size_t>(i)] = h * i;

  // One local system per offset d = i - j.
  std::vector<OffsetSystem> systems(static_cast<std::size_t>(2 * n - 1));
  double fastest = 0.0;
  for (int d = -(n - 1); d <= n - 1; ++d) {
    const double vz = v(d * h), gz = gamma(d * h);
    if (!std::isfinite(vz) || !std::isfinite(gz) || gz < 0.0)
      throw DomainError("interaction profile is not finite or has negative Gamma at z = " +
                        format_double(d * h) + " um");
    auto& sys = systems[static_cast<std::size_t>(d + n - 1)];
    sys = offset_system(m, vz, gz, h);
    fastest = std::max(fastest, sys.rate.eigenvalues().cwiseAbs().maxCoeff());
  }
  if (h * fastest > options.max_step_rate) {
    const double required = options.max_step_rate / fastest;
    throw ResolutionError("two-photon grid step " + format_double(h) + " um exceeds the resolvable " +
                              format_double(required) + " um for this interaction profile",
                          required);
  }
  for (int i = 0; i < n; ++i) {
    field.v_profile.push_back(v(i * h));
    field.gamma_profile.push_back(gamma(i * h));
  }

  const double s0 = std::abs(single_amplitudes(m, 0.0).s);
  const double amp = m.r_in / m.group_velocity() / (s0 * s0);
  field.input_amplitude = amp;
  std::vector<SingleAmplitudes> single(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) single[static_cast<std::size_t>(i)] = single_amplitudes(m, i * h);

  for (auto* mat : {&field.ee, &field.ep, &field.pe, &field.es, &field.se, &field.pp, &field.ps,
                    &field.sp, &field.ss})
    mat->resize(n, n);

  // u and rate*u of the previous row and of the current row.
  std::vector<Vec5> prev_u(static_cast<std::size_t>(n)), prev_f(static_cast<std::size_t>(n));
  std::vector<Vec5> cur_u(static_cast<std::size_t>(n)), cur_f(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& sys = systems[static_cast<std::size_t>(i - j + n - 1)];
      const auto& a1 = single[static_cast<std::size_t>(i)];
      const auto& a2 = single[static_cast<std::size_t>(j)];
      Vec5 u;
      Vec5 rhs = Vec5::Zero();
      if (i > 0 && j > 0) {
        const Vec5& d = prev_u[static_cast<std::size_t>(j - 1)];
        const Vec5& df = prev_f[static_cast<std::size_t>(j - 1)];
        rhs[kEE] = d[kEE] + 0.5 * h * df[kEE];
      }
      if (i > 0) {
        const Vec5& up = prev_u[static_cast<std::size_t>(j)];
        const Vec5& fp = prev_f[static_cast<std::size_t>(j)];
        rhs[kEP] = up[kEP] + 0.5 * h * fp[kEP];
        rhs[kES] = up[kES] + 0.5 * h * fp[kES];
      }
      if (j > 0) {
        const Vec5& ul = cur_u[static_cast<std::size_t>(j - 1)];
        const Vec5& fl = cur_f[static_cast<std::size_t>(j - 1)];
        rhs[kPE] = ul[kPE] + 0.5 * h * fl[kPE];
        rhs[kSE] = ul[kSE] + 0.5 * h * fl[kSE];
      }
      if (i == 0 && j == 0) {
        u << a1.e * a2.e, a1.e * a2.p, a1.e * a2.s, a1.p * a2.e, a1.s * a2.e;
        u *= amp;
      } else if (i == 0) {
        u[kEE] = amp * a1.e * a2.e;
        u[kEP] = amp * a1.e * a2.p;
        u[kES] = amp * a1.e * a2.s;
        solve_partial<2>(sys.lhs, rhs, {kPE, kSE}, u);
      } else if (j == 0) {
        u[kEE] = amp * a1.e * a2.e;
        u[kPE] = amp * a1.p * a2.e;
        u[kSE] = amp * a1.s * a2.e;
        solve_partial<2>(sys.lhs, rhs, {kEP, kES}, u);
      } else {
        u = sys.implicit.solve(rhs);
      }
      const Eigen::Matrix<cd, 4, 1> x = sys.closure * u;
      cur_u[static_cast<std::size_t>(j)] = u;
      cur_f[static_cast<std::size_t>(j)] = sys.rate * u;
      field.ee(i, j) = u[kEE];
      field.ep(i, j) = u[kEP];
      field.es(i, j) = u[kES];
      field.pe(i, j) = u[kPE];
      field.se(i, j) = u[kSE];
      field.pp(i, j) = x[0];
      field.ps(i, j) = x[1];
      field.sp(i, j) = x[2];
      field.ss(i, j) = x[3];
    }
    std::swap(prev_u, cur_u);
    std::swap(prev_f, cur_f);
  }
  return field;
}

double dephasing_integral(const TwoPhotonField& field, const Profile& gamma) {
  const auto n = static_cast<int>(field.z_um.size());
  const double h = field.step();
  std::vector<double> g(static_cast<std::size_t>(2 * n - 1));
  for (int d = -(n - 1); d <= n - 1; ++d) g[static_cast<std::size_t>(d + n - 1)] = gamma(d * h);
  auto w = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * h : h; };
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j)
      row += w(j) * g[static_cast<std::size_t>(i - j + n - 1)] * std::norm(field.ss(i, j));
    total += w(i) * row;
  }
  return total;
}

void gauss_laguerre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  if (order < 1) throw ConfigError("quadrature order must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 0; k < order; ++k) {
    jacobi(k, k) = 2.0 * k + 1.0;
    if (k + 1 < order) jacobi(k, k + 1) = jacobi(k + 1, k) = k + 1.0;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  nodes.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + order);
  weights.resize(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const double v0 = solver.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = v0 * v0;
  }
}

double impurity_od(const MediumConfig& m, const DephasingMap& map) {
  std::vector<double> rb;
  for (Eigen::Index j = 0; j < map.v.cols(); ++j) {
    std::vector<double> v(map.r_grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = map.v(static_cast<Eigen::Index>(i), j);
    rb.push_back(blockade_radius(map.r_grid, v, m.omega, m.gamma_e));
  }
  double mean = rb.front();
  if (rb.size() > 1) {
    // Solid-angle average: trapezoid in cos(theta).
    double num = 0.0, den = 0.0;
    for (std::size_t j = 1; j < rb.size(); ++j) {
      const double dc = std::cos(map.theta_grid[j - 1]) - std::cos(map.theta_grid[j]);
      num += 0.5 * (rb[j - 1] + rb[j]) * dc;
      den += dc;
    }
    mean = num / den;
  }
  return m.od / m.length_um * 2.0 * mean;
}

ConversionResult conversion_rate(const MediumConfig& m, const DephasingMap& map,
                                 const ConversionOptions& options) {
  m.validate();
  std::vector<double> u, w;
  gauss_laguerre(options.transverse_nodes, u, w);
  ConversionResult result;
  result.medium = m;
  for (std::size_t k = 0; k < u.size(); ++k)
    result.nodes.push_back({m.w_eff_um * std::sqrt(u[k]), w[k], 0.0});
  const double r_perp_max = result.nodes.back().r_perp_um;
  if (r_perp_max > map.r_max())
    throw DomainError("dephasing map reaches R = " + format_double(map.r_max()) +
                      " um but the transverse quadrature samples r_perp = " +
                      format_double(r_perp_max) + " um; extend the map distance grid");

  parallel_for(result.nodes.size(), options.jobs, [&](std::size_t k) {
    const double rp = result.nodes[k].r_perp_um;
    const Profile v = [&](double z) { return map.v_at(z, rp); };
    const Profile g = [&](double z) { return map.gamma_at(z, rp); };
    const TwoPhotonField field = solve_two_photon(m, v, g, options.solver);
    result.nodes[k].n = dephasing_integral(field, g);
  });
  for (const auto& node : result.nodes) result.n += node.weight * node.n;
  result.od_im = options.od_im ? *options.od_im : impurity_od(m, map);
  result.rate_constant = result.n * (1.0 - std::exp(-result.od_im)) / (m.r_in * m.r_in);
  return result;
}

TransmissionSeries transmission_time_series(const MediumConfig& m, double n, double od_sat,
                                            double od_im, const std::vector<double>& t_us) {
  if (n < 0.0 || od_sat < 0.0 || od_im < 0.0) throw DomainError("N, OD_sat and OD_im must be non-negative");
  const double od_dec = single_polariton_transmission(m).od_dec;
  TransmissionSeries s;
  s.t_us = t_us;
  s.r_in = m.r_in;
  s.omega = m.omega;
  const double rate = n * (1.0 - std::exp(-od_im));
  for (double t : t_us) s.transmission.push_back(std::exp(-od_dec - od_sat) * std::exp(-rate * t));
  return s;
}

std::vector<RateConstantRow> rate_constant_theory(const std::vector<ConversionResult>& sweep) {
  std::vector<RateConstantRow> rows;
  for (const auto& r : sweep) {
    const auto& a = sweep.front().medium;
    const auto& b = r.medium;
    if (a.od != b.od || a.length_um != b.length_um || a.gamma_e != b.gamma_e ||
        a.gamma_gr != b.gamma_gr || a.w_eff_um != b.w_eff_um || a.speed_of_light != b.speed_of_light)
      throw ConfigError("rate-constant sweep mixes media that differ beyond Omega and R_in");
    rows.push_back({b.omega, r.n * (1.0 - std::exp(-r.od_im)) / (b.r_in * b.r_in), r.n, r.od_im});
  }
  return rows;
}

}  // namespace rydpol
