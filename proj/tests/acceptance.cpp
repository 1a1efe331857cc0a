// rydpol_acceptance [--only N] [--work DIR]
// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "rydpol/errors.hpp"
#include "rydpol/pipeline.hpp"
#include "rydpol/units.hpp"

using namespace rydpol;
namespace fs = std::filesystem;
using units::two_pi_mhz;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

PipelineConfig acceptance_config(const fs::path& work, const std::string& sub) {
  PipelineConfig c = PipelineConfig::load(std::string(RYDPOL_CONFIG_DIR) + "/acceptance_n80.json");
  c.output.dir = (work / sub).string();
  return c;
}

// 1. Power-law exponent of C(Omega) at n = 80.
Verdict power_law_exponent(const fs::path& work, int jobs) {
  const auto ctx = RunContext::make(acceptance_config(work, "criterion1"), jobs, &std::cerr);
  const FitSummary s = run_pipeline(ctx);
  const PowerLawRow& p = s.power_law(80);
  Verdict v;
  v.pass = p.k >= 1.3 && p.k <= 2.1;
  v.detail = "k = " + fmt("%.4f", p.k) + " +- " + fmt("%.4f", p.k_sigma) + " (band [1.3, 2.1])";
  for (const auto& r : s.rates)
    v.notes.push_back("Omega = 2pi x " + fmt("%.1f", r.omega_mhz) + " MHz: C = " + fmt("%.5g", r.c) + " us");
  return v;
}

// 2. D-state dephasing exceeds the S-state control; large beyond the blockade radius.
Verdict anisotropy_and_contrast(const fs::path& work, int jobs) {
  const PipelineConfig d_cfg = acceptance_config(work, "criterion2_d");
  PipelineConfig s_cfg = acceptance_config(work, "criterion2_s");
  s_cfg.target = {"S", 0.5, 0.5, 0.5};

  const auto d_ctx = RunContext::make(d_cfg, jobs, &std::cerr);
  const auto s_ctx = RunContext::make(s_cfg, jobs, &std::cerr);
  const DephasingMap d = build_map(cached_eigensystem(d_ctx, 80), d_cfg.map_options(jobs));
  const DephasingMap s = build_map(cached_eigensystem(s_ctx, 80), s_cfg.map_options(jobs));

  const double max_d = d.gamma.maxCoeff(), max_s = s.gamma.maxCoeff();
  const bool contrast = max_d > 10.0 * max_s;

  // theta = 60 deg column; blockade radius at the smallest swept Omega (largest r_b).
  Eigen::Index j60 = 0;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(d.theta_grid.size()); ++j)
    if (std::abs(d.theta_grid[static_cast<std::size_t>(j)] - units::kPi / 3.0) <
        std::abs(d.theta_grid[static_cast<std::size_t>(j60)] - units::kPi / 3.0))
      j60 = j;
  std::vector<double> v60(d.r_grid.size());
  for (std::size_t i = 0; i < v60.size(); ++i) v60[i] = d.v(static_cast<Eigen::Index>(i), j60);
  const double omega = two_pi_mhz(*std::min_element(d_cfg.sweep.omega_mhz.begin(), d_cfg.sweep.omega_mhz.end()));
  const double rb = blockade_radius(d.r_grid, v60, omega, two_pi_mhz(d_cfg.medium.gamma_e_mhz));
  double beyond = 0.0, at_r = 0.0;
  for (std::size_t i = 0; i < d.r_grid.size(); ++i) {
    if (d.r_grid[i] <= rb) continue;
    const double g = d.gamma(static_cast<Eigen::Index>(i), j60);
    if (g > beyond) {
      beyond = g;
      at_r = d.r_grid[i];
    }
  }
  const bool large = beyond > two_pi_mhz(0.1);

  Verdict v;
  v.pass = contrast && large;
  v.detail = "max Gamma_D / max Gamma_S = " + fmt("%.3g", max_s > 0.0 ? max_d / max_s : INFINITY) +
             " (> 10); Gamma_D(theta=60) beyond r_b = " + fmt("%.2f", rb) + " um reaches 2pi x " +
             fmt("%.3g", units::to_mhz(beyond)) + " MHz at R = " + fmt("%.1f", at_r) + " um (> 2pi x 0.1)";
  v.notes.push_back("max Gamma_D = 2pi x " + fmt("%.4g", units::to_mhz(max_d)) + " MHz, max Gamma_S = 2pi x " +
                    fmt("%.4g", units::to_mhz(max_s)) + " MHz");
  return v;
}

// 3. C6 against second-order perturbation theory; stretched-state rotation amplitude.
Verdict pair_potential(int jobs) {
  const SpeciesParameters rb = SpeciesParameters::rubidium87();
  RadialCache radial(rb);
  PairCutoffs cut;
  cut.delta_n = 2;
  cut.delta_e_ghz = 25.0;
  Verdict v;
  v.pass = true;
  double worst = 0.0;
  for (int n : {40, 45, 50}) {
    const Level lv = make_level(n, 2, 2.5);
    const auto bases = build_pair_basis(rb, {lv, lv}, cut);
    const PairBasis& top = bases.back();  // M = 5, the stretched target alone in its block
    const PairHamiltonian h = assemble_pair_hamiltonian(top, radial);
    const Eigen::Index t = top.target_indices.front();
    double c6_pt = 0.0;
    for (Eigen::Index k = 0; k < top.size(); ++k)
      if (std::abs(top.detuning_ghz[k]) > 1e-12) c6_pt += h.c3_ghz_um3(k, t) * h.c3_ghz_um3(k, t) / top.detuning_ghz[k];
    const double scale = std::pow(n / 40.0, 7.0 / 3.0);
    DiagonalizeOptions o;
    o.jobs = jobs;
    const auto eig = diagonalize_over_grid({top}, log_grid(8.0 * scale, 25.0 * scale, 12), radial, o);
    const auto& blk = eig.blocks.front();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < eig.r_grid.size(); ++i) {
      Eigen::Index k;
      blk.target_components[i].row(0).cwiseAbs().maxCoeff(&k);
      const double x = -1.0 / std::pow(eig.r_grid[i], 6);
      sxy += x * blk.eigenvalues[i][k];
      sxx += x * x;
    }
    const double c6_fit = sxy / sxx;
    const double rel = std::abs(c6_fit / c6_pt - 1.0);
    worst = std::max(worst, rel);
    v.pass = v.pass && rel <= 0.05;
    v.notes.push_back("n = " + std::to_string(n) + ": C6 fit " + fmt("%.6g", c6_fit) + " GHz um^6, perturbative " +
                      fmt("%.6g", c6_pt) + " GHz um^6");
  }
  const auto rot = rotate_pair_state({make_level(50, 2, 2.5), make_level(50, 2, 2.5)}, 5, 5, units::kPi / 3.0);
  const double amp = rot.amplitude(5, 5);
  const double dev = std::abs(amp - std::pow(0.75, 5));
  v.pass = v.pass && dev <= 1e-10;
  v.detail = "worst C6 deviation " + fmt("%.3g", 100.0 * worst) + "% (<= 5%); stretched amplitude at 60 deg = " +
             fmt("%.12f", amp) + ", |diff from (3/4)^5| = " + fmt("%.2g", dev) + " (<= 1e-10)";
  v.notes.push_back("per-atom weight d^{5/2}_{5/2,5/2}(60 deg)^2 = cos^2(30 deg)^5 = (3/4)^5; the pair probability is its square");
  return v;
}

}  // namespace

namespace {

MediumConfig default_medium(double omega_mhz, double gamma_gr_mhz) {
  MediumConfig m;
  m.od = 146.0;
  m.sigma_z_um = 80.0;
  m.length_um = 320.0;
  m.gamma_e = two_pi_mhz(6.1);
  m.gamma_gr = two_pi_mhz(gamma_gr_mhz);
  m.omega = two_pi_mhz(omega_mhz);
  return m;
}

// 4. Propagation solver fidelity.
Verdict propagation_fidelity() {
  const Profile zero = [](double) { return 0.0; };
  Verdict v;
  std::ostringstream detail;

  // (a) uniform Rydberg-pair amplitude.
  double dev_a = 0.0;
  for (double om : {6.1, 10.8, 26.3}) {
    const MediumConfig m = default_medium(om, 0.0);
    const auto f = solve_two_photon(m, zero, zero);
    const double ref = m.r_in / m.group_velocity();
    dev_a = std::max(dev_a, (f.ss.cwiseAbs().array() / ref - 1.0).abs().maxCoeff());
  }
  const bool a = dev_a <= 1e-4;

  // (b) entrance blockade profile against 1 / (1 - chi V), chi = -i (gamma_e / Omega^2 + 1 / gamma_e).
  // V(z) is sampled from a smooth soft-core van der Waals curve; the inflow-corner
  // amplitude for constant V = V(z_k) gives psi(z_k) relative to the V = 0 corner.
  const MediumConfig m = default_medium(10.8, 0.0);
  const std::complex<double> chi(0.0, -(m.gamma_e / (m.omega * m.omega) + 1.0 / m.gamma_e));
  const double rb = 8.0, v_rb = m.omega * m.omega / m.gamma_e;
  auto smooth_v = [&](double z) { return -v_rb * std::pow(rb, 6) / (std::pow(z, 6) + std::pow(0.5 * rb, 6)); };
  const auto free = solve_two_photon(m, zero, zero);
  std::vector<std::complex<double>> psi, model, half;
  for (int k = 0; k <= 60; ++k) {
    const double z = 0.5 * k;
    const double vz = smooth_v(z);
    const auto f = solve_two_photon(m, [vz](double) { return vz; }, zero);
    psi.push_back(f.ss(0, 0) / free.ss(0, 0));
    model.push_back(1.0 / (1.0 - chi * vz));
    half.push_back(1.0 / (1.0 - chi * vz / 2.0));
  }
  // psi is compared up to the best complex proportionality constant.
  std::complex<double> num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    num += std::conj(model[k]) * psi[k];
    den += std::norm(model[k]);
  }
  const std::complex<double> scale = num / den;
  double dev_b = 0.0, dev_half = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    dev_b = std::max(dev_b, std::abs(psi[k] - scale * model[k]) / std::abs(scale * model[k]));
    dev_half = std::max(dev_half, std::abs(psi[k] - half[k]) / std::abs(half[k]));
  }
  const bool b = dev_b <= 0.02;

  // (c) independent photons; transmissions compared on the absolute scale.
  double dev_c = 0.0, rel_c = 0.0;
  for (double om : {6.1, 8.3, 10.8, 16.6, 26.3}) {
    const MediumConfig mc = default_medium(om, 0.2);
    const auto f = solve_two_photon(mc, zero, zero);
    const double t1 = single_polariton_transmission(mc).transmission;
    dev_c = std::max(dev_c, std::abs(f.two_photon_transmission() - t1 * t1));
    rel_c = std::max(rel_c, std::abs(f.two_photon_transmission() / (t1 * t1) - 1.0));
  }
  const bool c = dev_c <= 1e-4;

  // (d) group delay.
  double dev_d = 0.0;
  for (double om : {6.1, 8.3, 10.8, 16.6, 26.3}) {
    const MediumConfig md = default_medium(om, 0.0);
    const auto s = single_polariton_transmission(md);
    dev_d = std::max(dev_d, std::abs(s.numeric_delay_us / (md.od * md.gamma_e / (2.0 * md.omega * md.omega)) - 1.0));
  }
  const bool d = dev_d <= 0.01;

  v.pass = a && b && c && d;
  detail << "(a) " << (a ? "ok" : "FAIL") << " max | |psi_dd| v_g / R_in - 1 | = " << fmt("%.2g", dev_a)
         << "; (b) " << (b ? "ok" : "FAIL") << " max rel. deviation from 1/(1 - chi V) = " << fmt("%.3g", dev_b)
         << " (<= 0.02); (c) " << (c ? "ok" : "FAIL") << " max |T2 - T1^2| = " << fmt("%.2g", dev_c) << " (<= 1e-4)"
         << "; (d) " << (d ? "ok" : "FAIL") << " max delay deviation = " << fmt("%.2g", dev_d);
  v.detail = detail.str();
  v.notes.push_back("(b) best proportionality constant " + fmt("%.4f", scale.real()) + fmt("%+.4fi", scale.imag()) +
                    "; the same data match 1/(1 - chi V/2) to " + fmt("%.2g", dev_half) +
                    ": with OD = 2 G^2 L / (c gamma_e) the tau_delay identity holds and chi carries an extra 1/2");
  v.notes.push_back("(c) largest relative deviation |T2/T1^2 - 1| = " + fmt("%.2g", rel_c) +
                    " on the 257-node grid (second order in the step; largest at Omega = 2pi x 6.1 MHz where T1^2 ~ 1e-4)");
  return v;
}

// 5. Analysis round trip and quadratic-window invariance.
Verdict analysis_round_trip() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  bool window_ok = true;
  for (int trial = 0; trial < 25; ++trial) {
    MediumConfig m = default_medium(6.1 + 20.0 * u(rng), 0.2);
    const double c_true = std::pow(10.0, -3.0 + 3.0 * u(rng));
    const double od_im = 0.2 + 6.0 * u(rng);
    const double od_sat = 0.5 * u(rng);
    const double edge = quadratic_window(m.delay_us());
    std::vector<RatePoint> inside, all;
    // Sample times keep the largest OD rise near 20.
    const double top_rate = c_true * 2.0 * edge * edge / (1.0 - std::exp(-od_im)) * (1.0 - std::exp(-od_im));
    const double t_end = std::min(5.0, 20.0 / top_rate);
    std::vector<double> t;
    for (int k = 0; k <= 20; ++k) t.push_back(t_end * k / 20.0);
    for (int i = 1; i <= 12; ++i) {
      const double r_in = edge * i / 6.0;  // half of the points above the edge
      m.r_in = r_in;
      // Above the edge the series saturates: N grows only linearly there.
      const double scale = r_in <= edge ? r_in * r_in : edge * r_in;
      const double n = c_true * scale / (1.0 - std::exp(-od_im));
      const auto s = transmission_time_series(m, n, od_sat, od_im, t);
      const FitResult f = fit_R_OD(s.t_us, effective_od(s), 0.0, t.back());
      all.push_back({r_in, f.value("R_OD")});
      if (r_in <= edge) inside.push_back({r_in, f.value("R_OD")});
    }
    const FitResult a = fit_rate_constant(inside, edge);
    const FitResult b = fit_rate_constant(all, edge);
    worst = std::max(worst, std::abs(b.value("C") / c_true - 1.0));
    window_ok = window_ok && a.value("C") == b.value("C") && a.points_used == b.points_used;
  }
  Verdict v;
  v.pass = worst <= 1e-6 && window_ok;
  v.detail = "worst relative C error " + fmt("%.2g", worst) + " over 25 random (N, OD_im, OD_sat, Omega) sets (<= 1e-6); " +
             "window invariance " + (window_ok ? "exact" : "VIOLATED");
  return v;
}

// 6. Determinism of the demo bundle.
Verdict determinism(const fs::path& work) {
  std::vector<std::string> hashes;
  for (int jobs : {1, 2}) {
    PipelineConfig c = PipelineConfig::demo();
    const fs::path out = work / ("criterion6_jobs" + std::to_string(jobs));
    fs::remove_all(out);
    c.output.dir = out.string();
    c.cache.dir = (work / ("criterion6_cache" + std::to_string(jobs))).string();
    fs::remove_all(c.cache.dir);
    run_pipeline(RunContext::make(c, jobs));
    hashes.push_back(bundle_hash(out));
  }
  Verdict v;
  v.pass = hashes[0] == hashes[1];
  v.detail = "bundle sha256 jobs=1 " + hashes[0].substr(0, 16) + ", jobs=2 " + hashes[1].substr(0, 16);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  std::string work = "acceptance_work";
  int jobs = 1;
  app.add_option("--only", only, "run a single criterion (1-6)")->check(CLI::Range(1, 6));
  app.add_option("--work", work, "scratch directory for pipeline outputs");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::function<Verdict()>> criteria = {
      [&] { return power_law_exponent(work, jobs); },
      [&] { return anisotropy_and_contrast(work, jobs); },
      [&] { return pair_potential(jobs); },
      [&] { return propagation_fidelity(); },
      [&] { return analysis_round_trip(); },
      [&] { return determinism(work); },
  };
  bool all = true;
  for (int i = 1; i <= 6; ++i) {
    if (only != 0 && only != i) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(i - 1)]();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << i << ": " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << "  ["
              << fmt("%.1f", secs) << " s]\n";
    for (const auto& n : v.notes) std::cout << "  note: " << n << '\n';
    std::cout.flush();
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
