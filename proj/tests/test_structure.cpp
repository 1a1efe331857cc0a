#include <cmath>
#include <thread>
#include <vector>

#include "doctest.h"
#include "rydpol/angular.hpp"
#include "rydpol/errors.hpp"
#include "rydpol/structure.hpp"
#include "rydpol/units.hpp"

using namespace rydpol;

namespace {

constexpr int h(double x) { return static_cast<int>(2.0 * x + (x < 0 ? -0.5 : 0.5)); }

}  // namespace

TEST_CASE("hydrogen level energy is the Coulomb value") {
  const auto H = SpeciesParameters::hydrogen();
  CHECK(level_energy_au(H, make_level(2, 1, 1.5)) == -0.125);
  CHECK(level_energy(H, QuantumState(2, 1, 1.5, 0.5)) == doctest::Approx(-0.125 * units::kHartreeGHz));
}

TEST_CASE("rubidium D5/2 energies against hand-evaluated Rydberg-Ritz values") {
  const auto rb = SpeciesParameters::rubidium87();
  const double e80 = level_energy_ghz(rb, make_level(80, 2, 2.5));
  const double e100 = level_energy_ghz(rb, make_level(100, 2, 2.5));
  CHECK(e80 == doctest::Approx(-531.78336233447003).epsilon(1e-12));
  CHECK(e100 - e80 > 0.0);
  CHECK(e100 - e80 == doctest::Approx(193.76020192373394).epsilon(1e-10));
}

TEST_CASE("level energy increases with n inside every channel") {
  const auto rb = SpeciesParameters::rubidium87();
  for (auto [l, j] : std::vector<std::pair<int, double>>{{0, 0.5}, {1, 1.5}, {2, 2.5}, {3, 3.5}, {5, 5.5}}) {
    double prev = -1e300;
    for (int n = l + 5; n < 120; ++n) {
      const double e = level_energy_ghz(rb, make_level(n, l, j));
      CHECK(e > prev);
      prev = e;
    }
  }
}

TEST_CASE("missing defect channel without fallback raises a coverage error") {
  SpeciesParameters sp;
  sp.name = "bare";
  CHECK_THROWS_AS(quantum_defect(sp, make_level(10, 0, 0.5)), ChannelCoverageError);
  sp.zero_defect_from_l = 0;
  CHECK(quantum_defect(sp, make_level(10, 0, 0.5)) == 0.0);
}

TEST_CASE("species file round trip") {
  const auto rb = SpeciesParameters::load(std::string(RYDPOL_DATA_DIR) + "/rb87.json");
  const auto built = SpeciesParameters::rubidium87();
  CHECK(rb.to_json() == built.to_json());
  CHECK_THROWS_AS(SpeciesParameters::load("/nonexistent/species.json"), ConfigError);
}

TEST_CASE("quantum state invariants") {
  CHECK(QuantumState(3, 2, 2.5, -2.5).valid());
  CHECK_FALSE(QuantumState(3, 3, 3.5, 0.5).valid());
  CHECK_FALSE(QuantumState(3, 0, 1.5, 0.5).valid());
  CHECK_FALSE(QuantumState(3, 1, 1.5, 2.5).valid());
  CHECK(QuantumState(5, 1, 0.5, 0.5) == QuantumState(5, 1, 0.5, 0.5));
  CHECK_FALSE(QuantumState(5, 1, 0.5, 0.5) == QuantumState(5, 1, 0.5, -0.5));
}

TEST_CASE("hydrogen 1s matches 2 r exp(-r)") {
  const auto wf = radial_wavefunction(SpeciesParameters::hydrogen(), make_level(1, 0, 0.5));
  CHECK(wf.norm_squared() == doctest::Approx(1.0).epsilon(1e-6));
  for (Eigen::Index i = 0; i < wf.size(); ++i) {
    const double r = wf.r[i];
    if (r < 0.5 || r > 5.0) continue;
    CHECK(std::abs(wf.u[i] - 2.0 * r * std::exp(-r)) < 1e-4 * 2.0 * r * std::exp(-r));
  }
}

TEST_CASE("hydrogen node counts follow n - l - 1") {
  const auto H = SpeciesParameters::hydrogen();
  for (auto [n, l] : std::vector<std::pair<int, int>>{{1, 0}, {2, 0}, {3, 0}, {3, 1}, {3, 2}, {4, 1}, {6, 3}}) {
    const auto wf = radial_wavefunction(H, make_level(n, l, l + 0.5));
    CHECK(wf.node_count() == n - l - 1);
    CHECK(wf.norm_squared() == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rubidium 80D5/2 radial expectation against the hydrogenic formula") {
  const auto rb = SpeciesParameters::rubidium87();
  const Level lv = make_level(80, 2, 2.5);
  const auto wf = radial_wavefunction(rb, lv);
  const double ns = effective_quantum_number(rb, lv);
  CHECK(wf.norm_squared() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(wf.expectation_r() == doctest::Approx((3.0 * ns * ns - 6.0) / 2.0).epsilon(0.02));
  CHECK(wf.node_count() <= 80 - 2 - 1);
  CHECK(wf.node_count() >= 80 - 2 - 1 - 3);
  // Amplitude decays monotonically past the outer turning point.
  const double r_turn = ns * ns + ns * std::sqrt(ns * ns - 6.0);
  double prev = 1e300;
  for (Eigen::Index i = 0; i < wf.size(); ++i) {
    if (wf.r[i] < 1.2 * r_turn) continue;
    CHECK(std::abs(wf.u[i]) <= prev);
    prev = std::abs(wf.u[i]);
  }
}

TEST_CASE("hydrogen radial dipole integrals against closed forms") {
  const auto H = SpeciesParameters::hydrogen();
  struct Case {
    int n1, l1, n2, l2;
    double value;
  };
  const Case cases[] = {{1, 0, 2, 1, 1.290266201959863}, {2, 1, 3, 2, 4.747991611539010},
                        {2, 0, 3, 1, 3.064815406570516}, {3, 1, 4, 2, 7.565410812501621},
                        {3, 2, 4, 3, 10.23030261912779}, {2, 1, 4, 0, 0.3823010968769966}};
  for (const auto& c : cases) {
    const double r = radial_dipole_element(H, QuantumState(c.n1, c.l1, c.l1 + 0.5, 0.5),
                                           QuantumState(c.n2, c.l2, c.l2 + 0.5, 0.5));
    CHECK(std::abs(std::abs(r) - c.value) < 1e-4 * c.value);
  }
  // 128 sqrt(2) / 243 is the same integral with a 1/sqrt(3) angular factor taken out.
  const double r12 = radial_dipole_element(H, QuantumState(1, 0, 0.5, 0.5), QuantumState(2, 1, 0.5, 0.5));
  CHECK(std::abs(r12) / std::sqrt(3.0) == doctest::Approx(128.0 * std::sqrt(2.0) / 243.0).epsilon(1e-4));
  CHECK(radial_dipole_element(H, QuantumState(2, 1, 0.5, 0.5), QuantumState(3, 1, 1.5, 0.5)) == 0.0);
}

TEST_CASE("Wigner symbols against sympy values") {
  CHECK(wigner_3j(h(1.5), 2, h(2.5), h(1.5), 2, h(-2.5)) == doctest::Approx(-0.4082482904638630).epsilon(1e-13));
  CHECK(wigner_3j(4, 2, 2, 0, 0, 0) == doctest::Approx(0.3651483716701107).epsilon(1e-13));
  CHECK(wigner_6j(4, h(2.5), 1, h(1.5), 2, 2) == doctest::Approx(-0.2236067977499790).epsilon(1e-13));
  CHECK(wigner_6j(2, 4, 6, 4, 2, 4) == doctest::Approx(0.04364357804719848).epsilon(1e-13));
  const double b = units::kPi / 3.0;
  CHECK(wigner_small_d(h(2.5), h(1.5), h(2.5), b) == doctest::Approx(0.6288941186718159).epsilon(1e-13));
  CHECK(wigner_small_d(h(2.5), h(-0.5), h(1.5), b) == doctest::Approx(0.5358258812338202).epsilon(1e-13));
  CHECK(wigner_small_d(2, 0, 2, b) == doctest::Approx(0.6123724356957945).epsilon(1e-13));
  CHECK(wigner_small_d(h(1.5), h(0.5), h(-0.5), b) == doctest::Approx(-0.625).epsilon(1e-13));
}

TEST_CASE("d-matrices are orthogonal") {
  for (int two_j : {1, 2, 3, 5, 7}) {
    const Eigen::MatrixXd d = wigner_d_matrix<double>(two_j, 0.731);
    CHECK((d.transpose() * d - Eigen::MatrixXd::Identity(two_j + 1, two_j + 1)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dipole angular factors against the uncoupled Clebsch-Gordan sum") {
  struct Case {
    int l;
    double j, m;
    int lp;
    double jp, mp;
    int q;
    double value;
  };
  const Case cases[] = {{2, 2.5, 2.5, 1, 1.5, 1.5, 1, 0.6324555320336759},
                        {2, 2.5, 2.5, 3, 3.5, 1.5, 1, -0.1428571428571429},
                        {2, 2.5, 0.5, 1, 1.5, 0.5, 0, 0.4898979485566356},
                        {2, 1.5, -0.5, 1, 0.5, 0.5, -1, 0.3333333333333333},
                        {0, 0.5, 0.5, 1, 1.5, -0.5, 1, -0.3333333333333333},
                        {2, 2.5, 1.5, 3, 2.5, 2.5, -1, -0.09035079029052512}};
  for (const auto& c : cases) {
    const double v = dipole_angular_factor(QuantumState(10, c.l, c.j, c.m), QuantumState(10, c.lp, c.jp, c.mp), c.q);
    CHECK(v == doctest::Approx(c.value).epsilon(1e-12));
  }
}

TEST_CASE("dipole selection rules are exact zeros and the operator is Hermitian") {
  const auto rb = SpeciesParameters::rubidium87();
  RadialCache cache(rb);
  const QuantumState d(40, 2, 2.5, 2.5), p(41, 1, 1.5, 1.5), f(39, 3, 3.5, 0.5);
  CHECK(cache.dipole(d, p, 0) == 0.0);
  CHECK(cache.dipole(d, p, -1) == 0.0);
  CHECK(cache.dipole(d, QuantumState(41, 2, 2.5, 1.5), 1) == 0.0);
  CHECK(cache.dipole(d, p, 1) != 0.0);
  for (int q : {-1, 0, 1})
    for (double mf : {-1.5, -0.5, 0.5, 1.5}) {
      const QuantumState a(39, 3, 3.5, mf);
      const QuantumState b(40, 2, 2.5, mf - q);
      CHECK(std::abs(cache.dipole(a, b, q)) == doctest::Approx(std::abs(cache.dipole(b, a, -q))).epsilon(1e-12));
    }
  CHECK(cache.dipole(d, f, 1) == doctest::Approx(dipole_matrix_element(rb, d, f, 1)).epsilon(1e-12));
}

TEST_CASE("radial cache returns identical values from concurrent lookups") {
  RadialCache cache(SpeciesParameters::rubidium87());
  std::vector<double> out(8);
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t)
    pool.emplace_back([&, t] { out[t] = cache.radial(make_level(45, 2, 2.5), make_level(46, 1, 1.5)); });
  for (auto& th : pool) th.join();
  for (double v : out) CHECK(v == out[0]);
  CHECK(out[0] == radial_dipole_element(*cache.wavefunction(make_level(45, 2, 2.5)),
                                        *cache.wavefunction(make_level(46, 1, 1.5))));
}
