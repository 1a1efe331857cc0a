#pragma once

// Angular-momentum algebra. All angular momenta are passed doubled
// (two_j = 2j) so half-integers stay exact. Condon-Shortley phases.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace rydpol {

double log_factorial(int n);

// Wigner 3j symbol (j1 j2 j3; m1 m2 m3).
double wigner_3j(int two_j1, int two_j2, int two_j3, int two_m1, int two_m2, int two_m3);

// Wigner 6j symbol {j1 j2 j3; j4 j5 j6}.
double wigner_6j(int two_j1, int two_j2, int two_j3, int two_j4, int two_j5, int two_j6);

// Clebsch-Gordan <j1 m1; j2 m2 | J M>.
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

namespace detail {
template <typename Scalar>
Scalar ipow(Scalar x, int p) {
  Scalar r(1);
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}
}  // namespace detail

// Wigner small-d element d^j_{m',m}(beta) = <j m'| exp(-i beta J_y) |j m>.
template <typename Scalar>
Scalar wigner_small_d(int two_j, int two_mp, int two_m, Scalar beta) {
  using std::cos;
  using std::sin;
  if (std::abs(two_mp) > two_j || std::abs(two_m) > two_j) return Scalar(0);
  if (((two_j - two_m) & 1) || ((two_j - two_mp) & 1)) return Scalar(0);
  const int j_plus_mp = (two_j + two_mp) / 2, j_minus_mp = (two_j - two_mp) / 2;
  const int j_plus_m = (two_j + two_m) / 2, j_minus_m = (two_j - two_m) / 2;
  const int mp_minus_m = (two_mp - two_m) / 2;
  const Scalar c = cos(beta / Scalar(2));
  const Scalar s = sin(beta / Scalar(2));
  const double log_pref = 0.5 * (log_factorial(j_plus_mp) + log_factorial(j_minus_mp) +
                                 log_factorial(j_plus_m) + log_factorial(j_minus_m));
  Scalar sum(0);
  const int k_min = std::max(0, -mp_minus_m);
  const int k_max = std::min(j_plus_m, j_minus_mp);
  for (int k = k_min; k <= k_max; ++k) {
    const double log_den = log_factorial(j_plus_m - k) + log_factorial(k) +
                           log_factorial(mp_minus_m + k) + log_factorial(j_minus_mp - k);
    Scalar term = Scalar(std::exp(log_pref - log_den));
    term *= detail::ipow(c, two_j - mp_minus_m - 2 * k);
    term *= detail::ipow(s, mp_minus_m + 2 * k);
    sum += ((mp_minus_m + k) % 2 == 0) ? term : Scalar(-term);
  }
  return sum;
}

// Full (2j+1)x(2j+1) d-matrix, rows/cols ordered m = -j ... +j.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> wigner_d_matrix(int two_j, Scalar beta) {
  const int dim = two_j + 1;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(dim, dim);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b)
      d(a, b) = wigner_small_d<Scalar>(two_j, 2 * a - two_j, 2 * b - two_j, beta);
  return d;
}

}  // namespace rydpol
