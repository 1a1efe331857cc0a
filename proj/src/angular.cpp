#include "rydpol/angular.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace rydpol {

namespace {

constexpr int kMaxFactorial = 400;

const std::array<double, kMaxFactorial + 1>& log_factorial_table() {
  static const auto table = [] {
    std::array<double, kMaxFactorial + 1> t{};
    t[0] = 0.0;
    for (int i = 1; i <= kMaxFactorial; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
    return t;
  }();
  return table;
}

bool triangle(int a, int b, int c) {
  return c <= a + b && c >= std::abs(a - b) && ((a + b + c) % 2 == 0);
}

// log of the triangle coefficient Delta(abc), doubled arguments.
double log_delta(int a, int b, int c) {
  return 0.5 * (log_factorial((a + b - c) / 2) + log_factorial((a - b + c) / 2) +
                log_factorial((-a + b + c) / 2) - log_factorial((a + b + c) / 2 + 1));
}

}  // namespace

double log_factorial(int n) {
  if (n < 0) throw std::domain_error("log_factorial of negative integer");
  if (n > kMaxFactorial) return std::lgamma(static_cast<double>(n) + 1.0);
  return log_factorial_table()[n];
}

double wigner_3j(int j1, int j2, int j3, int m1, int m2, int m3) {
  if (m1 + m2 + m3 != 0) return 0.0;
  if (!triangle(j1, j2, j3)) return 0.0;
  if (std::abs(m1) > j1 || std::abs(m2) > j2 || std::abs(m3) > j3) return 0.0;
  if (((j1 + m1) & 1) || ((j2 + m2) & 1) || ((j3 + m3) & 1)) return 0.0;

  // Racah formula with all integer quantities halved back.
  const int a = (j1 + j2 - j3) / 2;
  const int b = (j1 - m1) / 2;
  const int c = (j2 + m2) / 2;
  const int d = (j3 - j2 + m1) / 2;
  const int e = (j3 - j1 - m2) / 2;
  const int k_min = std::max({0, -d, -e});
  const int k_max = std::min({a, b, c});
  if (k_min > k_max) return 0.0;

  const double log_pref =
      log_delta(j1, j2, j3) +
      0.5 * (log_factorial((j1 + m1) / 2) + log_factorial((j1 - m1) / 2) +
             log_factorial((j2 + m2) / 2) + log_factorial((j2 - m2) / 2) +
             log_factorial((j3 + m3) / 2) + log_factorial((j3 - m3) / 2));
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double l = log_factorial(k) + log_factorial(a - k) + log_factorial(b - k) +
                     log_factorial(c - k) + log_factorial(d + k) + log_factorial(e + k);
    const double term = std::exp(log_pref - l);
    sum += (k % 2 == 0) ? term : -term;
  }
  const int phase = (j1 - j2 - m3) / 2;
  return (phase % 2 == 0) ? sum : -sum;
}

double wigner_6j(int j1, int j2, int j3, int j4, int j5, int j6) {
  if (!triangle(j1, j2, j3) || !triangle(j1, j5, j6) || !triangle(j4, j2, j6) ||
      !triangle(j4, j5, j3))
    return 0.0;
  const int a1 = (j1 + j2 + j3) / 2;
  const int a2 = (j1 + j5 + j6) / 2;
  const int a3 = (j4 + j2 + j6) / 2;
  const int a4 = (j4 + j5 + j3) / 2;
  const int b1 = (j1 + j2 + j4 + j5) / 2;
  const int b2 = (j2 + j3 + j5 + j6) / 2;
  const int b3 = (j3 + j1 + j6 + j4) / 2;
  const int k_min = std::max({a1, a2, a3, a4});
  const int k_max = std::min({b1, b2, b3});
  const double log_pref =
      log_delta(j1, j2, j3) + log_delta(j1, j5, j6) + log_delta(j4, j2, j6) + log_delta(j4, j5, j3);
  double sum = 0.0;
  for (int k = k_min; k <= k_max; ++k) {
    const double l = log_factorial(k + 1) - log_factorial(k - a1) - log_factorial(k - a2) -
                     log_factorial(k - a3) - log_factorial(k - a4) - log_factorial(b1 - k) -
                     log_factorial(b2 - k) - log_factorial(b3 - k);
    const double term = std::exp(log_pref + l);
    sum += (k % 2 == 0) ? term : -term;
  }
  return sum;
}

double clebsch_gordan(int j1, int m1, int j2, int m2, int J, int M) {
  const double w = wigner_3j(j1, j2, J, m1, m2, -M);
  if (w == 0.0) return 0.0;
  const int phase = (j1 - j2 + M) / 2;
  const double v = std::sqrt(static_cast<double>(J + 1)) * w;
  return (phase % 2 == 0) ? v : -v;
}

}  // namespace rydpol
