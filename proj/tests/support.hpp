#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "kamscar/series.hpp"

namespace kamscar::testing {

inline SeriesLayout layout(int dim, int k_angle, int k_action, double base = 0.0, double radius = 1.0) {
  SeriesLayout l;
  l.dim = dim;
  l.base_point.assign(dim, base);
  l.k_angle = k_angle;
  l.k_action = k_action;
  l.radius.assign(dim, radius);
  return l;
}

// Random real series with `terms` coefficient pairs, |gamma|_inf <= max_mode
// and |alpha| <= max_degree.
inline Series random_series(const SeriesLayout& l, int terms, int max_mode, int max_degree, std::mt19937_64& rng,
                            double amp = 1.0) {
  Series s(l);
  std::uniform_int_distribution<int> mode(-max_mode, max_mode);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const MultiIndexSet& A = s.actions();
  std::vector<std::size_t> allowed;
  for (std::size_t a = 0; a < A.size(); ++a)
    if (A.degree(a) <= max_degree) allowed.push_back(a);
  std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
  for (int k = 0; k < terms; ++k) {
    IntVec g(l.dim);
    for (auto& v : g) v = mode(rng);
    const IntVec& a = A[allowed[pick(rng)]];
    s.set(g, a, s.coeff(g, a) + amp * Complex(u(rng), u(rng)));
  }
  return s;
}

inline std::vector<RealVec> angle_grid(int dim, int n) {
  std::vector<RealVec> pts;
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(n);
  for (std::size_t c = 0; c < total; ++c) {
    RealVec th(dim);
    std::size_t x = c;
    for (int j = 0; j < dim; ++j) {
      th[j] = 2.0 * M_PI * static_cast<double>(x % n) / n;
      x /= n;
    }
    pts.push_back(th);
  }
  return pts;
}

inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace kamscar::testing
