#include "kamscar/homological.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kamscar/errors.hpp"

namespace kamscar {

namespace {

int l1_norm(const IntVec& g) {
  int n = 0;
  for (int v : g) n += std::abs(v);
  return n;
}

double slice_max(const Series& s, std::size_t mode) {
  double m = 0.0;
  for (std::size_t a = 0; a < s.action_count(); ++a) m = std::max(m, std::abs(s.at(mode, a)));
  return m;
}

void check_divisor(double divisor, const IntVec& g, const ApproximationFunction& delta) {
  const double floor = delta.kappa() / (10.0 * delta(l1_norm(g)));
  if (std::abs(divisor) < floor) {
    std::ostringstream os;
    os << "|<omega, gamma>| = " << std::abs(divisor) << " below " << floor << " at gamma = (";
    for (std::size_t j = 0; j < g.size(); ++j) os << (j ? "," : "") << g[j];
    os << ")";
    throw DivisorTooSmall(os.str());
  }
}

// Truncated product of two action polynomials stored as coefficient rows.
std::vector<Complex> poly_mul(const MultiIndexSet& A, const std::vector<Complex>& x, const std::vector<Complex>& y) {
  std::vector<Complex> out(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (x[i] == Complex(0.0, 0.0)) continue;
    for (std::size_t j = 0; j < A.size(); ++j) {
      const int s = A.sum(i, j);
      if (s >= 0) out[s] += x[i] * y[j];
    }
  }
  return out;
}

void finish(HomologicalSolution& sol, const Series& f, double sigma) {
  sol.psi.mirror_from_upper_half();
  const std::size_t z = f.zero_mode();
  for (std::size_t m = z + 1; m < f.mode_count(); ++m) {
    const double fm = slice_max(f, m);
    if (fm == 0.0) continue;
    sol.amplification = std::max(sol.amplification, slice_max(sol.psi, m) / fm);
  }
  sol.decay_fit = decay_diagnostic(sol.psi, sigma);
}

}  // namespace

HomologicalSolution solve_homological(const Series& f, const RealVec& omega, const ApproximationFunction& delta) {
  if (static_cast<int>(omega.size()) != f.dim()) throw DomainError("homological", "omega has wrong dimension");
  HomologicalSolution sol;
  sol.psi = Series(f.layout());
  sol.mean = angle_average(f);
  const std::size_t na = f.action_count();
  const std::size_t z = f.zero_mode();
  for (std::size_t m = z + 1; m < f.mode_count(); ++m) {
    if (slice_max(f, m) == 0.0) continue;
    const IntVec g = f.mode(m);
    double dot = 0.0;
    for (int j = 0; j < f.dim(); ++j) dot += omega[j] * g[j];
    check_divisor(dot, g, delta);
    if (std::abs(dot) < sol.min_divisor) {
      sol.min_divisor = std::abs(dot);
      sol.worst_mode = g;
    }
    const Complex inv = 1.0 / Complex(0.0, dot);
    for (std::size_t a = 0; a < na; ++a) sol.psi.mutable_data()[m * na + a] = f.at(m, a) * inv;
  }
  finish(sol, f, delta.sigma());
  return sol;
}

HomologicalSolution solve_homological(const Series& f, const std::vector<Series>& omega,
                                      const ApproximationFunction& delta) {
  if (static_cast<int>(omega.size()) != f.dim()) throw DomainError("homological", "omega has wrong dimension");
  for (const auto& w : omega) {
    if (w.layout() != f.layout()) throw DomainError("homological", "omega layout differs from f");
    if (!w.is_angle_free()) throw DomainError("homological", "omega(I) must be angle-free");
  }
  HomologicalSolution sol;
  sol.psi = Series(f.layout());
  sol.mean = angle_average(f);
  const MultiIndexSet& A = f.actions();
  const std::size_t na = A.size();
  const std::size_t z = f.zero_mode();
  for (std::size_t m = z + 1; m < f.mode_count(); ++m) {
    if (slice_max(f, m) == 0.0) continue;
    const IntVec g = f.mode(m);
    std::vector<Complex> div(na);
    for (int j = 0; j < f.dim(); ++j)
      for (std::size_t a = 0; a < na; ++a) div[a] += static_cast<double>(g[j]) * omega[j].at(z, a);
    const double d0 = div[0].real();
    check_divisor(d0, g, delta);
    if (std::abs(d0) < sol.min_divisor) {
      sol.min_divisor = std::abs(d0);
      sol.worst_mode = g;
    }
    // 1/D = (1/d0) sum_n (-u/d0)^n with u = D - d0.
    std::vector<Complex> u(na);
    for (std::size_t a = 1; a < na; ++a) u[a] = -div[a] / d0;
    std::vector<Complex> inv(na), term(na);
    term[0] = 1.0;
    inv[0] = 1.0;
    for (int n = 1; n <= f.k_action(); ++n) {
      term = poly_mul(A, term, u);
      for (std::size_t a = 0; a < na; ++a) inv[a] += term[a];
    }
    for (auto& c : inv) c /= d0;
    // Radius where sum |u_a| r^|a| < 1.
    double lo = 0.0, hi = 1e6;
    auto usum = [&](double r) {
      double s = 0.0;
      for (std::size_t a = 1; a < na; ++a) s += std::abs(u[a]) * std::pow(r, A.degree(a));
      return s;
    };
    if (usum(hi) >= 1.0) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (usum(mid) < 1.0 ? lo : hi) = mid;
      }
      sol.validity_radius = std::min(sol.validity_radius, lo);
    }
    std::vector<Complex> row(na);
    for (std::size_t a = 0; a < na; ++a) row[a] = f.at(m, a);
    std::vector<Complex> q = poly_mul(A, row, inv);
    for (std::size_t a = 0; a < na; ++a) sol.psi.mutable_data()[m * na + a] = q[a] / Complex(0.0, 1.0);
  }
  finish(sol, f, delta.sigma());
  return sol;
}

Series lie_derivative(const Series& psi, const RealVec& omega) {
  Series r(psi.layout());
  for (int j = 0; j < psi.dim(); ++j) r = axpy(omega[j], partial_angle(psi, j), r);
  return r;
}

Series lie_derivative(const Series& psi, const std::vector<Series>& omega) {
  Series r(psi.layout());
  for (int j = 0; j < psi.dim(); ++j) r = add(r, multiply(omega[j], partial_angle(psi, j)));
  return r;
}

DecayFit decay_diagnostic(const HomologicalSolution& sol, double sigma) { return decay_diagnostic(sol.psi, sigma); }

DecayFit decay_diagnostic(const Series& psi, double sigma) {
  DecayFit fit;
  std::vector<double> xs, ys;
  const std::size_t z = psi.zero_mode();
  for (std::size_t m = z + 1; m < psi.mode_count(); ++m) {
    const double v = slice_max(psi, m);
    if (v == 0.0) continue;
    xs.push_back(std::pow(static_cast<double>(l1_norm(psi.mode(m))), 1.0 / sigma));
    ys.push_back(std::log(v));
  }
  fit.points = xs.size();
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) return fit;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / denom;
  const double icpt = (sy - slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (icpt + slope * xs[i]);
    ss += e * e;
  }
  fit.degenerate = false;
  fit.rate = -slope;
  fit.C = std::exp(icpt);
  fit.residual = std::sqrt(ss / n);
  fit.rate_stderr = xs.size() > 2 ? std::sqrt(ss / (n - 2.0) * n / denom) : 0.0;
  return fit;
}

}  // namespace kamscar
