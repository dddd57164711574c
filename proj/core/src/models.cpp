#include "kamscar/models.hpp"

#include <cmath>
#include <sstream>

#include "kamscar/errors.hpp"

namespace kamscar {

namespace {

Series action_coordinate(const SeriesLayout& l, int j) {
  Series s = constant(l, l.base_point[j]);
  IntVec a(l.dim, 0);
  a[j] = 1;
  if (l.k_action >= 1) s.set(IntVec(l.dim, 0), a, 1.0);
  return s;
}

Series half_square_norm(const SeriesLayout& l) {
  Series s(l);
  for (int j = 0; j < l.dim; ++j) {
    const Series x = action_coordinate(l, j);
    s = add(s, scale(multiply(x, x), 0.5));
  }
  return s;
}

}  // namespace

Series radial_power(const SeriesLayout& l, double n) {
  // |I|^n = q0^(n/2) (1 + u)^(n/2) with q = |I|^2 = q0 (1 + u).
  const Series q = scale(half_square_norm(l), 2.0);
  const double q0 = q.coeff(IntVec(l.dim, 0), IntVec(l.dim, 0)).real();
  if (!(q0 > 0.0)) throw DomainError("models", "|I|^n needs a base point away from I = 0");
  const Series u = scale(sub(q, constant(l, q0)), 1.0 / q0);
  Series total = constant(l, 1.0);
  Series power = constant(l, 1.0);
  double binom = 1.0;
  const double e = 0.5 * n;
  for (int k = 1; k <= l.k_action; ++k) {
    binom *= (e - (k - 1)) / k;
    power = multiply(power, u);
    total = axpy(binom, power, total);
  }
  return scale(total, std::pow(q0, e));
}

Series power_sum(const SeriesLayout& l, int n) {
  if (n < 0) throw DomainError("models", "power sum needs n >= 0");
  Series total(l);
  for (int j = 0; j < l.dim; ++j) {
    const Series x = action_coordinate(l, j);
    Series p = constant(l, 1.0);
    for (int k = 0; k < n; ++k) p = multiply(p, x);
    total = add(total, p);
  }
  return total;
}

Series action_profile(const SeriesLayout& l, int n, ActionProfile profile) {
  return profile == ActionProfile::Radial ? radial_power(l, static_cast<double>(n)) : power_sum(l, n);
}

double angle_mean(const Series& f) {
  return angle_average(f).coeff(IntVec(f.dim(), 0), IntVec(f.dim(), 0)).real();
}

TimePolynomial model_pendulum1d(double eps, const SeriesLayout& l, double t_max) {
  if (l.dim != 1) throw DomainError("models", "pendulum1d is one-dimensional");
  if (l.k_angle < 1) throw DomainError("models", "pendulum1d needs k_angle >= 1");
  TimePolynomial H(l, t_max);
  H.add_term(0, half_square_norm(l));
  Series f(l);
  f.set({1}, {0}, 0.5 * eps);
  H.add_term(1, f);
  return H;
}

TimePolynomial model_example5(const std::vector<Series>& amplitudes, const SeriesLayout& l, double t_max,
                              ActionProfile profile) {
  if (static_cast<int>(amplitudes.size()) != l.dim - 1) {
    std::ostringstream os;
    os << "example5 in dimension " << l.dim << " needs " << l.dim - 1 << " amplitude functions";
    throw ConfigError(os.str());
  }
  TimePolynomial H(l, t_max);
  H.add_term(0, half_square_norm(l));
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    const Series& f = amplitudes[i];
    if (f.layout() != l) throw ConfigError("amplitude layout differs from the model layout");
    for (std::size_t m = 0; m < f.mode_count(); ++m)
      for (std::size_t a = 1; a < f.action_count(); ++a)
        if (f.at(m, a) != Complex(0.0, 0.0)) throw ConfigError("amplitude functions must depend on angles only");
    const double C = angle_mean(f);
    if (std::abs(C) < 1e-12) {
      std::ostringstream os;
      os << "amplitude f_" << i + 1 << " has zero mean";
      throw ConfigError(os.str());
    }
    H.add_term(static_cast<int>(i) + 1, multiply(f, action_profile(l, static_cast<int>(i) + 3, profile)));
  }
  return H;
}

}  // namespace kamscar
