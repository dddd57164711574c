#include "kamscar/normal_form.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "kamscar/errors.hpp"
#include "kamscar/homological.hpp"

namespace kamscar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 8-point Gauss-Legendre on [0, 1].
struct GaussLegendre8 {
  double node[8];
  double weight[8];
  GaussLegendre8() {
    const double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    for (int k = 0; k < 4; ++k) {
      node[2 * k] = 0.5 * (1.0 - x[k]);
      node[2 * k + 1] = 0.5 * (1.0 + x[k]);
      weight[2 * k] = weight[2 * k + 1] = 0.5 * w[k];
    }
  }
  // Integral over [0, 1] of kernel(s) s^n.
  template <class F>
  double moment(int n, F kernel) const {
    double total = 0.0;
    for (int k = 0; k < 8; ++k) total += weight[k] * kernel(node[k]) * std::pow(node[k], n);
    return total;
  }
};

const GaussLegendre8& gauss() {
  static const GaussLegendre8 g;
  return g;
}

Variable action_var(int j) { return Variable{VarKind::Action, j}; }
Variable angle_var(int j) { return Variable{VarKind::Angle, j}; }

double scaled_max(const TimePolynomial& a) { return std::max(1.0, max_abs(a)); }

int compose_order_of(const TimePolynomial& H, const NormalFormOptions& o) {
  return o.compose_order >= 0 ? o.compose_order : H.layout().k_action;
}

// sum_j a_j * b_j
TimePolynomial dot(const std::vector<TimePolynomial>& a, const std::vector<TimePolynomial>& b, int t_order) {
  TimePolynomial r(a.front().layout(), a.front().t_max());
  for (std::size_t j = 0; j < a.size(); ++j) r = add(r, multiply(a[j], b[j], t_order));
  return r;
}

// Lowest power whose angle-dependent coefficient is not negligible.
int leading_block(const TimePolynomial& f_osc, double tol) {
  const double scale = max_abs(f_osc);
  if (scale == 0.0) return -1;
  for (const auto& [p, s] : f_osc.terms())
    if (s.max_abs() > tol * scale) return p;
  return -1;
}

}  // namespace

std::vector<SamplePoint> sample_points(const SeriesLayout& layout, int angle_samples, int action_samples,
                                       double fraction) {
  const int d = layout.dim;
  std::vector<RealVec> angles(1, RealVec{});
  for (int j = 0; j < d; ++j) {
    std::vector<RealVec> next;
    for (const auto& a : angles)
      for (int k = 0; k < angle_samples; ++k) {
        RealVec b = a;
        b.push_back(2.0 * kPi * k / angle_samples);
        next.push_back(b);
      }
    angles = std::move(next);
  }
  std::vector<RealVec> actions(1, RealVec{});
  for (int j = 0; j < d; ++j) {
    std::vector<RealVec> next;
    for (const auto& a : actions)
      for (int k = 0; k < action_samples; ++k) {
        const double u = action_samples == 1 ? 0.0 : -1.0 + 2.0 * k / (action_samples - 1);
        RealVec b = a;
        b.push_back(layout.base_point[j] + u * fraction * layout.radius[j]);
        next.push_back(b);
      }
    actions = std::move(next);
  }
  std::vector<SamplePoint> pts;
  for (const auto& I : actions)
    for (const auto& th : angles) pts.push_back({th, I});
  return pts;
}

OrderFit measure_remainder_order(const TimePolynomial& f, const std::vector<double>& t_grid,
                                 const std::vector<SamplePoint>& points) {
  OrderFit fit;
  std::vector<double> xs, ys;
  for (double t : t_grid) {
    double sup = 0.0;
    for (const auto& p : points) sup = std::max(sup, std::abs(eval(f, p.theta, p.action, t)));
    fit.sup_norms.push_back(sup);
    if (sup > 0.0) {
      xs.push_back(std::log(t));
      ys.push_back(std::log(sup));
    }
  }
  if (xs.size() < 2) {
    fit.vanishing = true;
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double icpt = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - icpt - fit.slope * xs[i];
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

MappedPoint apply_map(const CanonicalMap& map, const RealVec& theta_new, const RealVec& action_new, double t,
                      double tol, int max_steps, double damping) {
  const std::size_t d = theta_new.size();
  MappedPoint out;
  out.theta = theta_new;
  if (map.generator.is_zero()) {
    out.action = action_new;
    return out;
  }
  for (int it = 1; it <= max_steps; ++it) {
    double change = 0.0;
    RealVec next(d);
    for (std::size_t j = 0; j < d; ++j) {
      const double target = theta_new[j] - eval(map.dG_dI[j], out.theta, action_new, t);
      next[j] = out.theta[j] + damping * (target - out.theta[j]);
      change = std::max(change, std::abs(next[j] - out.theta[j]));
    }
    out.theta = next;
    out.iterations = it;
    if (change <= tol) break;
    if (it == max_steps) {
      std::ostringstream os;
      os << "pointwise inversion did not converge in " << max_steps << " steps (last change " << change
         << "); t = " << t << " is too large";
      throw InversionDiverged(os.str());
    }
  }
  out.action = action_new;
  double res = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    out.action[j] += eval(map.dG_dtheta[j], out.theta, action_new, t);
    res = std::max(res, std::abs(out.theta[j] + eval(map.dG_dI[j], out.theta, action_new, t) - theta_new[j]));
  }
  out.residual = res;
  return out;
}

double map_jacobian_det(const CanonicalMap& map, const RealVec& theta_new, const RealVec& action_new, double t,
                        double step) {
  const int d = static_cast<int>(theta_new.size());
  Eigen::MatrixXd J(2 * d, 2 * d);
  for (int c = 0; c < 2 * d; ++c) {
    RealVec tp = theta_new, tm = theta_new, ip = action_new, im = action_new;
    if (c < d) {
      tp[c] += step;
      tm[c] -= step;
    } else {
      ip[c - d] += step;
      im[c - d] -= step;
    }
    const MappedPoint a = apply_map(map, tp, ip, t);
    const MappedPoint b = apply_map(map, tm, im, t);
    for (int j = 0; j < d; ++j) {
      J(j, c) = (a.theta[j] - b.theta[j]) / (2.0 * step);
      J(d + j, c) = (a.action[j] - b.action[j]) / (2.0 * step);
    }
  }
  return J.determinant();
}

SplitHamiltonian split(const TimePolynomial& H) { return {angle_average(H), angle_part(H)}; }

IterationRecord one_step(const TimePolynomial& h, const TimePolynomial& f, const ApproximationFunction& delta,
                         const NormalFormOptions& o, int r, double box_scale) {
  if (!h.is_angle_free()) throw DomainError("normal_form", "h_r must be angle-free");
  const int d = h.dim();
  const int T = o.t_order;
  const int n_max = compose_order_of(h, o);
  const SeriesLayout& L = h.layout();

  IterationRecord rec;
  rec.r = r + 1;
  rec.box_scale = box_scale * o.box_shrink;
  const TimePolynomial f_mean = angle_average(f);
  const TimePolynomial f_osc = angle_part(f);
  rec.h = add(h, f_mean);

  const int p = leading_block(f_osc, o.block_tol);
  if (p < 0) {
    rec.f = TimePolynomial(L, h.t_max());
    rec.chopped = max_abs(f_osc) / std::max(max_abs(f), 1e-300);
    rec.map.generator = TimePolynomial(L, h.t_max());
    return rec;
  }
  if (p == 0) throw DomainError("normal_form", "angle dependence at t^0: H(theta, I; 0) must be angle-free");
  rec.block_lo = p;
  rec.block_hi = std::min(2 * p - 1, T);

  // Frequencies omega_i = grad of the t^i coefficient of h.
  std::vector<std::vector<Series>> omega(rec.block_hi - p + 1);
  for (int i = 0; i <= rec.block_hi - p; ++i)
    for (int j = 0; j < d; ++j) omega[i].push_back(partial_action(h.coefficient(i), j));

  // g_q solves omega_0 . d_theta g_q = -(f_q + sum_{i>=1} omega_i . d_theta g_{q-i}).
  std::map<int, Series> g;
  for (int q = p; q <= rec.block_hi; ++q) {
    Series rhs = f_osc.coefficient(q);
    for (int i = 1; i <= q - p; ++i)
      for (int j = 0; j < d; ++j) rhs = add(rhs, multiply(omega[i][j], partial_angle(g[q - i], j)));
    HomologicalSolution sol = solve_homological(rhs, omega[0], delta);
    g[q] = scale(sol.psi, -1.0);
    if (sol.min_divisor < rec.min_divisor) rec.min_divisor = sol.min_divisor;
    rec.amplification = std::max(rec.amplification, sol.amplification);
    rec.validity_radius = std::min(rec.validity_radius, sol.validity_radius);
  }
  CanonicalMap& map = rec.map;
  map.generator = TimePolynomial(L, h.t_max());
  for (const auto& [q, s] : g) map.generator.add_term(q, s);
  for (int j = 0; j < d; ++j) {
    map.dG_dtheta.push_back(partial_derivative(map.generator, angle_var(j)));
    map.dG_dI.push_back(partial_derivative(map.generator, action_var(j)));
  }

  // lambda = -d_I G(theta' + lambda, I'), iterated to a fixed point in the
  // truncated algebra.
  std::vector<TimePolynomial> lam(d);
  for (int j = 0; j < d; ++j) lam[j] = scale(map.dG_dI[j], -1.0);
  double change = 0.0;
  for (int it = 1;; ++it) {
    std::vector<TimePolynomial> next(d);
    change = 0.0;
    for (int j = 0; j < d; ++j) {
      next[j] = scale(compose_near_identity(map.dG_dI[j], {}, lam, n_max, T), -1.0);
      change = std::max(change, max_abs(sub(next[j], lam[j])) / scaled_max(map.dG_dI[j]));
    }
    lam = std::move(next);
    rec.inversion_iterations = it;
    if (change <= o.inversion_tol) break;
    if (it >= o.max_inversion_steps) {
      std::ostringstream os;
      os << "formal inversion did not converge in " << o.max_inversion_steps << " steps (residual " << change
         << ")";
      throw InversionDiverged(os.str());
    }
  }
  rec.inversion_residual = change;
  map.lambda = lam;
  for (int j = 0; j < d; ++j) map.xi.push_back(compose_near_identity(map.dG_dtheta[j], {}, lam, n_max, T));
  const auto& xi = map.xi;

  // Sampled sup-norm of the action shift at t_max must stay below half the
  // working box.
  {
    const auto pts = sample_points(L, o.angle_samples, o.action_samples, rec.box_scale);
    for (int j = 0; j < d; ++j) {
      double sup = 0.0;
      for (const auto& pt : pts) sup = std::max(sup, std::abs(eval(xi[j], pt.theta, pt.action, h.t_max())));
      if (sup > 0.5 * L.radius[j] * rec.box_scale) {
        std::ostringstream os;
        os << "step " << rec.r << ": action shift " << sup << " exceeds half the working box at t_max = "
           << h.t_max();
        throw InversionDiverged(os.str());
      }
    }
  }

  // H o chi = h + grad h . xi + f^I + f(theta' + lambda, I') + f^II with
  //   f^I  = int_0^1 (1 - s) xi^T D^2 h(I' + s xi) xi ds,
  //   f^II = int_0^1 D_I f(I' + s xi, theta' + lambda) . xi ds,
  // each integrand expanded in s and integrated by Gauss-Legendre.
  const GaussLegendre8& gl = gauss();
  TimePolynomial H_new = h;
  std::vector<TimePolynomial> grad_h(d);
  for (int j = 0; j < d; ++j) grad_h[j] = partial_derivative(h, action_var(j));
  H_new = add(H_new, dot(grad_h, xi, T));
  if (n_max >= 2) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        const TimePolynomial hess = partial_derivative(grad_h[i], action_var(j));
        if (hess.is_zero()) continue;
        const auto parts = compose_by_action_order(hess, xi, {}, n_max - 2, T);
        TimePolynomial avg(L, h.t_max());
        for (std::size_t n = 0; n < parts.size(); ++n)
          avg = add(avg, scale(parts[n], gl.moment(static_cast<int>(n), [](double s) { return 1.0 - s; })));
        const double sym = i == j ? 1.0 : 2.0;
        H_new = add(H_new, scale(multiply(multiply(avg, xi[i], T), xi[j], T), sym));
      }
  }
  H_new = add(H_new, compose_near_identity(f, {}, lam, n_max, T));
  if (n_max >= 1) {
    for (int j = 0; j < d; ++j) {
      const TimePolynomial df = partial_derivative(f, action_var(j));
      if (df.is_zero()) continue;
      const auto parts = compose_by_action_order(df, xi, lam, n_max - 1, T);
      TimePolynomial avg(L, h.t_max());
      for (std::size_t n = 0; n < parts.size(); ++n)
        avg = add(avg, scale(parts[n], gl.moment(static_cast<int>(n), [](double) { return 1.0; })));
      H_new = add(H_new, multiply(avg, xi[j], T));
    }
  }
  TimePolynomial f_next = sub(H_new, rec.h);
  const double scale_f = std::max(max_abs(f_next), max_abs(f));
  rec.chopped = 0.0;
  for (int q = 0; q < std::min(2 * p, T + 1); ++q)
    if (f_next.has(q)) rec.chopped = std::max(rec.chopped, f_next.coefficient(q).max_abs() / scale_f);
  rec.order = measure_remainder_order(f_next, o.t_grid,
                                      sample_points(L, o.angle_samples, o.action_samples, 0.5 * rec.box_scale));
  rec.f = slice(f_next, 2 * p, T);
  return rec;
}

NormalFormResult run_iteration(const TimePolynomial& H, const ApproximationFunction& delta,
                               const NormalFormOptions& o) {
  if (o.r_max < 0) throw DomainError("normal_form", "r_max must be >= 0");
  if (H.coefficient(0).is_zero() && H.is_zero()) throw DomainError("normal_form", "empty Hamiltonian");
  if (!H.coefficient(0).is_angle_free())
    throw DomainError("normal_form", "H(theta, I; 0) must be angle-free");
  const TimePolynomial Ht = truncate(H, o.t_order);
  NormalFormResult res;
  SplitHamiltonian s = split(Ht);
  IterationRecord first;
  first.h = s.h;
  first.f = s.f;
  first.map.generator = TimePolynomial(H.layout(), H.t_max());
  const auto pts = sample_points(H.layout(), o.angle_samples, o.action_samples, 0.5);
  first.order = measure_remainder_order(s.f, o.t_grid, pts);
  res.iterations.push_back(first);
  res.remainder_orders.push_back(first.order.slope);
  int exact_below = s.f.is_zero() ? o.t_order + 1 : 1;
  for (int r = 0; r < o.r_max; ++r) {
    const IterationRecord& prev = res.iterations.back();
    IterationRecord next = one_step(prev.h, prev.f, delta, o, r, prev.box_scale);
    if (next.f.is_zero())
      exact_below = o.t_order + 1;
    else if (next.block_lo > 0)
      exact_below = std::max(exact_below, 2 * next.block_lo);
    res.remainder_orders.push_back(next.order.slope);
    res.iterations.push_back(std::move(next));
  }
  res.k_order = std::min(o.t_order, exact_below - 1);
  res.K = slice(res.iterations.back().h, 0, res.k_order);
  return res;
}

LocalNormalForm hamilton_jacobi_normal_form(const TimePolynomial& H, const ApproximationFunction& delta,
                                            int t_order, int compose_order) {
  if (!H.coefficient(0).is_angle_free())
    throw DomainError("normal_form", "H(theta, I; 0) must be angle-free");
  const int d = H.dim();
  const int n_max = compose_order >= 0 ? compose_order : H.layout().k_action;
  LocalNormalForm out;
  out.generator = TimePolynomial(H.layout(), H.t_max());
  out.K = TimePolynomial(H.layout(), H.t_max());
  out.K.add_term(0, H.coefficient(0));
  std::vector<Series> omega0;
  for (int j = 0; j < d; ++j) omega0.push_back(partial_action(H.coefficient(0), j));
  std::vector<TimePolynomial> shift(d, TimePolynomial(H.layout(), H.t_max()));
  for (int q = 1; q <= t_order; ++q) {
    const Series Rq = compose_near_identity(truncate(H, q), shift, {}, n_max, q).coefficient(q);
    const Series mean = angle_average(Rq);
    out.K.add_term(q, mean);
    const Series osc = angle_part(Rq);
    if (osc.is_zero()) continue;
    HomologicalSolution sol = solve_homological(osc, omega0, delta);
    out.min_divisor = std::min(out.min_divisor, sol.min_divisor);
    const Series gq = scale(sol.psi, -1.0);
    out.generator.add_term(q, gq);
    for (int j = 0; j < d; ++j) shift[j].add_term(q, partial_angle(gq, j));
  }
  return out;
}

}  // namespace kamscar
