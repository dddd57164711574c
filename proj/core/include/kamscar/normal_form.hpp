#pragma once

#include <limits>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/time_polynomial.hpp"

namespace kamscar {

struct NormalFormOptions {
  int r_max = 3;
  // Highest power of t carried by every series.
  int t_order = 8;
  // Total Taylor order of compositions; -1 uses k_action of the layout.
  int compose_order = -1;
  double inversion_tol = 1e-12;
  int max_inversion_steps = 50;
  double box_shrink = 0.9;
  // Coefficients of f below this fraction of max |f| do not open a block.
  double block_tol = 1e-11;
  std::vector<double> t_grid = {1e-3, 2.154434690031884e-3, 4.641588833612779e-3, 1e-2};
  int angle_samples = 16;
  int action_samples = 3;
};

struct SamplePoint {
  RealVec theta;
  RealVec action;
};

// angle_samples^d angles times action_samples^d actions spread over
// `fraction` of the layout radius around the base point.
std::vector<SamplePoint> sample_points(const SeriesLayout& layout, int angle_samples, int action_samples,
                                       double fraction);

struct OrderFit {
  double slope = 0.0;
  double residual = 0.0;
  // f vanished on every sample.
  bool vanishing = false;
  std::vector<double> sup_norms;
};

// Log-log slope of max |f| over `points` against t.
OrderFit measure_remainder_order(const TimePolynomial& f, const std::vector<double>& t_grid,
                                 const std::vector<SamplePoint>& points);

// (theta', I') -> (theta, I) generated by <I', theta> + G(theta, I'; t):
// I = I' + d_theta G(theta, I'), theta' = theta + d_I G(theta, I').
struct CanonicalMap {
  TimePolynomial generator;
  std::vector<TimePolynomial> dG_dtheta;
  std::vector<TimePolynomial> dG_dI;
  // Formal inverse: theta = theta' + lambda(theta', I'), I = I' + xi(theta', I').
  std::vector<TimePolynomial> lambda;
  std::vector<TimePolynomial> xi;
};

struct MappedPoint {
  RealVec theta;
  RealVec action;
  double residual = 0.0;
  int iterations = 0;
};

// Pointwise inversion by damped fixed-point iteration on theta.
// Throws InversionDiverged after `max_steps` without reaching `tol`.
MappedPoint apply_map(const CanonicalMap& map, const RealVec& theta_new, const RealVec& action_new, double t,
                      double tol = 1e-14, int max_steps = 50, double damping = 1.0);
// Central-difference Jacobian determinant of the pointwise map.
double map_jacobian_det(const CanonicalMap& map, const RealVec& theta_new, const RealVec& action_new, double t,
                        double step = 1e-6);

struct IterationRecord {
  int r = 0;
  TimePolynomial h;
  TimePolynomial f;
  // Map that produced this record from the previous one; empty for r = 0.
  CanonicalMap map;
  // Removed block of t-powers [block_lo, block_hi]; -1 when nothing was removed.
  int block_lo = -1;
  int block_hi = -1;
  double inversion_residual = 0.0;
  int inversion_iterations = 0;
  double min_divisor = std::numeric_limits<double>::infinity();
  double amplification = 0.0;
  double validity_radius = std::numeric_limits<double>::infinity();
  // Working action box as a fraction of the layout radius.
  double box_scale = 1.0;
  // Largest coefficient dropped below the new leading block, relative to max |f|.
  double chopped = 0.0;
  OrderFit order;
};

struct NormalFormResult {
  std::vector<IterationRecord> iterations;
  // Angle-free; exact through t^k_order.
  TimePolynomial K;
  int k_order = 0;
  std::vector<double> remainder_orders;
};

struct SplitHamiltonian {
  TimePolynomial h;
  TimePolynomial f;
};

// h = angle average of H, f = H - h.
SplitHamiltonian split(const TimePolynomial& H);

// One block removal: with p the leading power of the angle-dependent part of
// f, a generator G = sum_{q=p}^{2p-1} t^q g_q cancels f through t^(2p-1).
// h_next = h + <f>, f_next = H o chi - h_next.
IterationRecord one_step(const TimePolynomial& h, const TimePolynomial& f, const ApproximationFunction& delta,
                         const NormalFormOptions& options, int r = 0, double box_scale = 1.0);

NormalFormResult run_iteration(const TimePolynomial& H, const ApproximationFunction& delta,
                               const NormalFormOptions& options);

// H(theta, I + d_theta G) = K(I) + O(t^(t_order+1)) solved directly, power by
// power, around the base point of H. Used for lattice-point phases.
struct LocalNormalForm {
  TimePolynomial generator;
  TimePolynomial K;
  double min_divisor = std::numeric_limits<double>::infinity();
};

LocalNormalForm hamilton_jacobi_normal_form(const TimePolynomial& H, const ApproximationFunction& delta,
                                            int t_order, int compose_order = -1);

}  // namespace kamscar
