#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/quantize.hpp"
#include "kamscar/quasimode.hpp"
#include "kamscar/time_polynomial.hpp"

namespace kamscar {

// Quasi-eigenvalue of an arbitrary lattice index.
using LatticeEnergy = std::function<double(const IntVec&)>;
using TimedLatticeEnergy = std::function<double(const IntVec&, double)>;

// mu_m = K(h (m + maslov / 4); t).
LatticeEnergy lattice_energy(const TimePolynomial& K, double h, double t, const IntVec& maslov);
TimedLatticeEnergy timed_lattice_energy(const TimePolynomial& K, double h, const IntVec& maslov);

// Delta^-1(C1 h^-1/2): the action-distance hypothesis in lattice units.
double separation_radius(const ApproximationFunction& delta, double C1, double h);

struct SeparationViolation {
  IntVec m;
  IntVec other;
  double gap = 0.0;
  double threshold = 0.0;
};

struct SeparationReport {
  std::size_t pairs = 0;
  // Neighbours whose action left the box of K.
  std::size_t skipped = 0;
  double radius = 0.0;
  double threshold = 0.0;
  double min_separation = std::numeric_limits<double>::infinity();
  std::vector<SeparationViolation> violations;
};

// Every pair (m, m') with m in `indices`, m' != m anywhere on the lattice and
// |m - m'| <= radius; violation when |mu_m - mu_m'| < C2 h^(3/2).
SeparationReport separation_scan(const std::vector<IntVec>& indices, const LatticeEnergy& mu, double h,
                                 double radius, double C2);

// Half the smallest gap of the same scan, in units of h^(3/2).
double calibrate_separation(const std::vector<IntVec>& indices, const LatticeEnergy& mu, double h, double radius);

// eta(I) = (K, d_t K, ..., d_t^(d-1) K) at time t.
RealVec eta_map(const TimePolynomial& K, const RealVec& I, double t);

struct EtaCheck {
  double min_abs_det = std::numeric_limits<double>::infinity();
  // G1 |eta(I1) - eta(I2)| <= |I1 - I2| <= G2 |eta(I1) - eta(I2)| over all grid pairs.
  double G1 = std::numeric_limits<double>::infinity();
  double G2 = 0.0;
  std::size_t points = 0;
};

// Central-difference Jacobian of eta on every grid point.
EtaCheck eta_map_check(const TimePolynomial& K, double t, const std::vector<RealVec>& grid, double step = 1e-6);

// Fraction of t in t_grid for which some m' != m with |m' - m|_inf <= box_radius
// has |mu_m(t) - mu_m'(t)| < h^gamma. Requires gamma > 7/4 + 2d.
double bad_t_fraction(const TimedLatticeEnergy& mu, const IntVec& m, int box_radius, double h, double gamma,
                      const std::vector<double>& t_grid);

// Finite union of intervals in (0, t0).
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<std::pair<double, double>> intervals);
  const std::vector<std::pair<double, double>>& intervals() const { return intervals_; }
  double measure() const;
  // meas(A cap (lo, hi))
  double measure_in(double lo, double hi) const;

 private:
  std::vector<std::pair<double, double>> intervals_;
};

struct DensityCheck {
  double measure = 0.0;
  // sup over x in (0, t0) of meas(A cap (x-r, x+r)) / meas((0, t0) cap (x-r, x+r)).
  double density = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// The density ratio is linear-fractional between breakpoints, so its sup
// is attained at one of them.
DensityCheck interval_density_check(const IntervalSet& A, double t0, double r);

// Random union of `pieces` intervals inside (0, t0).
IntervalSet random_interval_set(std::mt19937_64& rng, double t0, int pieces);

struct WindowReport {
  IntVec m;
  double mu = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  bool lambda_good = false;
  double best_overlap = 0.0;
  double best_energy = std::numeric_limits<double>::quiet_NaN();
  double torus_mass = 0.0;
  // sqrt(1 - (r / g)^2) when count == 1, with g the distance from mu to the
  // other band eigenvalues and band edges; else 0.
  double projection_bound = 0.0;
  double quasimode_residual = 0.0;
};

struct WindowStatistics {
  std::vector<WindowReport> reports;
  double occupancy_threshold = 0.0;
  double good_fraction = 0.0;
  // 1 - 2 / lambda
  double good_bound = 0.0;
  long eigenvalues_in_band = 0;
};

// Windows [mu_m - h^gamma / 3, mu_m + h^gamma / 3] with eigenvalue counts.
// lambda-good: count < lambda * band_measure / torus_measure, both phase-space
// measures. Throws WindowsOverlap when two windows intersect.
WindowStatistics window_statistics(const EigenBand& band, const QuasimodeSet& Q, double gamma, double lambda,
                                   double band_measure, double torus_measure);

// Best overlap max |<u_k, v_m>| over window eigenvectors, the spectral
// projection bound and the torus mass of the best u_k at radius delta.
void overlap_scan(WindowStatistics& stats, const EigenBand& band, const QuasimodeSet& Q, const SpectralProblem& sp,
                  double delta);

// Sum of |u_m'|^2 over basis indices with |h (m' + maslov / 4) - I| <= delta.
double torus_mass(const SpectralProblem& sp, const Eigen::VectorXcd& u, const RealVec& I, double delta);

}  // namespace kamscar
