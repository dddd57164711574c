#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kamscar/series.hpp"

namespace kamscar {

enum class DeltaKind { Power, ExpPower };

// The pair (kappa, Delta) of a non-resonance class. Delta(s) = s^tau for the
// power kind, exp(a s^b) for the exp_power kind.
class ApproximationFunction {
 public:
  static ApproximationFunction power(double tau, double kappa, double sigma, int dim);
  static ApproximationFunction exp_power(double a, double b, double kappa, double sigma);

  DeltaKind kind() const { return kind_; }
  double tau() const { return tau_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double kappa() const { return kappa_; }
  double sigma() const { return sigma_; }
  // Lower limit of the Bruno integral.
  double varsigma() const { return 1.0; }

  double operator()(double s) const;
  double log_value(double s) const;
  // Integral of log Delta(s) / s^(1 + 1/sigma) over [varsigma, inf), by
  // quadrature in log s.
  double bruno_integral() const;
  std::string describe() const;

 private:
  ApproximationFunction() = default;
  void validate() const;

  DeltaKind kind_ = DeltaKind::Power;
  double tau_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  double kappa_ = 1.0;
  double sigma_ = 2.0;
};

// Bisection inverse; |Delta(s) - y| <= 1e-9 y. Requires y >= Delta(1).
double delta_inverse(const ApproximationFunction& delta, double y);

struct FrequencySample {
  RealVec omega;
  IntVec worst_mode;
  // min over tested modes of |<omega, gamma>| Delta(|gamma|_1) / kappa
  double margin = 0.0;
  int k_test = 0;
  bool passed() const { return margin >= 1.0; }
};

// One representative of each +-gamma pair with 0 < |gamma|_1 <= k_max,
// ordered by |gamma|_1 then lexicographically.
const std::vector<IntVec>& half_lattice_modes(int dim, int k_max);

FrequencySample check_frequency(const RealVec& omega, const ApproximationFunction& delta, int k_test);

struct ActionBox {
  RealVec lo;
  RealVec hi;
  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const RealVec& I, double slack = 0.0) const;
};

struct ResonantZone {
  // Cell centres of a grid_n^d grid whose frequency passed.
  std::vector<RealVec> points;
  std::size_t tested = 0;
  double fraction = 0.0;
  double cell_volume = 0.0;
  int grid_n = 0;
  int k_test = 0;
  double measure() const { return cell_volume * static_cast<double>(points.size()); }
};

using FrequencyMap = std::function<RealVec(const RealVec&)>;

ResonantZone resonant_zone_actions(const FrequencyMap& omega_map, const ActionBox& box,
                                   const ApproximationFunction& delta, int k_test, int grid_n);

// Grid cell centres of `box` at n points per axis, row-major in the last index.
std::vector<RealVec> box_grid(const ActionBox& box, int n);

}  // namespace kamscar
