#pragma once

#include <limits>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/series.hpp"

namespace kamscar {

struct DecayFit {
  double C = 0.0;
  double rate = 0.0;
  double rate_stderr = 0.0;
  double residual = 0.0;
  std::size_t points = 0;
  // Fewer than three distinct abscissae: no fit is reported.
  bool degenerate = true;
};

struct HomologicalSolution {
  Series psi;
  // Angle average removed from f before solving.
  Series mean;
  double min_divisor = std::numeric_limits<double>::infinity();
  IntVec worst_mode;
  double amplification = 0.0;
  // Radius in (I - I0) where the Taylor-divided inverse divisors converge;
  // infinite for constant frequencies.
  double validity_radius = std::numeric_limits<double>::infinity();
  DecayFit decay_fit;
};

// omega . d_theta psi = f - <f> with psi of zero mean. Throws
// DivisorTooSmall when |<omega, gamma>| < kappa / (10 Delta(|gamma|_1)) on a
// mode present in f.
HomologicalSolution solve_homological(const Series& f, const RealVec& omega, const ApproximationFunction& delta);
// Action-dependent frequencies omega_j(I), each an angle-free series with
// the layout of f; divisors are inverted as Taylor series around I0.
HomologicalSolution solve_homological(const Series& f, const std::vector<Series>& omega,
                                      const ApproximationFunction& delta);

// omega . d_theta psi
Series lie_derivative(const Series& psi, const RealVec& omega);
Series lie_derivative(const Series& psi, const std::vector<Series>& omega);

// Least-squares fit of log |psi_gamma| = log C - rate |gamma|_1^(1/sigma).
DecayFit decay_diagnostic(const HomologicalSolution& sol, double sigma);
DecayFit decay_diagnostic(const Series& psi, double sigma);

}  // namespace kamscar
