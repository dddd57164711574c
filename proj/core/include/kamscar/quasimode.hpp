#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/normal_form.hpp"
#include "kamscar/quantize.hpp"
#include "kamscar/time_polynomial.hpp"

namespace kamscar {

// Every m with |h (m + maslov / 4) - E| <= L h for some E in `actions`,
// in lexicographic order.
std::vector<IntVec> index_set(const std::vector<RealVec>& actions, double h, double L, const IntVec& maslov);

// Asymptotic size of the index set: meas(E) / h^d.
double index_count_prediction(double action_measure, double h, int dim);

// K(h (m + maslov / 4); t). Throws OutOfBox outside the box of K.
double quasi_eigenvalue(const TimePolynomial& K, const IntVec& m, double h, double t, const IntVec& maslov);

struct QuasimodeOptions {
  // t-order of the lattice-point normal form.
  int t_order = 8;
  // Highest power of t kept in the phase; -1 keeps all. The quasi-eigenvalue
  // then uses K through one power higher.
  int generator_order = -1;
  // -1: |det(1 + d_theta d_I G)|^(1/2); 1: its first-order expansion in t.
  int amplitude_order = -1;
  // Quadrature points per angle; 0 picks a power of two from the phase.
  int quadrature_points = 0;
  // Largest sup |G| / h accepted.
  double phase_bound = 50.0;
  int compose_order = -1;
  // Skip indices whose lattice action is resonant within the truncation
  // instead of throwing DivisorTooSmall.
  bool skip_resonant = false;
};

// Normal form of H rebased at `action` and solved to options.t_order.
LocalNormalForm lattice_normal_form(const TimePolynomial& H, const RealVec& action,
                                    const ApproximationFunction& delta, const QuasimodeOptions& options = {});

// Coefficients over sp.basis of a(theta) exp(i G(theta, I_m; t) / h) e_m,
// normalised. Throws PhaseTooLarge and DomainError (m outside the basis).
Eigen::VectorXcd quasimode_vector(const TimePolynomial& G, const IntVec& m, double h, double t,
                                  const SpectralProblem& sp, const QuasimodeOptions& options = {});

// |matrix v - mu v|_2
double residual(const SpectralProblem& sp, const Eigen::VectorXcd& v, double mu);

// Unit vector e_m over sp.basis.
Eigen::VectorXcd basis_vector(const SpectralProblem& sp, const IntVec& m);

struct QuasimodeSet {
  double h = 0.0;
  double t = 0.0;
  IntVec maslov;
  std::vector<IntVec> indices;
  // Indices left out by skip_resonant.
  std::vector<IntVec> resonant;
  std::map<IntVec, double> mu;
  std::map<IntVec, Eigen::VectorXcd> vectors;
  std::map<IntVec, double> residuals;
  // max |<v_m, v_l> - delta_ml|
  double gram_error = 0.0;
};

// Quasimodes at time sp.t for every index, each from its own lattice-point
// normal form.
QuasimodeSet build_quasimodes(const TimePolynomial& H, const ApproximationFunction& delta,
                              const SpectralProblem& sp, const std::vector<IntVec>& indices,
                              const QuasimodeOptions& options = {});

double gram_error(const std::vector<Eigen::VectorXcd>& vectors);

}  // namespace kamscar
