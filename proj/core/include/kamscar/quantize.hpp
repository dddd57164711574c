#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <iosfwd>
#include <map>
#include <vector>

#include "kamscar/nonres.hpp"
#include "kamscar/time_polynomial.hpp"

namespace kamscar {

struct SpectralOptions {
  // Lattice layers kept around the region where the symbol meets the band;
  // -1 uses k_angle of the symbol.
  int margin_layers = -1;
  // Angle samples per dimension for the symbol range at each lattice action.
  int range_samples = 16;
  // Largest basis handed to the dense eigensolver.
  long max_dense = 6000;
};

class SpectralProblem {
 public:
  int dim = 1;
  double hbar = 0.0;
  double t = 0.0;
  IntVec maslov;
  double band_lo = 0.0;
  double band_hi = 0.0;
  // Largest |gamma|_inf carried by the symbol.
  int bandwidth = 0;
  std::vector<IntVec> basis;
  // Both triangles stored.
  Eigen::SparseMatrix<Complex> matrix;
  long max_dense = 6000;

  // I_m = h (m + maslov / 4)
  RealVec action(const IntVec& m) const;
  // -1 when m is not in the basis.
  long index_of(const IntVec& m) const;

 private:
  friend SpectralProblem build_matrix(const TimePolynomial&, double, double, const IntVec&, const ActionBox&,
                                      double, double, const SpectralOptions&);
  std::map<IntVec, long> lookup_;
};

// <e_m', P e_m> = p_gamma(h ((m + m') / 2 + maslov / 4)), gamma = m' - m.
// The basis is every lattice point of `box` within margin_layers of the
// region where the angle range of p meets [band_lo, band_hi]. Throws
// DomainError when that neighbourhood reaches the edge of `box`.
SpectralProblem build_matrix(const TimePolynomial& H, double t, double h, const IntVec& maslov,
                             const ActionBox& box, double band_lo, double band_hi,
                             const SpectralOptions& options = {});

struct EigenPair {
  double E = 0.0;
  Eigen::VectorXcd u;
};

struct EigenBand {
  std::vector<EigenPair> pairs;
  double residual = 0.0;
  double spectral_norm = 0.0;
  double orthonormality = 0.0;
};

// All eigenpairs with E in [band_lo, band_hi], ascending. Dense LAPACK
// range solve; throws DomainError above max_dense.
EigenBand eigs_in_band(const SpectralProblem& sp);

// Number of eigenvalues below sigma from the inertia of a banded
// L D L^H factorisation of matrix - sigma. A vanishing pivot moves sigma
// by a relative 1e-12 in the direction of `nudge` and retries.
long count_below(const SpectralProblem& sp, double sigma, int nudge = -1);
// Eigenvalues in [band_lo, band_hi] widened by a relative 1e-12 at each end.
long count_in_band(const SpectralProblem& sp);

struct WeylCount {
  double predicted = 0.0;
  long actual = 0;
  // Phase-space volume of {band_lo <= p <= band_hi}.
  double volume = 0.0;
};

// predicted = (2 pi h)^-d vol{p in [a, b]} by quadrature on angle_n^d x
// action_n^d cells over T^d x box, p linearised across each action cell.
double band_volume(const TimePolynomial& H, double t, const ActionBox& box, double band_lo, double band_hi,
                   int angle_n, int action_n);
WeylCount weyl_count(const TimePolynomial& H, double t, double h, const ActionBox& box, double band_lo,
                     double band_hi, int angle_n = 32, int action_n = 2000,
                     const SpectralOptions& options = {});

// JSON lines: header, basis, one record per pair, end. drop_below > 0 stores
// only coefficients with |u_i| > drop_below, with their basis positions.
void write_jsonl(std::ostream& out, const SpectralProblem& sp, const EigenBand& band, double drop_below = 0.0);
struct StoredBand {
  int dim = 1;
  double hbar = 0.0;
  double t = 0.0;
  std::vector<IntVec> basis;
  EigenBand band;
};
StoredBand read_eigen_band(std::istream& in);

}  // namespace kamscar
