#include "kamscar/quasimode.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "kamscar/errors.hpp"

namespace kamscar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Fourier slices c_gamma(I) of every mode of s.
std::vector<Complex> slices_at(const Series& s, const RealVec& I) {
  if (!in_box(s, I)) throw OutOfBox("quasimode", "lattice action outside the box of the generator");
  const MultiIndexSet& A = s.actions();
  std::vector<double> mono(A.size(), 1.0);
  for (std::size_t a = 1; a < A.size(); ++a)
    for (int k = 0; k < s.dim(); ++k) {
      const int lo = A.lower(a, k);
      if (lo >= 0) {
        mono[a] = mono[lo] * (I[k] - s.base_point()[k]);
        break;
      }
    }
  std::vector<Complex> out(s.mode_count());
  for (std::size_t m = 0; m < s.mode_count(); ++m) {
    Complex v(0.0, 0.0);
    for (std::size_t a = 0; a < A.size(); ++a) v += s.at(m, a) * mono[a];
    out[m] = v;
  }
  return out;
}

// In-place DFT along every axis of an n^d array, first axis slowest.
// forward: sum_j x_j e^{-2 pi i jk/n}; otherwise the unscaled inverse.
void transform(std::vector<Complex>& data, int d, int n, bool forward) {
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  std::vector<Complex> line(n), out;
  std::size_t stride = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    for (std::size_t c = 0; c < data.size(); ++c) {
      if ((c / stride) % n != 0) continue;
      for (int k = 0; k < n; ++k) line[k] = data[c + k * stride];
      if (forward)
        fft.fwd(out, line);
      else
        fft.inv(out, line);
      for (int k = 0; k < n; ++k) data[c + k * stride] = out[k];
    }
    stride *= static_cast<std::size_t>(n);
  }
}

std::size_t grid_index(const IntVec& g, int n) {
  std::size_t c = 0;
  for (int v : g) c = c * n + static_cast<std::size_t>(((v % n) + n) % n);
  return c;
}

// Values on the n^d angle grid of sum_gamma coeff[gamma] e^{i gamma theta}.
std::vector<Complex> synthesise(const Series& layout_of, const std::vector<Complex>& coeff, int n) {
  std::size_t total = 1;
  for (int j = 0; j < layout_of.dim(); ++j) total *= static_cast<std::size_t>(n);
  std::vector<Complex> data(total, Complex(0.0, 0.0));
  for (std::size_t m = 0; m < coeff.size(); ++m) data[grid_index(layout_of.mode(m), n)] += coeff[m];
  transform(data, layout_of.dim(), n, false);
  return data;
}

}  // namespace

std::vector<IntVec> index_set(const std::vector<RealVec>& actions, double h, double L, const IntVec& maslov) {
  std::set<IntVec> found;
  const double r = L * h * (1.0 + 1e-9);
  for (const auto& E : actions) {
    const int d = static_cast<int>(E.size());
    IntVec lo(d), n(d);
    std::size_t total = 1;
    for (int j = 0; j < d; ++j) {
      lo[j] = static_cast<int>(std::ceil((E[j] - r) / h - 0.25 * maslov[j]));
      const int hi = static_cast<int>(std::floor((E[j] + r) / h - 0.25 * maslov[j]));
      n[j] = std::max(0, hi - lo[j] + 1);
      total *= static_cast<std::size_t>(n[j]);
    }
    for (std::size_t c = 0; c < total; ++c) {
      IntVec m(d);
      std::size_t x = c;
      double dist2 = 0.0;
      for (int j = d - 1; j >= 0; --j) {
        m[j] = lo[j] + static_cast<int>(x % n[j]);
        x /= n[j];
        const double diff = h * (m[j] + 0.25 * maslov[j]) - E[j];
        dist2 += diff * diff;
      }
      if (std::sqrt(dist2) <= r) found.insert(m);
    }
  }
  return {found.begin(), found.end()};
}

double index_count_prediction(double action_measure, double h, int dim) {
  return action_measure / std::pow(h, dim);
}

double quasi_eigenvalue(const TimePolynomial& K, const IntVec& m, double h, double t, const IntVec& maslov) {
  RealVec I(m.size());
  for (std::size_t j = 0; j < m.size(); ++j) I[j] = h * (m[j] + 0.25 * maslov[j]);
  if (!in_box(K.coefficient(0), I)) throw OutOfBox("quasimode", "lattice action outside the box of K");
  return eval(K, RealVec(m.size(), 0.0), I, t);
}

LocalNormalForm lattice_normal_form(const TimePolynomial& H, const RealVec& action,
                                    const ApproximationFunction& delta, const QuasimodeOptions& o) {
  return hamilton_jacobi_normal_form(rebase(H, action), delta, o.t_order, o.compose_order);
}

Eigen::VectorXcd quasimode_vector(const TimePolynomial& G, const IntVec& m, double h, double t,
                                  const SpectralProblem& sp, const QuasimodeOptions& o) {
  if (sp.index_of(m) < 0) throw DomainError("quasimode", "lattice index outside the spectral basis");
  const int d = sp.dim;
  const RealVec I = sp.action(m);
  const TimePolynomial Gk = o.generator_order >= 0 ? truncate(G, o.generator_order) : G;
  const Series g = at_time(Gk, t);
  const std::vector<Complex> gs = slices_at(g, I);
  std::vector<std::vector<Complex>> dgs;
  for (int k = 0; k < d; ++k) dgs.push_back(slices_at(partial_action(g, k), I));

  double sup = 0.0, freq = 0.0;
  for (std::size_t q = 0; q < gs.size(); ++q) {
    sup += std::abs(gs[q]);
    int w = 0;
    for (int v : g.mode(q)) w = std::max(w, std::abs(v));
    freq += w * std::abs(gs[q]);
  }
  if (sup / h > o.phase_bound) {
    std::ostringstream os;
    os << "sup |G| / h = " << sup / h << " exceeds the phase bound " << o.phase_bound;
    throw PhaseTooLarge(os.str());
  }
  int n = o.quadrature_points;
  if (n <= 0) {
    n = 32;
    while (n < 4.0 * (g.k_angle() + freq / h + 8.0)) n *= 2;
  }

  const std::vector<Complex> phase = synthesise(g, gs, n);
  // Mixed derivatives d_theta_j d_I_k G.
  std::vector<std::vector<Complex>> mixed(d * d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      std::vector<Complex> c(gs.size());
      for (std::size_t q = 0; q < gs.size(); ++q) c[q] = Complex(0.0, g.mode(q)[j]) * dgs[k][q];
      mixed[j * d + k] = synthesise(g, c, n);
    }
  std::vector<Complex> w(phase.size());
  Eigen::MatrixXd M(d, d);
  for (std::size_t c = 0; c < phase.size(); ++c) {
    double a;
    if (o.amplitude_order == 1) {
      a = 1.0;
      for (int j = 0; j < d; ++j) a += 0.5 * mixed[j * d + j][c].real();
    } else {
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) M(j, k) = (j == k ? 1.0 : 0.0) + mixed[j * d + k][c].real();
      a = std::sqrt(std::abs(M.determinant()));
    }
    const double ph = phase[c].real() / h;
    w[c] = a * Complex(std::cos(ph), std::sin(ph));
  }
  transform(w, d, n, true);
  const double norm = std::pow(static_cast<double>(n), d);

  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<long>(sp.basis.size()));
  for (std::size_t c = 0; c < w.size(); ++c) {
    IntVec mp(d);
    std::size_t x = c;
    for (int j = d - 1; j >= 0; --j) {
      int k = static_cast<int>(x % n);
      x /= n;
      if (k >= n / 2) k -= n;
      mp[j] = m[j] + k;
    }
    const long idx = sp.index_of(mp);
    if (idx >= 0) v(idx) = w[c] / norm;
  }
  return v / v.norm();
}

double residual(const SpectralProblem& sp, const Eigen::VectorXcd& v, double mu) {
  return (sp.matrix * v - mu * v).norm();
}

Eigen::VectorXcd basis_vector(const SpectralProblem& sp, const IntVec& m) {
  const long idx = sp.index_of(m);
  if (idx < 0) throw DomainError("quasimode", "lattice index outside the spectral basis");
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<long>(sp.basis.size()));
  v(idx) = 1.0;
  return v;
}

double gram_error(const std::vector<Eigen::VectorXcd>& vectors) {
  double worst = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i)
    for (std::size_t j = i; j < vectors.size(); ++j) {
      const Complex g = vectors[i].dot(vectors[j]);
      worst = std::max(worst, std::abs(g - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

QuasimodeSet build_quasimodes(const TimePolynomial& H, const ApproximationFunction& delta,
                              const SpectralProblem& sp, const std::vector<IntVec>& indices,
                              const QuasimodeOptions& o) {
  QuasimodeSet q;
  q.h = sp.hbar;
  q.t = sp.t;
  q.maslov = sp.maslov;
  std::vector<Eigen::VectorXcd> all;
  for (const auto& m : indices) {
    LocalNormalForm lnf;
    try {
      lnf = lattice_normal_form(H, sp.action(m), delta, o);
    } catch (const DivisorTooSmall&) {
      if (!o.skip_resonant) throw;
      q.resonant.push_back(m);
      continue;
    }
    q.indices.push_back(m);
    const TimePolynomial K = o.generator_order >= 0 ? truncate(lnf.K, o.generator_order + 1) : lnf.K;
    const double mu = quasi_eigenvalue(K, m, sp.hbar, sp.t, sp.maslov);
    Eigen::VectorXcd v = quasimode_vector(lnf.generator, m, sp.hbar, sp.t, sp, o);
    q.mu[m] = mu;
    q.residuals[m] = residual(sp, v, mu);
    all.push_back(v);
    q.vectors[m] = std::move(v);
  }
  q.gram_error = gram_error(all);
  return q;
}

}  // namespace kamscar
