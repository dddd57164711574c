#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <unsupported/Eigen/FFT>

#include "kamscar/errors.hpp"
#include "kamscar/models.hpp"
#include "kamscar/quantize.hpp"
#include "support.hpp"

namespace {

using namespace kamscar;

constexpr double kPi = 3.14159265358979323846;
const double kGolden = 0.5 * (1.0 + std::sqrt(5.0));

SeriesLayout line_layout(double radius = 3.0) {
  SeriesLayout l;
  l.dim = 1;
  l.base_point = {0.0};
  l.k_angle = 8;
  l.k_action = 2;
  l.radius = {radius};
  return l;
}

TimePolynomial kinetic(const SeriesLayout& l) {
  TimePolynomial H(l, 1);
  Series h0(l);
  for (int j = 0; j < l.dim; ++j) {
    IntVec a(l.dim, 0);
    a[j] = 2;
    h0.set(IntVec(l.dim, 0), a, 0.5);
    a[j] = 1;
    h0.set(IntVec(l.dim, 0), a, l.base_point[j]);
  }
  h0.set(IntVec(l.dim, 0), IntVec(l.dim, 0), 0.5 * [&] {
    double s = 0.0;
    for (double b : l.base_point) s += b * b;
    return s;
  }());
  H.add_term(0, h0);
  return H;
}

ActionBox box1(double a, double b) { return ActionBox{{a}, {b}}; }

std::vector<double> spectrum(const SpectralProblem& sp) {
  std::vector<double> E;
  for (const auto& p : eigs_in_band(sp).pairs) E.push_back(p.E);
  return E;
}

// Lowest `count` eigenvalues of 1/2 (h D)^2 + eps cos(theta) on an n-point
// theta grid: FFT for the kinetic part, Lanczos with full
// reorthogonalisation for the spectrum.
std::vector<double> grid_oracle(double h, double eps, int n, int steps, int count) {
  Eigen::FFT<double> fft;
  auto apply = [&](const std::vector<Complex>& u) {
    std::vector<Complex> U, out;
    fft.fwd(U, u);
    for (int k = 0; k < n; ++k) {
      const int freq = k < n / 2 ? k : k - n;
      U[k] *= 0.5 * (h * freq) * (h * freq);
    }
    fft.inv(out, U);
    for (int j = 0; j < n; ++j) out[j] += eps * std::cos(2.0 * kPi * j / n) * u[j];
    return out;
  };
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<std::vector<Complex>> Q;
  std::vector<Complex> q(n);
  for (auto& v : q) v = Complex(g(rng), g(rng));
  auto normalise = [](std::vector<Complex>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    s = std::sqrt(s);
    for (auto& x : v) x /= s;
    return s;
  };
  normalise(q);
  std::vector<double> alpha, beta;
  for (int it = 0; it < steps; ++it) {
    Q.push_back(q);
    std::vector<Complex> w = apply(q);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < Q.size(); ++k) {
        Complex c(0.0, 0.0);
        for (int j = 0; j < n; ++j) c += std::conj(Q[k][j]) * w[j];
        if (pass == 0 && k + 1 == Q.size()) alpha.push_back(c.real());
        for (int j = 0; j < n; ++j) w[j] -= c * Q[k][j];
      }
    const double b = normalise(w);
    if (it + 1 < steps) beta.push_back(b);
    q = w;
  }
  Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<long>(alpha.size()));
  Eigen::VectorXd sub = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<long>(beta.size()));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> E(es.eigenvalues().data(), es.eigenvalues().data() + count);
  return E;
}

// Cyclic Jacobi on the real symmetric embedding [[A, -B], [B, A]] of A + iB.
// Every eigenvalue appears twice.
std::vector<double> jacobi_eigenvalues(const Eigen::MatrixXcd& M) {
  const long n = M.rows(), N = 2 * n;
  std::vector<double> A(N * N);
  auto at = [&](long i, long j) -> double& { return A[i * N + j]; };
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      at(i, j) = at(i + n, j + n) = M(i, j).real();
      at(i + n, j) = M(i, j).imag();
      at(i, j + n) = -M(i, j).imag();
    }
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (long i = 0; i < N; ++i)
      for (long j = i + 1; j < N; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-30) break;
    for (long p = 0; p < N; ++p)
      for (long q = p + 1; q < N; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (long k = 0; k < N; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (long k = 0; k < N; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> E(N);
  for (long i = 0; i < N; ++i) E[i] = at(i, i);
  std::sort(E.begin(), E.end());
  std::vector<double> out;
  for (long i = 0; i < N; i += 2) out.push_back(0.5 * (E[i] + E[i + 1]));
  return out;
}

SpectralProblem from_dense(const Eigen::MatrixXcd& M, double a, double b) {
  SpectralProblem sp;
  sp.dim = 1;
  sp.hbar = 1.0;
  sp.maslov = {0};
  sp.band_lo = a;
  sp.band_hi = b;
  for (long i = 0; i < M.rows(); ++i) sp.basis.push_back({static_cast<int>(i)});
  sp.matrix = M.sparseView();
  return sp;
}

Eigen::MatrixXcd dense(const SpectralProblem& sp) { return Eigen::MatrixXcd(sp.matrix); }

TEST(BuildMatrix, KineticSymbolIsDiagonal) {
  const auto l = line_layout();
  const double h = 0.1;
  for (int maslov : {0, 1, 3}) {
    const auto sp = build_matrix(kinetic(l), 0.0, h, {maslov}, box1(-2.0, 2.0), 0.0, 0.5);
    const Eigen::MatrixXcd A = dense(sp);
    ASSERT_GT(sp.basis.size(), 20u);
    for (long i = 0; i < A.rows(); ++i)
      for (long j = 0; j < A.cols(); ++j) {
        const double I = h * (sp.basis[i][0] + 0.25 * maslov);
        EXPECT_NEAR(std::abs(A(i, j) - (i == j ? 0.5 * I * I : 0.0)), 0.0, 1e-14);
      }
  }
}

TEST(BuildMatrix, CosineIsShiftOperator) {
  const auto l = line_layout(4.0);
  const double h = 0.1;
  const auto sp = build_matrix(model_pendulum1d(1.0, l), 1.0, h, {0}, box1(-3.0, 3.0), 0.0, 0.5);
  const Eigen::MatrixXcd A = dense(sp);
  for (long i = 0; i < A.rows(); ++i)
    for (long j = 0; j < A.cols(); ++j) {
      const int dm = sp.basis[i][0] - sp.basis[j][0];
      const double kin = i == j ? 0.5 * std::pow(h * sp.basis[i][0], 2) : 0.0;
      const double shift = std::abs(dm) == 1 ? 0.5 : 0.0;
      EXPECT_NEAR(std::abs(A(i, j) - kin - shift), 0.0, 1e-14);
    }
}

TEST(BuildMatrix, HermitianBandedRealDiagonal) {
  std::mt19937_64 rng(11);
  auto l = kamscar::testing::layout(2, 3, 2, 0.0, 3.0);
  TimePolynomial H = kinetic(l);
  H.add_term(1, kamscar::testing::random_series(l, 12, 3, 2, rng, 0.05));
  const auto sp = build_matrix(H, 0.5, 0.1, {0, 0}, ActionBox{{-2.0, -2.0}, {2.0, 2.0}}, 0.1, 0.3);
  const Eigen::MatrixXcd A = dense(sp);
  EXPECT_EQ((A - A.adjoint()).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE(sp.bandwidth, 3);
  for (long i = 0; i < A.rows(); ++i) {
    EXPECT_EQ(A(i, i).imag(), 0.0);
    for (long j = 0; j < A.cols(); ++j) {
      int w = 0;
      for (int k = 0; k < 2; ++k) w = std::max(w, std::abs(sp.basis[i][k] - sp.basis[j][k]));
      if (w > l.k_angle) EXPECT_EQ(A(i, j), Complex(0.0, 0.0));
    }
  }
}

TEST(BuildMatrix, AngleFreeSymbolGivesLatticeSpectrum) {
  std::mt19937_64 rng(5);
  auto l = kamscar::testing::layout(2, 2, 3, 0.0, 3.0);
  TimePolynomial H = kinetic(l);
  Series extra = angle_average(kamscar::testing::random_series(l, 6, 0, 3, rng, 0.02));
  H.add_term(1, extra);
  const double h = 0.1, t = 1.0;
  const auto sp = build_matrix(H, t, h, {0, 0}, ActionBox{{-2.0, -2.0}, {2.0, 2.0}}, 0.05, 0.2);
  const Eigen::MatrixXcd A = dense(sp);
  EXPECT_NEAR((A - Eigen::MatrixXcd(A.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 0.0, 1e-15);
  std::vector<double> expected;
  for (const auto& m : sp.basis) {
    const double v = eval(at_time(H, t), {0.0, 0.0}, sp.action(m));
    if (v >= 0.05 && v <= 0.2) expected.push_back(v);
  }
  std::sort(expected.begin(), expected.end());
  const auto E = spectrum(sp);
  ASSERT_EQ(E.size(), expected.size());
  for (std::size_t k = 0; k < E.size(); ++k) EXPECT_NEAR(E[k], expected[k], 1e-12);
}

TEST(BuildMatrix, InsufficientMarginIsRejected) {
  const auto l = line_layout();
  EXPECT_THROW(build_matrix(kinetic(l), 0.0, 0.1, {0}, box1(-1.2, 1.2), 0.0, 0.5), DomainError);
  EXPECT_NO_THROW(build_matrix(kinetic(l), 0.0, 0.1, {0}, box1(-1.95, 1.95), 0.0, 0.5));
}

TEST(BuildMatrix, PendulumMatchesGridOracle) {
  const auto l = line_layout();
  const double h = 0.05, eps = 0.2;
  const auto sp = build_matrix(model_pendulum1d(eps, l), 1.0, h, {0}, box1(-2.5, 2.5), -1.0, 0.6);
  const auto E = spectrum(sp);
  const auto oracle = grid_oracle(h, eps, 128, 100, 10);
  ASSERT_GE(E.size(), 10u);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(E[k], oracle[k], 1e-6) << k;
}

TEST(EigsInBand, DiagonalEntriesInBand) {
  Eigen::VectorXd d(6);
  d << -1.0, 0.3, 2.0, 0.1, 0.7, 5.0;
  const auto band = eigs_in_band(from_dense(d.cast<Complex>().asDiagonal(), 0.0, 1.0));
  ASSERT_EQ(band.pairs.size(), 3u);
  EXPECT_DOUBLE_EQ(band.pairs[0].E, 0.1);
  EXPECT_DOUBLE_EQ(band.pairs[1].E, 0.3);
  EXPECT_DOUBLE_EQ(band.pairs[2].E, 0.7);
}

TEST(EigsInBand, TwoByTwoExchange) {
  Eigen::MatrixXcd M(2, 2);
  M << 0.0, 1.0, 1.0, 0.0;
  const auto band = eigs_in_band(from_dense(M, -2.0, 2.0));
  ASSERT_EQ(band.pairs.size(), 2u);
  EXPECT_NEAR(band.pairs[0].E, -1.0, 1e-15);
  EXPECT_NEAR(band.pairs[1].E, 1.0, 1e-15);
}

TEST(EigsInBand, RandomBandMatchesIndependentSolve) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const long n = 40;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    M(i, i) = u(rng);
    for (long j = i + 1; j <= std::min(n - 1, i + 3); ++j) {
      M(i, j) = Complex(u(rng), u(rng));
      M(j, i) = std::conj(M(i, j));
    }
  }
  const auto sp = from_dense(M, -100.0, 100.0);
  const auto band = eigs_in_band(sp);
  const auto oracle = jacobi_eigenvalues(M);
  ASSERT_EQ(band.pairs.size(), oracle.size());
  for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_NEAR(band.pairs[k].E, oracle[k], 1e-10);
  EXPECT_LE(band.residual, 1e-8 * band.spectral_norm);
  EXPECT_LE(band.orthonormality, 1e-8);
  for (double sigma : {-1.5, -0.2, 0.0, 0.4, 2.2}) {
    const long expected = std::count_if(oracle.begin(), oracle.end(), [&](double e) { return e < sigma; });
    EXPECT_EQ(count_below(sp, sigma), expected) << sigma;
  }
}

TEST(EigsInBand, DenseLimitIsEnforced) {
  auto sp = from_dense(Eigen::MatrixXcd::Identity(5, 5), 0.0, 2.0);
  sp.max_dense = 4;
  EXPECT_THROW(eigs_in_band(sp), DomainError);
}

TEST(Weyl, FreeParticleBand) {
  const auto l = line_layout();
  const double h = 0.01;
  const auto w = weyl_count(kinetic(l), 0.0, h, box1(-1.5, 1.5), 0.0, 0.5);
  EXPECT_NEAR(w.volume, 4.0 * kPi, 2e-2);
  EXPECT_NEAR(w.predicted, 2.0 / h, 0.5);
  EXPECT_LE(std::abs(w.actual - w.predicted), 2.0);
  long direct = 0;
  for (int m = -200; m <= 200; ++m) direct += 0.5 * (h * m) * (h * m) <= 0.5;
  EXPECT_EQ(w.actual, direct);
}

TEST(Weyl, EmptyBandBelowMinimum) {
  const auto l = line_layout();
  const auto w = weyl_count(kinetic(l), 0.0, 0.01, box1(-1.5, 1.5), -2.0, -1.0);
  EXPECT_EQ(w.predicted, 0.0);
  EXPECT_EQ(w.actual, 0);
}

TEST(Weyl, InertiaCountMatchesDenseSpectrum) {
  const auto l = line_layout();
  const auto sp = build_matrix(model_pendulum1d(0.3, l), 1.0, 0.05, {0}, box1(-2.5, 2.5), -0.1, 0.4);
  const auto E = spectrum(sp);
  EXPECT_EQ(count_in_band(sp), static_cast<long>(E.size()));
}

TEST(Weyl, PlaneModelRelativeErrorDecreases) {
  SeriesLayout l;
  l.dim = 2;
  l.base_point = {1.0, kGolden};
  l.k_angle = 8;
  l.k_action = 4;
  l.radius = {3.5, 3.5};
  Series f = constant(l, 1.0);
  f.set({1, 0}, {0, 0}, 0.25);
  f.set({1, -1}, {0, 0}, 0.25);
  const TimePolynomial H = model_example5({f}, l);
  const ActionBox box{{-1.5, -1.5}, {1.5, 1.5}};
  double previous = INFINITY;
  for (double h : {1.0 / 20, 1.0 / 40, 1.0 / 80}) {
    const auto w = weyl_count(H, 0.01, h, box, 0.1, 0.5, 8, 300);
    const double rel = std::abs(w.actual / w.predicted - 1.0);
    EXPECT_LT(rel, previous) << h;
    previous = rel;
  }
}

TEST(Invariance, MaslovShiftByFourRelabels) {
  const auto l = line_layout();
  const auto H = model_pendulum1d(0.2, l);
  const auto a = spectrum(build_matrix(H, 1.0, 0.05, {1}, box1(-2.5, 2.5), -0.5, 0.5));
  const auto b = spectrum(build_matrix(H, 1.0, 0.05, {5}, box1(-2.5, 2.5), -0.5, 0.5));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(Invariance, AngleTranslationLeavesSpectrum) {
  const auto l = line_layout();
  const auto H = model_pendulum1d(0.2, l);
  TimePolynomial G(l, 1);
  Series f(l);
  const double shift = 0.7;
  f.set({1}, {0}, 0.1 * Complex(std::cos(shift), std::sin(shift)));
  f.set({2}, {1}, 0.03 * Complex(std::cos(2 * shift), std::sin(2 * shift)));
  Series f0(l);
  f0.set({1}, {0}, 0.1);
  f0.set({2}, {1}, 0.03);
  G.add_term(0, kinetic(l).coefficient(0));
  TimePolynomial G0 = G;
  G.add_term(1, f);
  G0.add_term(1, f0);
  const auto a = spectrum(build_matrix(G0, 1.0, 0.05, {0}, box1(-2.5, 2.5), -0.2, 0.5));
  const auto b = spectrum(build_matrix(G, 1.0, 0.05, {0}, box1(-2.5, 2.5), -0.2, 0.5));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
}

TEST(EigenBandIo, JsonLinesRoundTrip) {
  const auto l = line_layout();
  const auto sp = build_matrix(model_pendulum1d(0.2, l), 1.0, 0.05, {0}, box1(-2.5, 2.5), -0.2, 0.1);
  const auto band = eigs_in_band(sp);
  std::stringstream ss;
  write_jsonl(ss, sp, band);
  const auto back = read_eigen_band(ss);
  EXPECT_EQ(back.dim, 1);
  EXPECT_EQ(back.hbar, 0.05);
  EXPECT_EQ(back.basis, sp.basis);
  ASSERT_EQ(back.band.pairs.size(), band.pairs.size());
  for (std::size_t k = 0; k < band.pairs.size(); ++k) {
    EXPECT_EQ(back.band.pairs[k].E, band.pairs[k].E);
    EXPECT_EQ((back.band.pairs[k].u - band.pairs[k].u).cwiseAbs().maxCoeff(), 0.0);
  }
  std::stringstream sparse;
  write_jsonl(sparse, sp, band, 1e-12);
  const auto thin = read_eigen_band(sparse);
  ASSERT_EQ(thin.band.pairs.size(), band.pairs.size());
  for (std::size_t k = 0; k < band.pairs.size(); ++k)
    EXPECT_LE((thin.band.pairs[k].u - band.pairs[k].u).cwiseAbs().maxCoeff(), 1e-12);
  std::stringstream bad("{\"record\":\"other\"}\n");
  EXPECT_THROW(read_eigen_band(bad), ConfigError);
}

}  // namespace
