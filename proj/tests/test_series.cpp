#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kamscar/errors.hpp"
#include "kamscar/series.hpp"
#include "support.hpp"

namespace {

using namespace kamscar;
using kamscar::testing::angle_grid;
using kamscar::testing::layout;
using kamscar::testing::random_series;

Series cos_theta1(const SeriesLayout& l) {
  Series s(l);
  IntVec g(l.dim, 0);
  g[0] = 1;
  s.set(g, IntVec(l.dim, 0), 0.5);
  return s;
}

Series half_norm_squared(const SeriesLayout& l) {
  // 0.5 |I|^2 expanded around the base point.
  Series s(l);
  const IntVec zero(l.dim, 0);
  double c0 = 0.0;
  for (int j = 0; j < l.dim; ++j) {
    c0 += 0.5 * l.base_point[j] * l.base_point[j];
    IntVec a(l.dim, 0);
    a[j] = 1;
    s.set(zero, a, l.base_point[j]);
    a[j] = 2;
    s.set(zero, a, 0.5);
  }
  s.set(zero, zero, c0);
  return s;
}

TEST(SeriesEval, ZeroSeriesIsZero) {
  Series s(layout(2, 3, 2));
  EXPECT_EQ(eval(s, {0.3, 1.2}, {0.1, -0.2}), 0.0);
}

TEST(SeriesEval, CosineAtOrigin) {
  Series s = cos_theta1(layout(2, 3, 2));
  EXPECT_NEAR(eval(s, {0.0, 0.0}, {0.5, 0.5}), 1.0, 1e-15);
}

TEST(SeriesEval, HalfNormSquared) {
  Series s = half_norm_squared(layout(2, 0, 2));
  EXPECT_NEAR(eval(s, {0.7, 2.0}, {0.3, 0.4}), 0.125, 1e-15);
}

TEST(SeriesEval, RejectsActionOutsideBox) {
  Series s = half_norm_squared(layout(2, 0, 2, 0.0, 0.5));
  EXPECT_THROW(eval(s, {0.0, 0.0}, {0.6, 0.0}), OutOfBox);
}

TEST(SeriesEval, ImaginaryPartVanishes) {
  std::mt19937_64 rng(11);
  auto l = layout(2, 5, 3, 0.2, 0.5);
  Series s = random_series(l, 20, 5, 3, rng);
  const Complex z = eval_complex(s, {0.4, 2.9}, {0.3, 0.1});
  EXPECT_LE(std::abs(z.imag()), 1e-10 * abs_sum(s));
}

TEST(SeriesAverage, ZeroMeanMode) {
  auto l = layout(1, 2, 2);
  Series s(l);
  s.set({1}, {1}, 0.5);
  EXPECT_TRUE(angle_average(s).is_zero());
}

TEST(SeriesAverage, ConstantPlusCosine) {
  auto l = layout(1, 2, 0);
  Series s = add(constant(l, 3.0), cos_theta1(l));
  Series avg = angle_average(s);
  EXPECT_TRUE(avg.is_angle_free());
  EXPECT_NEAR(eval(avg, {1.0}, {0.0}), 3.0, 1e-15);
}

TEST(SeriesAverage, MatchesGridQuadrature) {
  std::mt19937_64 rng(12);
  auto l = layout(2, 4, 2, 0.5, 0.5);
  Series s = random_series(l, 30, 4, 2, rng);
  Series avg = angle_average(s);
  const RealVec I{0.7, 0.4};
  double quad = 0.0;
  const auto grid = angle_grid(2, 16);
  for (const auto& th : grid) quad += eval(s, th, I);
  quad /= grid.size();
  EXPECT_NEAR(eval(avg, {0.0, 0.0}, I), quad, 1e-13);
}

TEST(SeriesMultiply, ByZero) {
  std::mt19937_64 rng(1);
  auto l = layout(2, 4, 2);
  Series a = random_series(l, 5, 2, 1, rng);
  EXPECT_TRUE(multiply(a, Series(l)).is_zero());
}

TEST(SeriesMultiply, ProductToSum) {
  auto l = layout(1, 4, 0);
  Series c = cos_theta1(l);
  Series p = multiply(c, c);
  EXPECT_NEAR(p.coeff({0}, {0}).real(), 0.5, 1e-16);
  EXPECT_NEAR(p.coeff({2}, {0}).real(), 0.25, 1e-16);
  EXPECT_NEAR(p.coeff({-2}, {0}).real(), 0.25, 1e-16);
  EXPECT_EQ(p.coeff({1}, {0}), Complex(0.0, 0.0));
}

TEST(SeriesMultiply, RandomPairMatchesGrid) {
  std::mt19937_64 rng(2);
  auto l = layout(2, 8, 4, 0.0, 0.5);
  Series a = random_series(l, 5, 4, 2, rng);
  Series b = random_series(l, 5, 4, 2, rng);
  Series p = multiply(a, b);
  EXPECT_TRUE(p.is_real_symmetric());
  const RealVec I{0.2, -0.3};
  for (const auto& th : angle_grid(2, 16)) {
    const double direct = eval(a, th, I) * eval(b, th, I);
    EXPECT_NEAR(eval(p, th, I), direct, 1e-10);
  }
}

TEST(SeriesMultiply, Bilinear) {
  std::mt19937_64 rng(3);
  auto l = layout(2, 6, 3);
  Series a = random_series(l, 6, 3, 2, rng);
  Series b = random_series(l, 6, 3, 2, rng);
  Series c = random_series(l, 6, 3, 2, rng);
  const double x = 0.7, y = -1.3;
  Series lhs = multiply(axpy(x, a, scale(b, y)), c);
  Series rhs = add(scale(multiply(a, c), x), scale(multiply(b, c), y));
  EXPECT_LE(sub(lhs, rhs).max_abs(), 1e-13);
}

TEST(SeriesMultiply, TruncationMonotone) {
  std::mt19937_64 rng(4);
  auto small = layout(2, 6, 4);
  Series a = random_series(small, 5, 2, 2, rng);
  Series b = random_series(small, 5, 2, 2, rng);
  Series p = multiply(a, b);
  Series big = multiply(retruncate(a, 8, 6), retruncate(b, 8, 6));
  for (std::size_t m = 0; m < p.mode_count(); ++m)
    for (std::size_t i = 0; i < p.action_count(); ++i)
      EXPECT_EQ(p.at(m, i), big.coeff(p.mode(m), p.actions()[i]));
}

TEST(SeriesDerivative, AngleOfCosine) {
  auto l = layout(1, 2, 0);
  Series d = partial_angle(cos_theta1(l), 0);
  EXPECT_NEAR(eval(d, {0.4}, {0.0}), -std::sin(0.4), 1e-15);
}

TEST(SeriesDerivative, ActionOfHalfNorm) {
  auto l = layout(2, 0, 2, 0.3, 1.0);
  Series d = partial_action(half_norm_squared(l), 0);
  EXPECT_NEAR(eval(d, {0.0, 0.0}, {0.9, 0.1}), 0.9, 1e-15);
}

TEST(SeriesDerivative, CentralDifference) {
  std::mt19937_64 rng(5);
  auto l = layout(2, 5, 4, 0.1, 1.0);
  Series s = random_series(l, 25, 5, 4, rng);
  const RealVec th{0.8, 2.1};
  const RealVec I{0.3, -0.2};
  const double step = 1e-5;
  for (int j = 0; j < 2; ++j) {
    RealVec tp = th, tm = th, ip = I, im = I;
    tp[j] += step;
    tm[j] -= step;
    ip[j] += step;
    im[j] -= step;
    const double fd_angle = (eval(s, tp, I) - eval(s, tm, I)) / (2 * step);
    const double fd_action = (eval(s, th, ip) - eval(s, th, im)) / (2 * step);
    const double an_angle = eval(partial_angle(s, j), th, I);
    const double an_action = eval(partial_action(s, j), th, I);
    EXPECT_NEAR(an_angle, fd_angle, 1e-6 * std::max(1.0, std::abs(an_angle)));
    EXPECT_NEAR(an_action, fd_action, 1e-6 * std::max(1.0, std::abs(an_action)));
  }
}

TEST(SeriesDerivative, Linear) {
  std::mt19937_64 rng(6);
  auto l = layout(2, 4, 3);
  Series a = random_series(l, 8, 4, 3, rng);
  Series b = random_series(l, 8, 4, 3, rng);
  for (Variable v : {Variable{VarKind::Angle, 1}, Variable{VarKind::Action, 0}}) {
    Series lhs = partial_derivative(axpy(2.5, a, b), v);
    Series rhs = axpy(2.5, partial_derivative(a, v), partial_derivative(b, v));
    EXPECT_LE(sub(lhs, rhs).max_abs(), 1e-14);
    EXPECT_TRUE(lhs.is_real_symmetric());
  }
}

TEST(SeriesCompose, IdentityShift) {
  std::mt19937_64 rng(7);
  auto l = layout(2, 4, 3);
  Series s = random_series(l, 10, 3, 3, rng);
  Series r = compose_near_identity(s, {Series(l), Series(l)}, {Series(l), Series(l)});
  EXPECT_EQ(sub(r, s).max_abs(), 0.0);
}

TEST(SeriesCompose, LinearCaseExact) {
  auto l = layout(2, 3, 2);
  Series s(l);
  s.set({0, 0}, {1, 0}, 1.0);
  s.set({0, 0}, {0, 0}, l.base_point[0]);
  Series xi0 = scale(cos_theta1(l), 2.0 * 0.01);
  Series r = compose_near_identity(s, {xi0, Series(l)}, {});
  Series expect = add(s, xi0);
  EXPECT_LE(sub(r, expect).max_abs(), 1e-16);
}

// Direct s(I + xi, theta + lambda) against the composed series; the error
// should scale like eps^(k_action + 1).
double compose_error(const Series& s, const Series& xi0, const Series& xi1, const Series& l0, const Series& l1,
                     double eps) {
  const auto& l = s.layout();
  Series c = compose_near_identity(s, {scale(xi0, eps), scale(xi1, eps)}, {scale(l0, eps), scale(l1, eps)});
  double err = 0.0;
  const RealVec I{0.1, -0.05};
  for (const auto& th : angle_grid(2, 8)) {
    RealVec Is{I[0] + eps * eval(xi0, th, I), I[1] + eps * eval(xi1, th, I)};
    RealVec ts{th[0] + eps * eval(l0, th, I), th[1] + eps * eval(l1, th, I)};
    err = std::max(err, std::abs(eval(c, th, I) - eval(s, ts, Is)));
  }
  (void)l;
  return err;
}

TEST(SeriesCompose, RichardsonOrder) {
  std::mt19937_64 rng(8);
  auto l = layout(2, 8, 4, 0.0, 1.0);
  Series s = random_series(l, 8, 3, 3, rng);
  Series xi0 = random_series(l, 3, 1, 1, rng, 0.3);
  Series xi1 = random_series(l, 3, 1, 1, rng, 0.3);
  Series l0 = random_series(l, 3, 1, 0, rng, 0.3);
  Series l1 = random_series(l, 3, 1, 0, rng, 0.3);
  const double e1 = compose_error(s, xi0, xi1, l0, l1, 0.04);
  const double e2 = compose_error(s, xi0, xi1, l0, l1, 0.02);
  const double order = std::log2(e1 / e2);
  EXPECT_GT(order, l.k_action + 0.5);
  EXPECT_LT(order, l.k_action + 1.5);
}

TEST(SeriesCompose, RejectsLargeActionShift) {
  auto l = layout(1, 2, 2, 0.0, 0.2);
  Series s = constant(l, 1.0);
  Series big = constant(l, 0.15);
  EXPECT_THROW(compose_near_identity(s, {big}, {}), OutOfBox);
}

TEST(SeriesRebase, PolynomialIsExact) {
  std::mt19937_64 rng(9);
  auto l = layout(2, 3, 4, 0.0, 1.0);
  Series s = random_series(l, 20, 3, 4, rng);
  Series r = rebase(s, {0.3, -0.2});
  for (const auto& th : angle_grid(2, 5)) EXPECT_NEAR(eval(r, th, {0.5, 0.1}), eval(s, th, {0.5, 0.1}), 1e-12);
}

TEST(SeriesGevrey, SubadditiveUnderAddition) {
  std::mt19937_64 rng(10);
  auto l = layout(2, 6, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Series a = random_series(l, 10, 6, 3, rng);
    Series b = random_series(l, 10, 6, 3, rng);
    const double na = gevrey_profile(a, 2.0, 2.0, 2.0, 1.0, 1.0).norm_estimate;
    const double nb = gevrey_profile(b, 2.0, 2.0, 2.0, 1.0, 1.0).norm_estimate;
    const double nab = gevrey_profile(add(a, b), 2.0, 2.0, 2.0, 1.0, 1.0).norm_estimate;
    EXPECT_LE(nab, na + nb + 1e-14);
  }
}

TEST(SeriesGevrey, ConstantSeriesNormIsValue) {
  auto l = layout(1, 2, 2);
  EXPECT_DOUBLE_EQ(gevrey_profile(constant(l, -2.5), 1.5, 1.5, 1.5, 1.0, 1.0).norm_estimate, 2.5);
}

TEST(SeriesIo, ExactRoundTrip) {
  std::mt19937_64 rng(13);
  auto l = layout(2, 4, 3, 0.123456789, 0.7);
  Series s = random_series(l, 30, 4, 3, rng);
  std::stringstream buf;
  write_jsonl(buf, s);
  Series r = read_jsonl(buf);
  EXPECT_EQ(r.layout(), s.layout());
  EXPECT_EQ(r.data(), s.data());
}

TEST(SeriesIo, RejectsBrokenReality) {
  std::stringstream buf;
  buf << R"({"record":"fourier_taylor","dim":1,"base_point":[0.0],"k_angle":1,"k_action":0,"radius":[1.0]})" << '\n'
      << R"({"g":[1],"a":[0],"re":1.0,"im":0.0})" << '\n'
      << R"({"record":"end"})" << '\n';
  EXPECT_THROW(read_jsonl(buf), ConfigError);
}

}  // namespace
