#pragma once

#include <vector>

#include "kamscar/time_polynomial.hpp"

namespace kamscar {

// 1/2 I^2 + t eps cos(theta) on T^1.
TimePolynomial model_pendulum1d(double eps, const SeriesLayout& layout, double t_max = 1.0);

enum class ActionProfile {
  // g(I) = sum_j I_j^n
  PowerSum,
  // g(I) = |I|^n
  Radial,
};

// 1/2 |I|^2 + sum_{i=1}^{d-1} t^i f_i(theta) g_i(I) with g_i the profile of
// degree i + 2, Taylor-expanded around the base point to k_action. Each f_i
// must be angle-only with nonzero mean; pass amplitudes.size() == d - 1.
TimePolynomial model_example5(const std::vector<Series>& amplitudes, const SeriesLayout& layout,
                              double t_max = 1.0, ActionProfile profile = ActionProfile::PowerSum);

Series action_profile(const SeriesLayout& layout, int n, ActionProfile profile);

// sum_j I_j^n as a Taylor polynomial around the base point of `layout`.
Series power_sum(const SeriesLayout& layout, int n);

// |I|^n as a Taylor polynomial around the base point of `layout`.
Series radial_power(const SeriesLayout& layout, double n);

// (2 pi)^-d integral of an angle-only series.
double angle_mean(const Series& f);

}  // namespace kamscar
