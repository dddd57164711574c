#include "kamscar/nonres.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>

#include "kamscar/errors.hpp"

namespace kamscar {

ApproximationFunction ApproximationFunction::power(double tau, double kappa, double sigma, int dim) {
  if (!(tau > dim - 1)) throw DomainError("nonres", "power approximation function needs tau > d - 1");
  ApproximationFunction f;
  f.kind_ = DeltaKind::Power;
  f.tau_ = tau;
  f.kappa_ = kappa;
  f.sigma_ = sigma;
  f.validate();
  return f;
}

ApproximationFunction ApproximationFunction::exp_power(double a, double b, double kappa, double sigma) {
  if (!(a > 0.0)) throw DomainError("nonres", "exp_power needs a > 0");
  if (!(b > 0.0 && b < 1.0)) throw DomainError("nonres", "exp_power needs 0 < b < 1");
  if (!(sigma > 1.0)) throw DomainError("nonres", "sigma must exceed 1");
  if (!(b < 1.0 / sigma)) throw DomainError("nonres", "exp_power needs b < 1/sigma for a finite Bruno integral");
  ApproximationFunction f;
  f.kind_ = DeltaKind::ExpPower;
  f.a_ = a;
  f.b_ = b;
  f.kappa_ = kappa;
  f.sigma_ = sigma;
  f.validate();
  return f;
}

double ApproximationFunction::log_value(double s) const {
  return kind_ == DeltaKind::Power ? tau_ * std::log(s) : a_ * std::pow(s, b_);
}

double ApproximationFunction::operator()(double s) const { return std::exp(log_value(s)); }

void ApproximationFunction::validate() const {
  if (!(kappa_ > 0.0)) throw DomainError("nonres", "kappa must be positive");
  if (!(sigma_ > 1.0)) throw DomainError("nonres", "sigma must exceed 1");
  // Strictly increasing on a log-spaced sample of [1, 1e6].
  double prev = log_value(1.0);
  for (int k = 1; k <= 240; ++k) {
    const double s = std::pow(10.0, 6.0 * k / 240.0);
    const double v = log_value(s);
    if (!(v > prev)) throw DomainError("nonres", "approximation function is not strictly increasing");
    prev = v;
  }
  // log Delta(s) / s^(1/sigma) decreasing on its tail.
  const double tail_start =
      kind_ == DeltaKind::Power ? std::max(varsigma(), std::exp(sigma_)) : varsigma();
  double prev_ratio = log_value(tail_start) / std::pow(tail_start, 1.0 / sigma_);
  for (int k = 1; k <= 240; ++k) {
    const double s = tail_start * std::pow(10.0, 6.0 * k / 240.0);
    const double r = log_value(s) / std::pow(s, 1.0 / sigma_);
    if (r > prev_ratio * (1.0 + 1e-12))
      throw DomainError("nonres", "log Delta(s)/s^(1/sigma) is not decreasing on the tail");
    prev_ratio = r;
  }
  if (!std::isfinite(bruno_integral())) throw DomainError("nonres", "Bruno integral diverges");
}

double ApproximationFunction::bruno_integral() const {
  // s = varsigma e^u turns the integrand into log Delta * varsigma^(-1/sigma) e^(-u/sigma).
  const double decay = kind_ == DeltaKind::Power ? 1.0 / sigma_ : 1.0 / sigma_ - b_;
  if (!(decay > 0.0)) return INFINITY;
  const double U = 40.0 / decay;
  const int n = 20000;
  const double du = U / n;
  const double vs = varsigma();
  // Integrand in u, written so that large u never overflows.
  auto integrand = [&](double u) {
    if (kind_ == DeltaKind::Power) return tau_ * (std::log(vs) + u) * std::pow(vs, -1.0 / sigma_) * std::exp(-u / sigma_);
    return a_ * std::pow(vs, b_ - 1.0 / sigma_) * std::exp(-decay * u);
  };
  double total = integrand(0.0) + integrand(U);
  for (int k = 1; k < n; ++k) total += (k % 2 ? 4.0 : 2.0) * integrand(k * du);
  return total * du / 3.0;
}

std::string ApproximationFunction::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == DeltaKind::Power)
    os << "power(tau=" << tau_;
  else
    os << "exp_power(a=" << a_ << ",b=" << b_;
  os << ",kappa=" << kappa_ << ",sigma=" << sigma_ << ")";
  return os.str();
}

double delta_inverse(const ApproximationFunction& delta, double y) {
  const double y0 = delta(1.0);
  if (!(y >= y0)) throw DomainError("nonres", "delta_inverse: y below Delta(1)");
  double lo = 1.0, hi = 2.0;
  while (delta(hi) < y) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("nonres", "delta_inverse: y too large");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double v = delta(mid);
    if (std::abs(v - y) <= 1e-12 * y) return mid;
    if (v < y)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-16 * hi) break;
  }
  return 0.5 * (lo + hi);
}

const std::vector<IntVec>& half_lattice_modes(int dim, int k_max) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::vector<IntVec>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, k_max);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<IntVec> modes;
  IntVec g(dim, -k_max);
  const int w = 2 * k_max + 1;
  std::size_t total = 1;
  for (int j = 0; j < dim; ++j) total *= static_cast<std::size_t>(w);
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    int norm = 0;
    for (int j = 0; j < dim; ++j) {
      g[j] = static_cast<int>(c % w) - k_max;
      c /= w;
      norm += std::abs(g[j]);
    }
    if (norm == 0 || norm > k_max) continue;
    // Keep the representative whose last nonzero entry is positive.
    int last = dim - 1;
    while (g[last] == 0) --last;
    if (g[last] > 0) modes.push_back(g);
  }
  std::stable_sort(modes.begin(), modes.end(), [](const IntVec& x, const IntVec& y) {
    int nx = 0, ny = 0;
    for (int v : x) nx += std::abs(v);
    for (int v : y) ny += std::abs(v);
    if (nx != ny) return nx < ny;
    return x < y;
  });
  return cache.emplace(key, std::move(modes)).first->second;
}

namespace {

struct ModeTable {
  const std::vector<IntVec>* modes;
  std::vector<double> weight;  // Delta(|gamma|_1) / kappa
};

ModeTable mode_table(int dim, const ApproximationFunction& delta, int k_test) {
  ModeTable t{&half_lattice_modes(dim, k_test), {}};
  std::vector<double> by_norm(k_test + 1);
  for (int n = 1; n <= k_test; ++n) by_norm[n] = delta(n) / delta.kappa();
  for (const auto& g : *t.modes) {
    int n = 0;
    for (int v : g) n += std::abs(v);
    t.weight.push_back(by_norm[n]);
  }
  return t;
}

FrequencySample check_with(const RealVec& omega, const ModeTable& t, int k_test) {
  FrequencySample out;
  out.omega = omega;
  out.k_test = k_test;
  out.margin = INFINITY;
  const auto& modes = *t.modes;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < omega.size(); ++j) dot += omega[j] * modes[i][j];
    const double m = std::abs(dot) * t.weight[i];
    if (m < out.margin) {
      out.margin = m;
      out.worst_mode = modes[i];
    }
  }
  return out;
}

}  // namespace

FrequencySample check_frequency(const RealVec& omega, const ApproximationFunction& delta, int k_test) {
  if (k_test < 1) throw DomainError("nonres", "check_frequency needs k_test >= 1");
  const int d = static_cast<int>(omega.size());
  return check_with(omega, mode_table(d, delta, k_test), k_test);
}

double ActionBox::volume() const {
  double v = 1.0;
  for (std::size_t j = 0; j < lo.size(); ++j) v *= hi[j] - lo[j];
  return v;
}

bool ActionBox::contains(const RealVec& I, double slack) const {
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (I[j] < lo[j] - slack || I[j] > hi[j] + slack) return false;
  return true;
}

std::vector<RealVec> box_grid(const ActionBox& box, int n) {
  const int d = box.dim();
  std::size_t total = 1;
  for (int j = 0; j < d; ++j) total *= static_cast<std::size_t>(n);
  std::vector<RealVec> pts;
  pts.reserve(total);
  for (std::size_t c = 0; c < total; ++c) {
    RealVec I(d);
    std::size_t x = c;
    for (int j = d - 1; j >= 0; --j) {
      const double step = (box.hi[j] - box.lo[j]) / n;
      I[j] = box.lo[j] + (static_cast<double>(x % n) + 0.5) * step;
      x /= n;
    }
    pts.push_back(std::move(I));
  }
  return pts;
}

ResonantZone resonant_zone_actions(const FrequencyMap& omega_map, const ActionBox& box,
                                   const ApproximationFunction& delta, int k_test, int grid_n) {
  if (grid_n < 1) throw DomainError("nonres", "grid_n must be >= 1");
  if (k_test < 1) throw DomainError("nonres", "k_test must be >= 1");
  ResonantZone z;
  z.grid_n = grid_n;
  z.k_test = k_test;
  z.cell_volume = box.volume() / std::pow(static_cast<double>(grid_n), box.dim());
  const ModeTable t = mode_table(box.dim(), delta, k_test);
  for (const auto& I : box_grid(box, grid_n)) {
    ++z.tested;
    if (check_with(omega_map(I), t, k_test).passed()) z.points.push_back(I);
  }
  z.fraction = z.tested ? static_cast<double>(z.points.size()) / z.tested : 0.0;
  return z;
}

}  // namespace kamscar
