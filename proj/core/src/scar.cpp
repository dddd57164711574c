#include "kamscar/scar.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "kamscar/errors.hpp"

namespace kamscar {

namespace {

// Integer offsets k != 0 with |k|_2 <= radius.
std::vector<IntVec> ball_offsets(int dim, double radius) {
  const int R = static_cast<int>(std::floor(radius + 1e-12));
  std::vector<IntVec> out;
  IntVec k(dim, -R);
  while (true) {
    double n2 = 0.0;
    bool zero = true;
    for (int v : k) {
      n2 += static_cast<double>(v) * v;
      zero = zero && v == 0;
    }
    if (!zero && std::sqrt(n2) <= radius + 1e-12) out.push_back(k);
    int j = dim - 1;
    while (j >= 0 && k[j] == R) k[j--] = -R;
    if (j < 0) break;
    ++k[j];
  }
  return out;
}

std::vector<IntVec> cube_offsets(int dim, int R) {
  std::vector<IntVec> out;
  for (const auto& k : ball_offsets(dim, R * std::sqrt(static_cast<double>(dim)))) {
    int w = 0;
    for (int v : k) w = std::max(w, std::abs(v));
    if (w <= R) out.push_back(k);
  }
  return out;
}

IntVec plus(const IntVec& a, const IntVec& b) {
  IntVec c(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) c[j] = a[j] + b[j];
  return c;
}

}  // namespace

LatticeEnergy lattice_energy(const TimePolynomial& K, double h, double t, const IntVec& maslov) {
  return [K, h, t, maslov](const IntVec& m) { return quasi_eigenvalue(K, m, h, t, maslov); };
}

TimedLatticeEnergy timed_lattice_energy(const TimePolynomial& K, double h, const IntVec& maslov) {
  return [K, h, maslov](const IntVec& m, double t) { return quasi_eigenvalue(K, m, h, t, maslov); };
}

double separation_radius(const ApproximationFunction& delta, double C1, double h) {
  const double y = C1 / std::sqrt(h);
  if (y <= delta(1.0)) return 1.0;
  return delta_inverse(delta, y);
}

SeparationReport separation_scan(const std::vector<IntVec>& indices, const LatticeEnergy& mu, double h,
                                 double radius, double C2) {
  SeparationReport rep;
  rep.radius = radius;
  rep.threshold = C2 * std::pow(h, 1.5);
  if (indices.empty()) return rep;
  const auto offsets = ball_offsets(static_cast<int>(indices.front().size()), radius);
  std::set<std::pair<IntVec, IntVec>> seen;
  for (const auto& m : indices) {
    const double a = mu(m);
    for (const auto& k : offsets) {
      const IntVec other = plus(m, k);
      const auto key = m < other ? std::make_pair(m, other) : std::make_pair(other, m);
      if (!seen.insert(key).second) continue;
      double b;
      try {
        b = mu(other);
      } catch (const OutOfBox&) {
        ++rep.skipped;
        continue;
      }
      ++rep.pairs;
      const double gap = std::abs(a - b);
      rep.min_separation = std::min(rep.min_separation, gap);
      if (gap < rep.threshold) rep.violations.push_back({m, other, gap, rep.threshold});
    }
  }
  return rep;
}

double calibrate_separation(const std::vector<IntVec>& indices, const LatticeEnergy& mu, double h, double radius) {
  const SeparationReport rep = separation_scan(indices, mu, h, radius, 0.0);
  if (rep.pairs == 0) throw DomainError("scar", "separation calibration found no lattice pairs");
  return 0.5 * rep.min_separation / std::pow(h, 1.5);
}

RealVec eta_map(const TimePolynomial& K, const RealVec& I, double t) {
  const int d = static_cast<int>(I.size());
  RealVec eta(d);
  TimePolynomial D = K;
  const RealVec theta(d, 0.0);
  for (int k = 0; k < d; ++k) {
    eta[k] = eval(D, theta, I, t);
    D = time_derivative(D);
  }
  return eta;
}

EtaCheck eta_map_check(const TimePolynomial& K, double t, const std::vector<RealVec>& grid, double step) {
  EtaCheck out;
  out.points = grid.size();
  std::vector<RealVec> etas;
  for (const auto& I : grid) {
    const int d = static_cast<int>(I.size());
    Eigen::MatrixXd J(d, d);
    for (int j = 0; j < d; ++j) {
      RealVec a = I, b = I;
      a[j] += step;
      b[j] -= step;
      const RealVec ea = eta_map(K, a, t), eb = eta_map(K, b, t);
      for (int k = 0; k < d; ++k) J(k, j) = (ea[k] - eb[k]) / (2.0 * step);
    }
    out.min_abs_det = std::min(out.min_abs_det, std::abs(J.determinant()));
    etas.push_back(eta_map(K, I, t));
  }
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      double dI = 0.0, dE = 0.0;
      for (std::size_t k = 0; k < grid[i].size(); ++k) {
        dI += std::pow(grid[i][k] - grid[j][k], 2);
        dE += std::pow(etas[i][k] - etas[j][k], 2);
      }
      dI = std::sqrt(dI);
      dE = std::sqrt(dE);
      if (dE == 0.0) {
        out.G2 = std::numeric_limits<double>::infinity();
        continue;
      }
      out.G1 = std::min(out.G1, dI / dE);
      out.G2 = std::max(out.G2, dI / dE);
    }
  return out;
}

double bad_t_fraction(const TimedLatticeEnergy& mu, const IntVec& m, int box_radius, double h, double gamma,
                      const std::vector<double>& t_grid) {
  const int d = static_cast<int>(m.size());
  if (!(gamma > 1.75 + 2.0 * d)) {
    std::ostringstream os;
    os << "gamma = " << gamma << " must exceed 7/4 + 2d = " << 1.75 + 2.0 * d;
    throw DomainError("scar", os.str());
  }
  if (t_grid.empty()) return 0.0;
  const auto offsets = cube_offsets(d, box_radius);
  const double thr = std::pow(h, gamma);
  std::size_t bad = 0;
  for (double t : t_grid) {
    const double a = mu(m, t);
    for (const auto& k : offsets) {
      double b;
      try {
        b = mu(plus(m, k), t);
      } catch (const OutOfBox&) {
        continue;
      }
      if (std::abs(a - b) < thr) {
        ++bad;
        break;
      }
    }
  }
  return static_cast<double>(bad) / static_cast<double>(t_grid.size());
}

IntervalSet::IntervalSet(std::vector<std::pair<double, double>> intervals) {
  std::sort(intervals.begin(), intervals.end());
  for (const auto& iv : intervals) {
    if (!(iv.second > iv.first)) continue;
    if (!intervals_.empty() && iv.first <= intervals_.back().second)
      intervals_.back().second = std::max(intervals_.back().second, iv.second);
    else
      intervals_.push_back(iv);
  }
}

double IntervalSet::measure() const {
  double s = 0.0;
  for (const auto& iv : intervals_) s += iv.second - iv.first;
  return s;
}

double IntervalSet::measure_in(double lo, double hi) const {
  double s = 0.0;
  for (const auto& iv : intervals_) s += std::max(0.0, std::min(hi, iv.second) - std::max(lo, iv.first));
  return s;
}

DensityCheck interval_density_check(const IntervalSet& A, double t0, double r) {
  if (!(t0 > 0.0) || !(r > 0.0)) throw DomainError("scar", "density check needs t0 > 0 and r > 0");
  std::vector<double> xs = {0.0, t0, r, t0 - r};
  for (const auto& iv : A.intervals())
    for (double e : {iv.first, iv.second}) {
      xs.push_back(e - r);
      xs.push_back(e + r);
    }
  DensityCheck out;
  out.measure = A.measure();
  for (double x : xs) {
    if (x < 0.0 || x > t0) continue;
    const double lo = std::max(0.0, x - r), hi = std::min(t0, x + r);
    out.density = std::max(out.density, A.measure_in(lo, hi) / (hi - lo));
  }
  out.bound = 2.0 * out.density * t0;
  out.holds = out.measure <= out.bound * (1.0 + 1e-12);
  return out;
}

IntervalSet random_interval_set(std::mt19937_64& rng, double t0, int pieces) {
  std::uniform_real_distribution<double> u(0.0, t0);
  std::vector<std::pair<double, double>> iv;
  for (int k = 0; k < pieces; ++k) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    iv.emplace_back(a, a + 0.1 * (b - a));
  }
  return IntervalSet(std::move(iv));
}

WindowStatistics window_statistics(const EigenBand& band, const QuasimodeSet& Q, double gamma, double lambda,
                                   double band_measure, double torus_measure) {
  if (!(lambda > 1.0)) throw DomainError("scar", "lambda must exceed 1");
  if (!(torus_measure > 0.0)) throw DomainError("scar", "torus measure must be positive");
  WindowStatistics st;
  st.occupancy_threshold = lambda * band_measure / torus_measure;
  st.good_bound = 1.0 - 2.0 / lambda;
  st.eigenvalues_in_band = static_cast<long>(band.pairs.size());
  std::vector<double> E;
  for (const auto& p : band.pairs) E.push_back(p.E);
  std::sort(E.begin(), E.end());
  const double w = std::pow(Q.h, gamma) / 3.0;
  for (const auto& m : Q.indices) {
    WindowReport r;
    r.m = m;
    r.mu = Q.mu.at(m);
    r.lo = r.mu - w;
    r.hi = r.mu + w;
    r.count = static_cast<int>(std::upper_bound(E.begin(), E.end(), r.hi) - std::lower_bound(E.begin(), E.end(), r.lo));
    r.lambda_good = r.count < st.occupancy_threshold;
    auto it = Q.residuals.find(m);
    if (it != Q.residuals.end()) r.quasimode_residual = it->second;
    st.reports.push_back(r);
  }
  std::vector<const WindowReport*> by_mu;
  for (const auto& r : st.reports) by_mu.push_back(&r);
  std::sort(by_mu.begin(), by_mu.end(), [](const WindowReport* a, const WindowReport* b) { return a->mu < b->mu; });
  for (std::size_t i = 1; i < by_mu.size(); ++i)
    if (by_mu[i]->lo <= by_mu[i - 1]->hi) {
      std::ostringstream os;
      os << "windows of quasi-eigenvalues " << by_mu[i - 1]->mu << " and " << by_mu[i]->mu << " overlap (width "
         << 2.0 * w << ")";
      throw WindowsOverlap(os.str());
    }
  std::size_t good = 0;
  for (const auto& r : st.reports) good += r.lambda_good;
  st.good_fraction = st.reports.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(st.reports.size());
  return st;
}

void overlap_scan(WindowStatistics& stats, const EigenBand& band, const QuasimodeSet& Q, const SpectralProblem& sp,
                  double delta) {
  for (auto& r : stats.reports) {
    const Eigen::VectorXcd& v = Q.vectors.at(r.m);
    const EigenPair* best = nullptr;
    r.best_overlap = 0.0;
    for (const auto& p : band.pairs) {
      if (p.E < r.lo || p.E > r.hi) continue;
      const double o = std::abs(p.u.dot(v));
      if (o > r.best_overlap || best == nullptr) {
        r.best_overlap = o;
        best = &p;
      }
    }
    r.projection_bound = 0.0;
    r.torus_mass = 0.0;
    if (best == nullptr) continue;
    r.best_energy = best->E;
    r.torus_mass = torus_mass(sp, best->u, sp.action(r.m), delta);
    if (r.count == 1) {
      double gap = std::min(r.mu - sp.band_lo, sp.band_hi - r.mu);
      for (const auto& p : band.pairs)
        if (&p != best) gap = std::min(gap, std::abs(p.E - r.mu));
      if (r.quasimode_residual < gap) r.projection_bound = std::sqrt(1.0 - std::pow(r.quasimode_residual / gap, 2));
    }
  }
}

double torus_mass(const SpectralProblem& sp, const Eigen::VectorXcd& u, const RealVec& I, double delta) {
  double mass = 0.0;
  for (std::size_t i = 0; i < sp.basis.size(); ++i) {
    const RealVec a = sp.action(sp.basis[i]);
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) d2 += std::pow(a[j] - I[j], 2);
    if (std::sqrt(d2) <= delta) mass += std::norm(u(static_cast<long>(i)));
  }
  return mass;
}

}  // namespace kamscar
