#include "kamscar/series.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <tuple>

#include "compose_impl.hpp"
#include "kamscar/errors.hpp"

namespace kamscar {

MultiIndexSet::MultiIndexSet(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1 || order < 0) throw DomainError("series", "multi-index set needs dim >= 1, order >= 0");
  std::size_t box = 1;
  for (int j = 0; j < dim; ++j) box *= static_cast<std::size_t>(order + 1);
  std::vector<IntVec> all;
  for (std::size_t code = 0; code < box; ++code) {
    IntVec a(dim);
    std::size_t c = code;
    int deg = 0;
    for (int j = 0; j < dim; ++j) {
      a[j] = static_cast<int>(c % (order + 1));
      c /= (order + 1);
      deg += a[j];
    }
    if (deg <= order) all.push_back(a);
  }
  std::stable_sort(all.begin(), all.end(), [](const IntVec& x, const IntVec& y) {
    int dx = 0, dy = 0;
    for (int v : x) dx += v;
    for (int v : y) dy += v;
    if (dx != dy) return dx < dy;
    return std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end());
  });
  items_ = std::move(all);
  lookup_.assign(box, -1);
  for (std::size_t i = 0; i < items_.size(); ++i) {
    std::size_t code = 0, mul = 1;
    int deg = 0;
    for (int j = 0; j < dim; ++j) {
      code += items_[i][j] * mul;
      mul *= (order + 1);
      deg += items_[i][j];
    }
    lookup_[code] = static_cast<int>(i);
    degree_.push_back(deg);
  }
  const std::size_t n = items_.size();
  sum_.assign(n * n, -1);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (degree_[i] + degree_[j] > order) continue;
      IntVec s(dim);
      for (int k = 0; k < dim; ++k) s[k] = items_[i][k] + items_[j][k];
      sum_[i * n + j] = find(s);
    }
  lower_.assign(n * dim, -1);
  raise_.assign(n * dim, -1);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) {
      IntVec a = items_[i];
      if (a[k] > 0) {
        --a[k];
        lower_[i * dim + k] = find(a);
        ++a[k];
      }
      ++a[k];
      raise_[i * dim + k] = find(a);
    }
}

int MultiIndexSet::find(const IntVec& a) const {
  if (static_cast<int>(a.size()) != dim_) return -1;
  std::size_t code = 0, mul = 1;
  int deg = 0;
  for (int j = 0; j < dim_; ++j) {
    if (a[j] < 0 || a[j] > order_) return -1;
    code += a[j] * mul;
    mul *= (order_ + 1);
    deg += a[j];
  }
  if (deg > order_) return -1;
  return lookup_[code];
}

std::shared_ptr<const MultiIndexSet> multi_indices(int dim, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MultiIndexSet>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(dim, order);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto set = std::make_shared<const MultiIndexSet>(dim, order);
  cache.emplace(key, set);
  return set;
}

bool SeriesLayout::operator==(const SeriesLayout& o) const {
  return dim == o.dim && k_angle == o.k_angle && k_action == o.k_action && base_point == o.base_point &&
         radius == o.radius;
}

namespace {

void check_layout(const SeriesLayout& l) {
  if (l.dim < 1) throw DomainError("series", "dim must be >= 1");
  if (static_cast<int>(l.base_point.size()) != l.dim || static_cast<int>(l.radius.size()) != l.dim)
    throw DomainError("series", "base_point and radius must have dim entries");
  if (l.k_angle < 0 || l.k_action < 0) throw DomainError("series", "truncations must be >= 0");
  for (double r : l.radius)
    if (!(r > 0.0)) throw DomainError("series", "action box radius must be positive");
}

void require_compatible(const Series& a, const Series& b, const char* op) {
  if (a.layout() != b.layout())
    throw DomainError("series", std::string(op) + ": operands have different layouts");
}

}  // namespace

FourierTaylorSeries::FourierTaylorSeries() : FourierTaylorSeries(SeriesLayout{}) {}

FourierTaylorSeries::FourierTaylorSeries(const SeriesLayout& layout) : layout_(layout) {
  check_layout(layout_);
  actions_ = multi_indices(layout_.dim, layout_.k_action);
  n_modes_ = 1;
  for (int j = 0; j < layout_.dim; ++j) n_modes_ *= static_cast<std::size_t>(2 * layout_.k_angle + 1);
  data_.assign(n_modes_ * actions_->size(), Complex(0.0, 0.0));
}

IntVec FourierTaylorSeries::mode(std::size_t index) const {
  const int w = 2 * layout_.k_angle + 1;
  IntVec g(layout_.dim);
  for (int j = 0; j < layout_.dim; ++j) {
    g[j] = static_cast<int>(index % w) - layout_.k_angle;
    index /= w;
  }
  return g;
}

long FourierTaylorSeries::mode_index(const IntVec& gamma) const {
  if (static_cast<int>(gamma.size()) != layout_.dim) return -1;
  const long w = 2 * layout_.k_angle + 1;
  long idx = 0, mul = 1;
  for (int j = 0; j < layout_.dim; ++j) {
    if (std::abs(gamma[j]) > layout_.k_angle) return -1;
    idx += (gamma[j] + layout_.k_angle) * mul;
    mul *= w;
  }
  return idx;
}

Complex FourierTaylorSeries::coeff(const IntVec& gamma, const IntVec& alpha) const {
  long m = mode_index(gamma);
  int a = actions_->find(alpha);
  if (m < 0 || a < 0) return {0.0, 0.0};
  return at(static_cast<std::size_t>(m), static_cast<std::size_t>(a));
}

void FourierTaylorSeries::set(const IntVec& gamma, const IntVec& alpha, Complex c) {
  long m = mode_index(gamma);
  int a = actions_->find(alpha);
  if (m < 0 || a < 0) throw DomainError("series", "coefficient index outside truncation");
  set_at(static_cast<std::size_t>(m), static_cast<std::size_t>(a), c);
}

void FourierTaylorSeries::set_at(std::size_t mode, std::size_t action, Complex c) {
  const std::size_t na = action_count();
  if (mode == zero_mode()) {
    data_[mode * na + action] = Complex(c.real(), 0.0);
    return;
  }
  data_[mode * na + action] = c;
  data_[mirror(mode) * na + action] = std::conj(c);
}

void FourierTaylorSeries::add_at(std::size_t mode, std::size_t action, Complex c) {
  set_at(mode, action, at(mode, action) + c);
}

void FourierTaylorSeries::mirror_from_upper_half() {
  const std::size_t na = action_count();
  const std::size_t z = zero_mode();
  for (std::size_t a = 0; a < na; ++a) data_[z * na + a] = Complex(data_[z * na + a].real(), 0.0);
  for (std::size_t m = z + 1; m < n_modes_; ++m)
    for (std::size_t a = 0; a < na; ++a) data_[mirror(m) * na + a] = std::conj(data_[m * na + a]);
}

bool FourierTaylorSeries::is_zero() const {
  for (const auto& c : data_)
    if (c.real() != 0.0 || c.imag() != 0.0) return false;
  return true;
}

double FourierTaylorSeries::max_abs() const {
  double m = 0.0;
  for (const auto& c : data_) m = std::max(m, std::abs(c));
  return m;
}

bool FourierTaylorSeries::is_real_symmetric() const {
  const std::size_t na = action_count();
  for (std::size_t m = 0; m < n_modes_; ++m)
    for (std::size_t a = 0; a < na; ++a)
      if (data_[m * na + a] != std::conj(data_[mirror(m) * na + a])) return false;
  return true;
}

bool FourierTaylorSeries::is_angle_free() const {
  const std::size_t na = action_count();
  for (std::size_t m = 0; m < n_modes_; ++m) {
    if (m == zero_mode()) continue;
    for (std::size_t a = 0; a < na; ++a)
      if (data_[m * na + a] != Complex(0.0, 0.0)) return false;
  }
  return true;
}

bool in_box(const Series& s, const RealVec& action, double slack) {
  if (static_cast<int>(action.size()) != s.dim()) return false;
  for (int j = 0; j < s.dim(); ++j)
    if (std::abs(action[j] - s.base_point()[j]) > s.radius()[j] * (1.0 + slack) + slack) return false;
  return true;
}

Complex eval_complex(const Series& s, const RealVec& theta, const RealVec& action) {
  const int d = s.dim();
  if (static_cast<int>(theta.size()) != d) throw DomainError("series", "eval: theta has wrong dimension");
  if (!in_box(s, action)) throw OutOfBox("series", "eval: action outside the Taylor validity box");
  const int K = s.k_angle();
  const int w = 2 * K + 1;
  std::vector<Complex> phase(static_cast<std::size_t>(d) * w);
  for (int j = 0; j < d; ++j)
    for (int k = -K; k <= K; ++k) phase[j * w + k + K] = std::polar(1.0, k * theta[j]);
  const MultiIndexSet& A = s.actions();
  std::vector<double> mono(A.size());
  for (std::size_t a = 0; a < A.size(); ++a) {
    double v = 1.0;
    for (int j = 0; j < d; ++j) v *= std::pow(action[j] - s.base_point()[j], A[a][j]);
    mono[a] = v;
  }
  Complex total(0.0, 0.0);
  const std::size_t na = A.size();
  for (std::size_t m = 0; m < s.mode_count(); ++m) {
    Complex inner(0.0, 0.0);
    bool any = false;
    for (std::size_t a = 0; a < na; ++a) {
      const Complex c = s.at(m, a);
      if (c.real() == 0.0 && c.imag() == 0.0) continue;
      inner += c * mono[a];
      any = true;
    }
    if (!any) continue;
    std::size_t idx = m;
    Complex e(1.0, 0.0);
    for (int j = 0; j < d; ++j) {
      e *= phase[j * w + static_cast<int>(idx % w)];
      idx /= w;
    }
    total += inner * e;
  }
  return total;
}

double eval(const Series& s, const RealVec& theta, const RealVec& action) {
  return eval_complex(s, theta, action).real();
}

Series zero_like(const Series& s) { return Series(s.layout()); }

Series constant(const SeriesLayout& layout, double value) {
  Series s(layout);
  s.set_at(s.zero_mode(), 0, value);
  return s;
}

Series angle_average(const Series& s) {
  Series r(s.layout());
  const std::size_t z = s.zero_mode();
  for (std::size_t a = 0; a < s.action_count(); ++a) r.set_at(z, a, s.at(z, a));
  return r;
}

Series angle_part(const Series& s) {
  Series r = s;
  const std::size_t z = s.zero_mode();
  for (std::size_t a = 0; a < s.action_count(); ++a) r.set_at(z, a, 0.0);
  return r;
}

Series add(const Series& a, const Series& b) {
  require_compatible(a, b, "add");
  Series r = a;
  auto& d = r.mutable_data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += bd[i];
  return r;
}

Series sub(const Series& a, const Series& b) {
  require_compatible(a, b, "sub");
  Series r = a;
  auto& d = r.mutable_data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= bd[i];
  return r;
}

Series scale(const Series& a, double c) {
  Series r = a;
  for (auto& v : r.mutable_data()) v *= c;
  return r;
}

Series axpy(double c, const Series& x, const Series& y) {
  require_compatible(x, y, "axpy");
  Series r = y;
  auto& d = r.mutable_data();
  const auto& xd = x.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += c * xd[i];
  return r;
}

Series multiply(const Series& a, const Series& b) {
  require_compatible(a, b, "multiply");
  Series r(a.layout());
  const std::size_t na = a.action_count();
  const MultiIndexSet& A = a.actions();
  const int d = a.dim();
  const long w = 2 * a.k_angle() + 1;
  const long K = a.k_angle();

  struct Row {
    std::size_t mode;
    IntVec gamma;
    std::vector<std::size_t> nz;
  };
  auto rows_of = [&](const Series& s) {
    std::vector<Row> rows;
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
      Row row{m, {}, {}};
      for (std::size_t i = 0; i < na; ++i)
        if (s.at(m, i) != Complex(0.0, 0.0)) row.nz.push_back(i);
      if (!row.nz.empty()) {
        row.gamma = s.mode(m);
        rows.push_back(std::move(row));
      }
    }
    return rows;
  };
  const auto ra = rows_of(a);
  const auto rb = rows_of(b);
  const std::size_t z = r.zero_mode();
  auto& out = r.mutable_data();
  for (const auto& x : ra)
    for (const auto& y : rb) {
      long idx = 0, mul = 1;
      bool ok = true;
      for (int j = 0; j < d; ++j) {
        long g = x.gamma[j] + y.gamma[j];
        if (g > K || g < -K) {
          ok = false;
          break;
        }
        idx += (g + K) * mul;
        mul *= w;
      }
      if (!ok || static_cast<std::size_t>(idx) < z) continue;
      Complex* dst = &out[static_cast<std::size_t>(idx) * na];
      for (std::size_t i : x.nz) {
        const Complex ci = a.at(x.mode, i);
        for (std::size_t j : y.nz) {
          int s = A.sum(i, j);
          if (s >= 0) dst[s] += ci * b.at(y.mode, j);
        }
      }
    }
  r.mirror_from_upper_half();
  return r;
}

Series partial_angle(const Series& s, int j) {
  if (j < 0 || j >= s.dim()) throw DomainError("series", "angle index out of range");
  Series r(s.layout());
  const std::size_t na = s.action_count();
  for (std::size_t m = 0; m < s.mode_count(); ++m) {
    const int g = s.mode(m)[j];
    if (g == 0) continue;
    for (std::size_t a = 0; a < na; ++a)
      r.mutable_data()[m * na + a] = Complex(0.0, static_cast<double>(g)) * s.at(m, a);
  }
  return r;
}

Series partial_action(const Series& s, int j) {
  if (j < 0 || j >= s.dim()) throw DomainError("series", "action index out of range");
  Series r(s.layout());
  const std::size_t na = s.action_count();
  const MultiIndexSet& A = s.actions();
  for (std::size_t a = 0; a < na; ++a) {
    const int lo = A.lower(a, j);
    if (lo < 0) continue;
    const double f = A[a][j];
    for (std::size_t m = 0; m < s.mode_count(); ++m)
      r.mutable_data()[m * na + static_cast<std::size_t>(lo)] = f * s.at(m, a);
  }
  return r;
}

Series partial_derivative(const Series& s, Variable which) {
  return which.kind == VarKind::Angle ? partial_angle(s, which.index) : partial_action(s, which.index);
}

namespace {

struct SeriesOps {
  Series zero_like(const Series& s) const { return kamscar::zero_like(s); }
  bool is_zero(const Series& s) const { return s.is_zero(); }
  Series deriv(const Series& s, Variable v) const { return partial_derivative(s, v); }
  Series mul(const Series& a, const Series& b) const { return multiply(a, b); }
  Series scale(const Series& a, double c) const { return kamscar::scale(a, c); }
  void add_inplace(Series& acc, const Series& x) const {
    auto& d = acc.mutable_data();
    const auto& xd = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += xd[i];
  }
};

}  // namespace

double abs_sum(const Series& s) {
  double total = 0.0;
  for (const auto& c : s.data()) total += std::abs(c);
  return total;
}

double sup_bound(const Series& s) {
  const MultiIndexSet& A = s.actions();
  double total = 0.0;
  for (std::size_t a = 0; a < A.size(); ++a) {
    double w = 1.0;
    for (int j = 0; j < s.dim(); ++j) w *= std::pow(s.radius()[j], A[a][j]);
    for (std::size_t m = 0; m < s.mode_count(); ++m) total += std::abs(s.at(m, a)) * w;
  }
  return total;
}

Series compose_near_identity(const Series& s, const std::vector<Series>& xi, const std::vector<Series>& lambda,
                             int max_order) {
  if (max_order < 0) max_order = s.k_action();
  if (!xi.empty() && static_cast<int>(xi.size()) != s.dim())
    throw DomainError("series", "compose: xi must have dim components");
  if (!lambda.empty() && static_cast<int>(lambda.size()) != s.dim())
    throw DomainError("series", "compose: lambda must have dim components");
  for (std::size_t j = 0; j < xi.size(); ++j) {
    require_compatible(s, xi[j], "compose");
    if (sup_bound(xi[j]) > 0.5 * s.radius()[j])
      throw OutOfBox("series", "compose: action shift exceeds the Taylor validity margin");
  }
  for (const auto& l : lambda) require_compatible(s, l, "compose");
  SeriesOps ops;
  detail::TaylorShift<Series, SeriesOps> shift(ops, xi, lambda);
  return shift.apply(s, max_order);
}

Series rebase(const Series& s, const RealVec& new_base) {
  if (static_cast<int>(new_base.size()) != s.dim()) throw DomainError("series", "rebase: wrong dimension");
  std::vector<Series> xi;
  for (int j = 0; j < s.dim(); ++j) xi.push_back(constant(s.layout(), new_base[j] - s.base_point()[j]));
  SeriesOps ops;
  detail::TaylorShift<Series, SeriesOps> shift(ops, xi, {});
  Series shifted = shift.apply(s, s.k_action());
  SeriesLayout l = s.layout();
  l.base_point = new_base;
  Series r(l);
  r.mutable_data() = shifted.data();
  return r;
}

Series retruncate(const Series& s, int k_angle, int k_action) {
  SeriesLayout l = s.layout();
  l.k_angle = k_angle;
  l.k_action = k_action;
  Series r(l);
  const MultiIndexSet& A = s.actions();
  for (std::size_t m = 0; m < s.mode_count(); ++m) {
    const IntVec g = s.mode(m);
    const long rm = r.mode_index(g);
    if (rm < 0) continue;
    for (std::size_t a = 0; a < A.size(); ++a) {
      const int ra = r.actions().find(A[a]);
      if (ra < 0) continue;
      r.mutable_data()[static_cast<std::size_t>(rm) * r.action_count() + ra] = s.at(m, a);
    }
  }
  return r;
}

Series with_radius(const Series& s, const RealVec& radius) {
  SeriesLayout l = s.layout();
  l.radius = radius;
  Series r(l);
  r.mutable_data() = s.data();
  return r;
}

GevreyProfile gevrey_profile(const Series& s, double sigma, double mu, double rho, double L1, double L2) {
  GevreyProfile p{sigma, mu, rho, L1, L2, 0.0};
  // sup_n |g|^n / (L1^n n!^sigma), attained at a finite n.
  auto angle_weight = [&](int g) {
    double best = 1.0, term = 1.0;
    for (int n = 1; n <= 200; ++n) {
      term *= std::abs(g) / (L1 * std::pow(static_cast<double>(n), sigma));
      best = std::max(best, term);
      if (term < best * 1e-3 && n > std::abs(g)) break;
    }
    return best;
  };
  const MultiIndexSet& A = s.actions();
  for (std::size_t a = 0; a < A.size(); ++a) {
    double wa = 1.0;
    for (int j = 0; j < s.dim(); ++j) {
      const double fact = std::tgamma(A[a][j] + 1.0);
      wa *= fact * std::pow(L2, -A[a][j]) * std::pow(fact, -mu);
    }
    for (std::size_t m = 0; m < s.mode_count(); ++m) {
      const double c = std::abs(s.at(m, a));
      if (c == 0.0) continue;
      double wg = 1.0;
      for (int g : s.mode(m)) wg *= angle_weight(g);
      p.norm_estimate = std::max(p.norm_estimate, c * wa * wg);
    }
  }
  return p;
}

}  // namespace kamscar
