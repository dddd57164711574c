#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <vector>

namespace kamscar {

using Complex = std::complex<double>;
using IntVec = std::vector<int>;
using RealVec = std::vector<double>;

// All multi-indices a in N^d with |a| <= order, in graded order.
class MultiIndexSet {
 public:
  MultiIndexSet(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return items_.size(); }
  const IntVec& operator[](std::size_t i) const { return items_[i]; }
  int degree(std::size_t i) const { return degree_[i]; }
  // Index of `a`, or -1 when |a| > order or a has a negative entry.
  int find(const IntVec& a) const;
  // Index of items[i] + items[j], or -1 when the sum leaves the set.
  int sum(std::size_t i, std::size_t j) const { return sum_[i * items_.size() + j]; }
  // Index of items[i] - e_k, or -1 when items[i][k] == 0.
  int lower(std::size_t i, int k) const { return lower_[i * dim_ + k]; }
  // Index of items[i] + e_k, or -1 when the degree would exceed `order`.
  int raise(std::size_t i, int k) const { return raise_[i * dim_ + k]; }

 private:
  int dim_;
  int order_;
  std::vector<IntVec> items_;
  std::vector<int> degree_;
  std::vector<int> lookup_;
  std::vector<int> sum_;
  std::vector<int> lower_;
  std::vector<int> raise_;
};

std::shared_ptr<const MultiIndexSet> multi_indices(int dim, int order);

// Shape shared by every series in one computation.
struct SeriesLayout {
  int dim = 1;
  RealVec base_point{0.0};
  int k_angle = 0;
  int k_action = 0;
  // Half-widths of the action box centred at base_point.
  RealVec radius{1.0};

  bool operator==(const SeriesLayout& o) const;
  bool operator!=(const SeriesLayout& o) const { return !(*this == o); }
};

// Sum over |gamma|_inf <= k_angle and |alpha| <= k_action of
// c[gamma, alpha] exp(i gamma.theta) (I - I0)^alpha. Stored densely; the
// reality condition c[-gamma, alpha] = conj(c[gamma, alpha]) is maintained
// by every mutator.
class FourierTaylorSeries {
 public:
  FourierTaylorSeries();
  explicit FourierTaylorSeries(const SeriesLayout& layout);

  const SeriesLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim; }
  int k_angle() const { return layout_.k_angle; }
  int k_action() const { return layout_.k_action; }
  const RealVec& base_point() const { return layout_.base_point; }
  const RealVec& radius() const { return layout_.radius; }

  std::size_t mode_count() const { return n_modes_; }
  std::size_t action_count() const { return actions_->size(); }
  const MultiIndexSet& actions() const { return *actions_; }
  std::size_t zero_mode() const { return (n_modes_ - 1) / 2; }
  std::size_t mirror(std::size_t mode) const { return n_modes_ - 1 - mode; }

  IntVec mode(std::size_t index) const;
  // -1 when some |gamma_j| > k_angle.
  long mode_index(const IntVec& gamma) const;

  Complex coeff(const IntVec& gamma, const IntVec& alpha) const;
  Complex at(std::size_t mode, std::size_t action) const { return data_[mode * action_count() + action]; }

  // Sets c[gamma, alpha] and its mirror c[-gamma, alpha]. For gamma = 0 only
  // the real part is kept. Indices outside the truncation are rejected.
  void set(const IntVec& gamma, const IntVec& alpha, Complex c);
  void set_at(std::size_t mode, std::size_t action, Complex c);
  void add_at(std::size_t mode, std::size_t action, Complex c);

  const std::vector<Complex>& data() const { return data_; }
  // Raw access for kernels that assign whole slices; callers restore
  // reality with `mirror_from_upper_half`.
  std::vector<Complex>& mutable_data() { return data_; }
  void mirror_from_upper_half();

  bool is_zero() const;
  double max_abs() const;
  bool is_real_symmetric() const;
  // True when every gamma != 0 coefficient vanishes.
  bool is_angle_free() const;

 private:
  SeriesLayout layout_;
  std::shared_ptr<const MultiIndexSet> actions_;
  std::size_t n_modes_ = 1;
  std::vector<Complex> data_;
};

using Series = FourierTaylorSeries;

struct GevreyProfile {
  double sigma = 1.0;
  double mu = 1.0;
  double rho = 1.0;
  double L1 = 1.0;
  double L2 = 1.0;
  double norm_estimate = 0.0;
};

enum class VarKind { Angle, Action };
struct Variable {
  VarKind kind;
  int index;
};

// Throws OutOfBox when I leaves the action box.
double eval(const Series& s, const RealVec& theta, const RealVec& action);
Complex eval_complex(const Series& s, const RealVec& theta, const RealVec& action);
bool in_box(const Series& s, const RealVec& action, double slack = 1e-12);

Series zero_like(const Series& s);
Series constant(const SeriesLayout& layout, double value);
Series angle_average(const Series& s);
Series angle_part(const Series& s);
Series add(const Series& a, const Series& b);
Series sub(const Series& a, const Series& b);
Series scale(const Series& a, double c);
Series axpy(double c, const Series& x, const Series& y);
Series multiply(const Series& a, const Series& b);
Series partial_derivative(const Series& s, Variable which);
Series partial_angle(const Series& s, int j);
Series partial_action(const Series& s, int j);

// Taylor expansion of s(I + xi, theta + lambda) to total order
// `max_order` (default: k_action) in (xi, lambda). Empty vectors mean zero
// shifts. Throws OutOfBox when a shift exceeds half the action box.
Series compose_near_identity(const Series& s, const std::vector<Series>& xi,
                             const std::vector<Series>& lambda, int max_order = -1);

// Same function expanded around a new base point (exact for the stored
// polynomial in I). The box keeps its radius.
Series rebase(const Series& s, const RealVec& new_base);
// Same coefficients copied into a larger or smaller truncation.
Series retruncate(const Series& s, int k_angle, int k_action);
// Same coefficients with a different action-box radius.
Series with_radius(const Series& s, const RealVec& radius);

// Upper bound of |s| on T^d x box: sum |c| prod radius_j^alpha_j.
double sup_bound(const Series& s);
double abs_sum(const Series& s);

GevreyProfile gevrey_profile(const Series& s, double sigma, double mu, double rho, double L1,
                             double L2);

void write_jsonl(std::ostream& out, const Series& s);
Series read_jsonl(std::istream& in);

}  // namespace kamscar
