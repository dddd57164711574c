#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "kamscar/series.hpp"

namespace kamscar {

// H(theta, I; t) = sum_p t^p H_p(theta, I). Terms with equal powers merge
// additively; exactly zero terms are dropped.
class TimePolynomial {
 public:
  TimePolynomial() = default;
  explicit TimePolynomial(const SeriesLayout& layout, double t_max = 1.0) : layout_(layout), t_max_(t_max) {}
  TimePolynomial(const Series& s, int power, double t_max = 1.0);

  const SeriesLayout& layout() const { return layout_; }
  int dim() const { return layout_.dim; }
  double t_max() const { return t_max_; }
  void set_t_max(double t) { t_max_ = t; }

  void add_term(int power, const Series& s);
  const std::map<int, Series>& terms() const { return terms_; }
  // Zero series when the power is absent.
  Series coefficient(int power) const;
  bool has(int power) const { return terms_.count(power) != 0; }
  bool is_zero() const { return terms_.empty(); }
  // -1 for the zero polynomial.
  int lowest_power() const;
  int highest_power() const;
  bool is_angle_free() const;

 private:
  SeriesLayout layout_;
  double t_max_ = 1.0;
  std::map<int, Series> terms_;
};

using TimePolynomialHamiltonian = TimePolynomial;

double eval(const TimePolynomial& h, const RealVec& theta, const RealVec& action, double t);

// sum_p t^p H_p as a single series.
Series at_time(const TimePolynomial& h, double t);

TimePolynomial add(const TimePolynomial& a, const TimePolynomial& b);
TimePolynomial sub(const TimePolynomial& a, const TimePolynomial& b);
TimePolynomial scale(const TimePolynomial& a, double c);
// Product truncated at t^t_order.
TimePolynomial multiply(const TimePolynomial& a, const TimePolynomial& b, int t_order);
TimePolynomial partial_derivative(const TimePolynomial& a, Variable which);
TimePolynomial angle_average(const TimePolynomial& a);
TimePolynomial angle_part(const TimePolynomial& a);
// Terms with power <= t_order (or within [lo, hi] for `slice`).
TimePolynomial truncate(const TimePolynomial& a, int t_order);
TimePolynomial slice(const TimePolynomial& a, int lo, int hi);
TimePolynomial shifted(const TimePolynomial& a, int by);
TimePolynomial time_derivative(const TimePolynomial& a);

// Exact re-expansion of every term around a new base point.
TimePolynomial rebase(const TimePolynomial& a, const RealVec& new_base);
TimePolynomial with_radius(const TimePolynomial& a, const RealVec& radius);

// s(I + xi, theta + lambda) to total order `max_order` in the shifts and
// t^t_order in time.
TimePolynomial compose_near_identity(const TimePolynomial& s, const std::vector<TimePolynomial>& xi,
                                     const std::vector<TimePolynomial>& lambda, int max_order, int t_order);

// The same expansion split by total order n in xi: entry n collects the
// terms with |beta| = n, all orders in lambda included.
std::vector<TimePolynomial> compose_by_action_order(const TimePolynomial& s, const std::vector<TimePolynomial>& xi,
                                                    const std::vector<TimePolynomial>& lambda, int max_order,
                                                    int t_order);

// Largest coefficient magnitude over all terms.
double max_abs(const TimePolynomial& a);

void write_jsonl(std::ostream& out, const TimePolynomial& h);
TimePolynomial read_time_polynomial(std::istream& in);

}  // namespace kamscar
