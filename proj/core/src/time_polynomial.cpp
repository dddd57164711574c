#include "kamscar/time_polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "compose_impl.hpp"
#include "kamscar/errors.hpp"

namespace kamscar {

TimePolynomial::TimePolynomial(const Series& s, int power, double t_max) : layout_(s.layout()), t_max_(t_max) {
  add_term(power, s);
}

void TimePolynomial::add_term(int power, const Series& s) {
  if (power < 0) throw DomainError("time_polynomial", "negative power of t");
  if (s.layout() != layout_) throw DomainError("time_polynomial", "term layout differs from the polynomial");
  auto it = terms_.find(power);
  if (it == terms_.end()) {
    if (!s.is_zero()) terms_.emplace(power, s);
    return;
  }
  it->second = kamscar::add(it->second, s);
  if (it->second.is_zero()) terms_.erase(it);
}

Series TimePolynomial::coefficient(int power) const {
  auto it = terms_.find(power);
  return it == terms_.end() ? Series(layout_) : it->second;
}

int TimePolynomial::lowest_power() const { return terms_.empty() ? -1 : terms_.begin()->first; }
int TimePolynomial::highest_power() const { return terms_.empty() ? -1 : terms_.rbegin()->first; }

bool TimePolynomial::is_angle_free() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const auto& kv) { return kv.second.is_angle_free(); });
}

double eval(const TimePolynomial& h, const RealVec& theta, const RealVec& action, double t) {
  double total = 0.0;
  for (auto it = h.terms().rbegin(); it != h.terms().rend(); ++it) {
    total += std::pow(t, it->first) * eval(it->second, theta, action);
  }
  if (h.terms().empty() && !in_box(Series(h.layout()), action))
    throw OutOfBox("series", "eval: action outside the Taylor validity box");
  return total;
}

Series at_time(const TimePolynomial& h, double t) {
  Series s(h.layout());
  for (const auto& [p, term] : h.terms()) s = axpy(std::pow(t, p), term, s);
  return s;
}

TimePolynomial add(const TimePolynomial& a, const TimePolynomial& b) {
  TimePolynomial r = a;
  for (const auto& [p, s] : b.terms()) r.add_term(p, s);
  return r;
}

TimePolynomial sub(const TimePolynomial& a, const TimePolynomial& b) {
  TimePolynomial r = a;
  for (const auto& [p, s] : b.terms()) r.add_term(p, scale(s, -1.0));
  return r;
}

TimePolynomial scale(const TimePolynomial& a, double c) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, scale(s, c));
  return r;
}

TimePolynomial multiply(const TimePolynomial& a, const TimePolynomial& b, int t_order) {
  TimePolynomial r(a.layout(), std::min(a.t_max(), b.t_max()));
  for (const auto& [pa, sa] : a.terms())
    for (const auto& [pb, sb] : b.terms()) {
      if (pa + pb > t_order) break;
      r.add_term(pa + pb, multiply(sa, sb));
    }
  return r;
}

TimePolynomial partial_derivative(const TimePolynomial& a, Variable which) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, partial_derivative(s, which));
  return r;
}

TimePolynomial angle_average(const TimePolynomial& a) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, angle_average(s));
  return r;
}

TimePolynomial angle_part(const TimePolynomial& a) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, angle_part(s));
  return r;
}

TimePolynomial truncate(const TimePolynomial& a, int t_order) { return slice(a, 0, t_order); }

TimePolynomial slice(const TimePolynomial& a, int lo, int hi) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms())
    if (p >= lo && p <= hi) r.add_term(p, s);
  return r;
}

TimePolynomial shifted(const TimePolynomial& a, int by) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p + by, s);
  return r;
}

TimePolynomial time_derivative(const TimePolynomial& a) {
  TimePolynomial r(a.layout(), a.t_max());
  for (const auto& [p, s] : a.terms())
    if (p > 0) r.add_term(p - 1, scale(s, static_cast<double>(p)));
  return r;
}

double max_abs(const TimePolynomial& a) {
  double m = 0.0;
  for (const auto& [p, s] : a.terms()) m = std::max(m, s.max_abs());
  return m;
}

namespace {

struct PolyOps {
  int t_order;
  TimePolynomial zero_like(const TimePolynomial& s) const { return TimePolynomial(s.layout(), s.t_max()); }
  bool is_zero(const TimePolynomial& s) const { return s.is_zero(); }
  TimePolynomial deriv(const TimePolynomial& s, Variable v) const { return partial_derivative(s, v); }
  TimePolynomial mul(const TimePolynomial& a, const TimePolynomial& b) const { return multiply(a, b, t_order); }
  TimePolynomial scale(const TimePolynomial& a, double c) const { return kamscar::scale(a, c); }
  void add_inplace(TimePolynomial& acc, const TimePolynomial& x) const {
    for (const auto& [p, s] : x.terms()) acc.add_term(p, s);
  }
};

}  // namespace

TimePolynomial compose_near_identity(const TimePolynomial& s, const std::vector<TimePolynomial>& xi,
                                     const std::vector<TimePolynomial>& lambda, int max_order, int t_order) {
  for (const auto& x : xi)
    if (x.layout() != s.layout()) throw DomainError("time_polynomial", "compose: layout mismatch");
  for (const auto& l : lambda)
    if (l.layout() != s.layout()) throw DomainError("time_polynomial", "compose: layout mismatch");
  PolyOps ops{t_order};
  detail::TaylorShift<TimePolynomial, PolyOps> shift(ops, xi, lambda);
  return truncate(shift.apply(s, max_order), t_order);
}

TimePolynomial rebase(const TimePolynomial& a, const RealVec& new_base) {
  SeriesLayout l = a.layout();
  l.base_point = new_base;
  TimePolynomial r(l, a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, rebase(s, new_base));
  return r;
}

TimePolynomial with_radius(const TimePolynomial& a, const RealVec& radius) {
  SeriesLayout l = a.layout();
  l.radius = radius;
  TimePolynomial r(l, a.t_max());
  for (const auto& [p, s] : a.terms()) r.add_term(p, with_radius(s, radius));
  return r;
}

std::vector<TimePolynomial> compose_by_action_order(const TimePolynomial& s, const std::vector<TimePolynomial>& xi,
                                                    const std::vector<TimePolynomial>& lambda, int max_order,
                                                    int t_order) {
  for (const auto& x : xi)
    if (x.layout() != s.layout()) throw DomainError("time_polynomial", "compose: layout mismatch");
  for (const auto& l : lambda)
    if (l.layout() != s.layout()) throw DomainError("time_polynomial", "compose: layout mismatch");
  PolyOps ops{t_order};
  detail::TaylorShift<TimePolynomial, PolyOps> shift(ops, xi, lambda);
  std::vector<TimePolynomial> parts = shift.apply_graded(s, max_order);
  for (auto& p : parts) p = truncate(p, t_order);
  return parts;
}

void write_jsonl(std::ostream& out, const TimePolynomial& h) {
  nlohmann::json header = {{"record", "time_polynomial"}, {"t_max", h.t_max()}, {"terms", h.terms().size()}};
  out << header.dump() << '\n';
  if (h.terms().empty()) {
    out << nlohmann::json{{"record", "power"}, {"p", -1}}.dump() << '\n';
    write_jsonl(out, Series(h.layout()));
  }
  for (const auto& [p, s] : h.terms()) {
    out << nlohmann::json{{"record", "power"}, {"p", p}}.dump() << '\n';
    write_jsonl(out, s);
  }
}

TimePolynomial read_time_polynomial(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("time polynomial file is empty");
  auto header = nlohmann::json::parse(line);
  if (header.value("record", "") != "time_polynomial") throw ConfigError("missing time_polynomial header");
  const double t_max = header.at("t_max").get<double>();
  const std::size_t n = header.at("terms").get<std::size_t>();
  TimePolynomial h;
  bool first = true;
  for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k) {
    if (!std::getline(in, line)) throw ConfigError("time polynomial file truncated");
    auto rec = nlohmann::json::parse(line);
    const int p = rec.at("p").get<int>();
    Series s = read_jsonl(in);
    if (first) {
      h = TimePolynomial(s.layout(), t_max);
      first = false;
    }
    if (p >= 0) h.add_term(p, s);
  }
  return h;
}

}  // namespace kamscar
