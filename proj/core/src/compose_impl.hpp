#pragma once

#include <vector>

#include "kamscar/series.hpp"

namespace kamscar::detail {

// Sum over (beta, k) with |beta| + |k| <= max_order of
// D_I^beta D_theta^k s * prod xi_j^beta_j / beta_j! * prod lambda_j^k_j / k_j!.
// `Ops` supplies the algebra so the same kernel serves plain series and
// polynomials in t. `apply_graded` keeps the terms of each |beta| apart.
template <class T, class Ops>
class TaylorShift {
 public:
  TaylorShift(const Ops& ops, const std::vector<T>& xi, const std::vector<T>& lambda) : ops_(ops) {
    for (std::size_t j = 0; j < xi.size(); ++j)
      if (!ops_.is_zero(xi[j])) vars_.push_back({Variable{VarKind::Action, static_cast<int>(j)}, &xi[j]});
    for (std::size_t j = 0; j < lambda.size(); ++j)
      if (!ops_.is_zero(lambda[j]))
        vars_.push_back({Variable{VarKind::Angle, static_cast<int>(j)}, &lambda[j]});
  }

  T apply(const T& s, int max_order) {
    std::vector<T> parts = apply_graded(s, max_order);
    T total = parts[0];
    for (std::size_t n = 1; n < parts.size(); ++n) ops_.add_inplace(total, parts[n]);
    return total;
  }

  std::vector<T> apply_graded(const T& s, int max_order) {
    acc_.assign(static_cast<std::size_t>(max_order) + 1, ops_.zero_like(s));
    recurse(0, s, nullptr, max_order, 0);
    return acc_;
  }

 private:
  struct Var {
    Variable v;
    const T* shift;
  };

  void recurse(std::size_t v, const T& d, const T* p, int remaining, int action_order) {
    if (v == vars_.size()) {
      if (p == nullptr)
        ops_.add_inplace(acc_[action_order], d);
      else
        ops_.add_inplace(acc_[action_order], ops_.mul(d, *p));
      return;
    }
    recurse(v + 1, d, p, remaining, action_order);
    const int step = vars_[v].v.kind == VarKind::Action ? 1 : 0;
    T dn = d;
    T pn;
    bool have_p = false;
    for (int n = 1; n <= remaining; ++n) {
      dn = ops_.deriv(dn, vars_[v].v);
      if (ops_.is_zero(dn)) return;
      if (!have_p) {
        pn = p == nullptr ? *vars_[v].shift : ops_.mul(*p, *vars_[v].shift);
        have_p = true;
      } else {
        pn = ops_.scale(ops_.mul(pn, *vars_[v].shift), 1.0 / n);
      }
      if (ops_.is_zero(pn)) return;
      recurse(v + 1, dn, &pn, remaining - n, action_order + step * n);
    }
  }

  const Ops& ops_;
  std::vector<Var> vars_;
  std::vector<T> acc_;
};

}  // namespace kamscar::detail
