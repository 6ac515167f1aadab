#ifndef CONDMALL_OPERATORS_HPP
#define CONDMALL_OPERATORS_HPP

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "condmall/error.hpp"
#include "condmall/model.hpp"
#include "condmall/quadrature.hpp"

namespace condmall {

using Subset = std::vector<std::size_t>;

namespace detail {

template <typename Scalar>
using Table = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Calls body(base, stride, radix, z) once per fibre along coordinate a; the
// fibre cells are base + v * stride for v in [0, radix).
template <typename Scalar, typename Body>
void for_each_fibre(const BasicProductModel<Scalar>& model, std::size_t a, Body&& body) {
  const Eigen::Index n = model.configuration_count();
  const Eigen::Index s = model.stride(a);
  const Eigen::Index r = model.radix(a);
  const Eigen::Index outer = n / (s * r);
  for (Eigen::Index z = 0; z < model.latent_count(); ++z) {
    for (Eigen::Index o = 0; o < outer; ++o) {
      const Eigen::Index start = z * n + o * s * r;
      for (Eigen::Index i = 0; i < s; ++i) body(start + i, s, r, z);
    }
  }
}

// E[. | G^a] applied to a raw table.
template <typename Scalar>
Table<Scalar> integrate_out(const BasicProductModel<Scalar>& model, const Table<Scalar>& in, std::size_t a) {
  Table<Scalar> out(in.size());
  const auto& pmf = model.component(a).cond_pmf;
  for_each_fibre(model, a, [&](Eigen::Index base, Eigen::Index s, Eigen::Index r, Eigen::Index z) {
    Scalar acc(0);
    for (Eigen::Index v = 0; v < r; ++v) acc += pmf(z, v) * in(base + v * s);
    for (Eigen::Index v = 0; v < r; ++v) out(base + v * s) = acc;
  });
  return out;
}

template <typename Scalar>
void chaos_tree(const BasicProductModel<Scalar>& model, const Table<Scalar>& current, std::size_t a,
                std::size_t order, long target, std::vector<Table<Scalar>>& acc) {
  const std::size_t m = model.component_count();
  if (target >= 0) {
    if (static_cast<long>(order) > target) return;
    if (static_cast<long>(order + (m - a)) < target) return;
  }
  if (a == m) {
    acc[order] += current;
    return;
  }
  Table<Scalar> e = integrate_out(model, current, a);
  chaos_tree(model, e, a + 1, order, target, acc);
  Table<Scalar> d = current - e;
  e.resize(0);
  chaos_tree(model, d, a + 1, order + 1, target, acc);
}

template <typename Scalar>
void conditional_lattice(const BasicProductModel<Scalar>& model, const Table<Scalar>& current, std::size_t next,
                         std::size_t kept, std::vector<Table<Scalar>>& acc) {
  acc[kept] += current;
  for (std::size_t c = next; c < model.component_count(); ++c) {
    conditional_lattice(model, integrate_out(model, current, c), c + 1, kept - 1, acc);
  }
}

inline double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

}  // namespace detail

// E[F | G^a], where G^a is generated by Z and every coordinate except a.
template <typename Scalar>
BasicFunctional<Scalar> cond_exp_excluding(const BasicFunctional<Scalar>& f, std::size_t a) {
  f.model().check_index(a);
  return f.with_table(detail::integrate_out(f.model(), f.table(), a));
}

// D_a F = F - E[F | G^a].
template <typename Scalar>
BasicFunctional<Scalar> gradient(const BasicFunctional<Scalar>& f, std::size_t a) {
  f.model().check_index(a);
  return f.with_table(f.table() - detail::integrate_out(f.model(), f.table(), a));
}

// E[F | G_L], where G_L is generated by Z and the coordinates in L.
template <typename Scalar>
BasicFunctional<Scalar> cond_exp_given(const BasicFunctional<Scalar>& f, const Subset& keep) {
  const auto& model = f.model();
  std::vector<bool> kept(model.component_count(), false);
  for (auto a : keep) {
    model.check_index(a);
    kept[a] = true;
  }
  detail::Table<Scalar> t = f.table();
  for (std::size_t c = 0; c < model.component_count(); ++c) {
    if (!kept[c]) t = detail::integrate_out(model, t, c);
  }
  return f.with_table(std::move(t));
}

// prod_{a in J} D_a F by composing gradients.
template <typename Scalar>
BasicFunctional<Scalar> iterated_gradient(const BasicFunctional<Scalar>& f, const Subset& j) {
  detail::Table<Scalar> t = f.table();
  for (auto a : j) {
    f.model().check_index(a);
    t -= detail::integrate_out(f.model(), t, a);
  }
  return f.with_table(std::move(t));
}

// prod_{a in J} D_a F = sum_{K subset J} (-1)^|K| E[F | G^K], with G^K
// generated by Z and the coordinates outside K.
template <typename Scalar>
BasicFunctional<Scalar> iterated_gradient_mobius(const BasicFunctional<Scalar>& f, const Subset& j) {
  for (auto a : j) f.model().check_index(a);
  const std::size_t k = j.size();
  detail::Table<Scalar> acc = detail::Table<Scalar>::Zero(f.table().size());
  for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
    detail::Table<Scalar> t = f.table();
    int bits = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask >> i & 1) {
        t = detail::integrate_out(f.model(), t, j[i]);
        ++bits;
      }
    }
    if (bits % 2) acc -= t;
    else acc += t;
  }
  return f.with_table(std::move(acc));
}

// delta U = sum_a D_a U_a.
template <typename Scalar>
BasicFunctional<Scalar> divergence(const BasicSimpleProcess<Scalar>& u) {
  const auto& model = *u.model_ptr();
  detail::Table<Scalar> acc = detail::Table<Scalar>::Zero(model.cell_count());
  for (const auto& [a, ua] : u.entries()) {
    if (ua.model_ptr() != u.model_ptr()) throw Error(ErrorCode::MismatchedModel, "divergence entry on another model");
    acc += ua.table() - detail::integrate_out(model, ua.table(), a);
  }
  return BasicFunctional<Scalar>(u.model_ptr(), std::move(acc));
}

// The gradient of F as a simple process.
template <typename Scalar>
BasicSimpleProcess<Scalar> gradient_process(const BasicFunctional<Scalar>& f) {
  BasicSimpleProcess<Scalar> u(f.model_ptr());
  for (std::size_t a = 0; a < f.model().component_count(); ++a) u.set(a, gradient(f, a));
  return u;
}

// E[<DF, U>] = sum_a E[D_a F * U_a].
template <typename Scalar>
Scalar gradient_pairing(const BasicFunctional<Scalar>& f, const BasicSimpleProcess<Scalar>& u) {
  if (f.model_ptr() != u.model_ptr()) throw Error(ErrorCode::MismatchedModel, "pairing across models");
  Scalar acc(0);
  const auto& w = f.model().joint_weights();
  for (const auto& [a, ua] : u.entries()) acc += w.dot(gradient(f, a).table().cwiseProduct(ua.table()));
  return acc;
}

// LF = -sum_a D_a F.
template <typename Scalar>
BasicFunctional<Scalar> generator_L(const BasicFunctional<Scalar>& f) {
  const auto& model = f.model();
  detail::Table<Scalar> acc = detail::Table<Scalar>::Zero(f.table().size());
  for (std::size_t a = 0; a < model.component_count(); ++a) {
    acc -= f.table() - detail::integrate_out(model, f.table(), a);
  }
  return f.with_table(std::move(acc));
}

template <typename Scalar>
struct BasicChaosDecomposition {
  BasicFunctional<Scalar> source;
  std::vector<BasicFunctional<Scalar>> components;  // index n = 0..|A|

  const BasicFunctional<Scalar>& operator[](std::size_t n) const { return components[n]; }
  std::size_t size() const { return components.size(); }

  BasicFunctional<Scalar> sum() const {
    detail::Table<Scalar> t = detail::Table<Scalar>::Zero(source.table().size());
    for (const auto& c : components) t += c.table();
    return source.with_table(std::move(t));
  }

  // Highest n whose component exceeds tol in some cell; 0 when F = E[F|Z].
  std::size_t order(Scalar tol = Scalar(1e-10)) const {
    for (std::size_t n = components.size(); n-- > 1;) {
      if (max_abs(components[n]) > tol) return n;
    }
    return 0;
  }
};

// All chaos projections pi_0 F, ..., pi_|A| F. Each coordinate is split as
// Id = D_a + E[. | G^a]; walking the binary tree of these choices visits every
// J with its product (prod_J D_b)(prod_{c not in J} E[. | G^c]) F and reuses
// common prefixes.
template <typename Scalar>
BasicChaosDecomposition<Scalar> chaos_decomposition(const BasicFunctional<Scalar>& f) {
  const std::size_t m = f.model().component_count();
  std::vector<detail::Table<Scalar>> acc(m + 1, detail::Table<Scalar>::Zero(f.table().size()));
  detail::chaos_tree(f.model(), f.table(), 0, 0, -1, acc);
  BasicChaosDecomposition<Scalar> out{f, {}};
  out.components.reserve(m + 1);
  for (auto& t : acc) out.components.push_back(f.with_table(std::move(t)));
  return out;
}

template <typename Scalar>
BasicFunctional<Scalar> chaos_projector(const BasicFunctional<Scalar>& f, std::size_t n) {
  const std::size_t m = f.model().component_count();
  if (n > m) {
    throw Error(ErrorCode::IndexOutOfRange, "chaos order " + std::to_string(n) + " > |A| = " + std::to_string(m));
  }
  std::vector<detail::Table<Scalar>> acc(m + 1, detail::Table<Scalar>::Zero(f.table().size()));
  detail::chaos_tree(f.model(), f.table(), 0, 0, static_cast<long>(n), acc);
  return f.with_table(std::move(acc[n]));
}

// pi_n F through the conditional expectations E[F | G_L] for all L:
// pi_n F = sum_{|L| <= n} (-1)^{n-|L|} C(|A|-|L|, n-|L|) E[F | G_L].
template <typename Scalar>
BasicFunctional<Scalar> chaos_projector_mobius(const BasicFunctional<Scalar>& f, std::size_t n) {
  const std::size_t m = f.model().component_count();
  if (n > m) {
    throw Error(ErrorCode::IndexOutOfRange, "chaos order " + std::to_string(n) + " > |A| = " + std::to_string(m));
  }
  std::vector<detail::Table<Scalar>> by_size(m + 1, detail::Table<Scalar>::Zero(f.table().size()));
  detail::conditional_lattice(f.model(), f.table(), 0, m, by_size);
  detail::Table<Scalar> out = detail::Table<Scalar>::Zero(f.table().size());
  for (std::size_t k = 0; k <= n; ++k) {
    Scalar c = static_cast<Scalar>(detail::binomial(m - k, n - k));
    if ((n - k) % 2) c = -c;
    out += c * by_size[k];
  }
  return f.with_table(std::move(out));
}

template <typename Scalar>
Scalar max_abs_conditional_mean(const BasicFunctional<Scalar>& f) {
  return conditional_expectation_given_Z(f).cwiseAbs().maxCoeff();
}

template <typename Scalar>
BasicFunctional<Scalar> inverse_L(const BasicChaosDecomposition<Scalar>& d) {
  if (max_abs_conditional_mean(d.source) > Scalar(1e-10)) {
    throw Error(ErrorCode::NotCentered, "max |E[F|Z=z]| exceeds 1e-10");
  }
  detail::Table<Scalar> t = detail::Table<Scalar>::Zero(d.source.table().size());
  for (std::size_t n = 1; n < d.components.size(); ++n) t -= d.components[n].table() / static_cast<Scalar>(n);
  return d.source.with_table(std::move(t));
}

template <typename Scalar>
BasicFunctional<Scalar> inverse_L(const BasicFunctional<Scalar>& f) {
  if (max_abs_conditional_mean(f) > Scalar(1e-10)) {
    throw Error(ErrorCode::NotCentered, "max |E[F|Z=z]| exceeds 1e-10");
  }
  return inverse_L(chaos_decomposition(f));
}

// Gamma(F, G) = (L(FG) - F LG - G LF) / 2.
template <typename Scalar>
BasicFunctional<Scalar> carre_du_champ(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g) {
  require_same_model(f, g);
  auto lfg = generator_L(f * g);
  auto lf = generator_L(f);
  auto lg = generator_L(g);
  return f.with_table(Scalar(0.5) * (lfg.table() - f.table().cwiseProduct(lg.table()) -
                                     g.table().cwiseProduct(lf.table())));
}

// E[fn(Delta^a F, Delta^a G) | X, Z] where Delta^a F = F(x) - F(x^{a}, x'_a)
// and x'_a is an independent conditional copy of the coordinate.
template <typename Scalar, typename Fn>
BasicFunctional<Scalar> difference_expectation(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g,
                                               std::size_t a, Fn&& fn) {
  require_same_model(f, g);
  const auto& model = f.model();
  model.check_index(a);
  const auto& pmf = model.component(a).cond_pmf;
  const auto& tf = f.table();
  const auto& tg = g.table();
  detail::Table<Scalar> out(tf.size());
  detail::for_each_fibre(model, a, [&](Eigen::Index base, Eigen::Index s, Eigen::Index r, Eigen::Index z) {
    for (Eigen::Index u = 0; u < r; ++u) {
      const Eigen::Index cell = base + u * s;
      Scalar acc(0);
      for (Eigen::Index v = 0; v < r; ++v) {
        const Eigen::Index other = base + v * s;
        acc += pmf(z, v) * fn(tf(cell) - tf(other), tg(cell) - tg(other));
      }
      out(cell) = acc;
    }
  });
  return f.with_table(std::move(out));
}

// E[(Delta^a F)^k | X, Z], or E[|Delta^a F|^k | X, Z] when absolute is set.
template <typename Scalar>
BasicFunctional<Scalar> difference_moment(const BasicFunctional<Scalar>& f, std::size_t a, int k, bool absolute) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "difference moment order must be >= 1");
  return difference_expectation(f, f, a, [&](Scalar d, Scalar) {
    Scalar base = absolute ? std::abs(d) : d;
    Scalar r(1);
    for (int i = 0; i < k; ++i) r *= base;
    return r;
  });
}

// E[|Delta^a G| (Delta^a F)^2 | X, Z].
template <typename Scalar>
BasicFunctional<Scalar> mixed_difference_moment(const BasicFunctional<Scalar>& f, const BasicFunctional<Scalar>& g,
                                                std::size_t a) {
  return difference_expectation(f, g, a, [](Scalar df, Scalar dg) { return std::abs(dg) * df * df; });
}

// Gamma(F, G) = (1/2) sum_a E[Delta^a F Delta^a G | X, Z].
template <typename Scalar>
BasicFunctional<Scalar> carre_du_champ_difference(const BasicFunctional<Scalar>& f,
                                                  const BasicFunctional<Scalar>& g) {
  detail::Table<Scalar> acc = detail::Table<Scalar>::Zero(f.table().size());
  for (std::size_t a = 0; a < f.model().component_count(); ++a) {
    acc += difference_expectation(f, g, a, [](Scalar df, Scalar dg) { return df * dg; }).table();
  }
  return f.with_table(Scalar(0.5) * acc);
}

inline void check_time(double t) {
  if (!(t >= 0.0)) throw Error(ErrorCode::NegativeTime, "t = " + std::to_string(t));
}

// P_t F = E[F|Z] + sum_{n>=1} exp(-n t) pi_n F.
template <typename Scalar>
BasicFunctional<Scalar> semigroup_Pt(const BasicChaosDecomposition<Scalar>& d, Scalar t) {
  check_time(static_cast<double>(t));
  detail::Table<Scalar> acc = d.components[0].table();
  for (std::size_t n = 1; n < d.components.size(); ++n) {
    acc += std::exp(-static_cast<Scalar>(n) * t) * d.components[n].table();
  }
  return d.source.with_table(std::move(acc));
}

template <typename Scalar>
BasicFunctional<Scalar> semigroup_Pt(const BasicFunctional<Scalar>& f, Scalar t) {
  check_time(static_cast<double>(t));
  return semigroup_Pt(chaos_decomposition(f), t);
}

// Product form of the semigroup: each coordinate except `skip` is refreshed by
// time t with probability 1 - exp(-t), so P_t = prod_a (e^{-t} Id + (1 - e^{-t}) E[. | G^a]).
template <typename Scalar>
BasicFunctional<Scalar> semigroup_product(const BasicFunctional<Scalar>& f, Scalar t,
                                          long skip = -1) {
  check_time(static_cast<double>(t));
  const Scalar keep = std::exp(-t);
  detail::Table<Scalar> cur = f.table();
  for (std::size_t a = 0; a < f.model().component_count(); ++a) {
    if (static_cast<long>(a) == skip) continue;
    cur = keep * cur + (Scalar(1) - keep) * detail::integrate_out(f.model(), cur, a);
  }
  return f.with_table(std::move(cur));
}

// e^{-t} E[Delta^a F(X°(t), X'_a) | X, Z]: coordinate a is held at its
// starting value on the event it has not been refreshed, the others evolve.
template <typename Scalar>
BasicFunctional<Scalar> commutation_rhs(const BasicFunctional<Scalar>& f, std::size_t a, Scalar t) {
  f.model().check_index(a);
  return std::exp(-t) * semigroup_product(gradient(f, a), t, static_cast<long>(a));
}

// int_0^horizon P_t F dt by composite Gauss-Legendre over the product form.
template <typename Scalar>
BasicFunctional<Scalar> semigroup_integral(const BasicFunctional<Scalar>& f, Scalar horizon = Scalar(40),
                                           int panels = 80, int order = 10) {
  auto rule = gauss_legendre<Scalar>(order);
  detail::Table<Scalar> acc = detail::Table<Scalar>::Zero(f.table().size());
  const Scalar h = horizon / static_cast<Scalar>(panels);
  for (int p = 0; p < panels; ++p) {
    const Scalar mid = (static_cast<Scalar>(p) + Scalar(0.5)) * h;
    for (int i = 0; i < order; ++i) {
      const Scalar t = mid + Scalar(0.5) * h * rule.nodes(i);
      acc += (Scalar(0.5) * h * rule.weights(i)) * semigroup_product(f, t).table();
    }
  }
  return f.with_table(std::move(acc));
}

// -int_0^horizon P_t F dt, a quadrature route to L^{-1} for centered F.
template <typename Scalar>
BasicFunctional<Scalar> inverse_L_quadrature(const BasicFunctional<Scalar>& f, Scalar horizon = Scalar(40)) {
  if (max_abs_conditional_mean(f) > Scalar(1e-10)) {
    throw Error(ErrorCode::NotCentered, "max |E[F|Z=z]| exceeds 1e-10");
  }
  return -semigroup_integral(f, horizon);
}

using ChaosDecomposition = BasicChaosDecomposition<double>;

}  // namespace condmall

#endif  // CONDMALL_OPERATORS_HPP
