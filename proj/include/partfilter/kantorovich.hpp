#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "partfilter/error.hpp"
#include "partfilter/measure.hpp"
#include "partfilter/test_function.hpp"
#include "partfilter/transport.hpp"
#include "partfilter/vector.hpp"

namespace partfilter {

/// A coupling of two discrete measures: entries index atoms of each side.
struct TransportPlan {
  std::vector<TransportEntry> entries;
  double cost = 0.0;
};

struct KantorovichResult {
  double distance = 0.0;
  TransportPlan plan;
};

/// Exact Kantorovich distance with l1 ground metric between two finite atom
/// lists of equal total mass. Works for sub-probability measures as well.
inline KantorovichResult kantorovich_distance(std::span<const Atom> mu, std::span<const Atom> nu) {
  if (mu.empty() || nu.empty()) throw InvariantError("measure has nonempty support", "");
  std::vector<double> supply, demand, cost(mu.size() * nu.size());
  for (const auto& a : mu) supply.push_back(a.weight);
  for (const auto& b : nu) demand.push_back(b.weight);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu[i].point.size() != nu.front().point.size()) throw InvariantError("measures share one state space", "");
    for (std::size_t j = 0; j < nu.size(); ++j) cost[i * nu.size() + j] = l1_distance(mu[i].point, nu[j].point);
  }
  auto sol = solve_transport(supply, demand, cost);
  return {sol.cost, {std::move(sol.entries), sol.cost}};
}

inline KantorovichResult kantorovich_distance(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return kantorovich_distance(std::span<const Atom>(mu.atoms()), std::span<const Atom>(nu.atoms()));
}

/// <u, mu> - <u, nu>: a lower bound on d_K(mu, nu) whenever gamma(u) <= 1.
inline double dual_lower_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const TestFunction& u) {
  if (u.lipschitz() && *u.lipschitz() > 1.0 + 1e-12)
    throw InvariantError("dual test function has Lipschitz seminorm <= 1", "gamma = " + format_roundtrip(*u.lipschitz()));
  auto f = [&](std::span<const double> x) { return u(x); };
  return mu.integrate(f) - nu.integrate(f);
}

/// v = sum_i sgn(b(mu)_i - b(nu)_i) (x)_i; attains ||b(mu) - b(nu)|| in the
/// dual bound.
inline TestFunction barycenter_sign_function(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  const auto a = barycenter(mu), b = barycenter(nu);
  std::vector<double> eps(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) eps[i] = (a[i] > b[i]) ? 1.0 : (a[i] < b[i] ? -1.0 : 0.0);
  return TestFunction::affine_max({AffinePiece{std::move(eps), 0.0}});
}

/// ||b(mu) - b(nu)||_1, never larger than d_K(mu, nu).
inline double barycenter_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
  return l1_distance(barycenter(mu), barycenter(nu));
}

struct RetargetResult {
  std::vector<ProbVector> zeta;
  std::vector<Atom> psi;  // (beta_k, zeta_k), same weights as the input
  double cost = 0.0;      // sum_k beta_k ||xi_k - zeta_k||
};

/// Moves the atoms of phi = sum beta_k delta_{xi_k} so that the barycenter
/// sum beta_k zeta_k equals b, at total displacement exactly ||a - b||
/// where a = sum beta_k xi_k. By the barycenter lower bound that makes the
/// coupling (xi_k, zeta_k) optimal.
///
/// Atoms are processed from the last to the first. At each stage the
/// residual targets a, b define the excess set S1 = {a_i > b_i} and deficit
/// set S2 = {a_i < b_i}; the current atom sheds min(beta xi_i, a_i - b_i) from
/// each i in S1 with xi_i > 0 into S2, allocated greedily in ascending index
/// order against the deficits b_j - a_j. The last remaining atom takes the
/// residual b / beta.
inline RetargetResult retarget_barycenter(std::span<const Atom> phi, const NonnegVector& b_target) {
  if (phi.empty()) throw InvariantError("measure has nonempty support", "");
  const std::size_t n = phi.front().point.size();
  if (b_target.coords.size() != n) throw InvariantError("target vector lives on the measure's state space", "");
  std::vector<double> a(n, 0.0), b = b_target.coords;
  for (const auto& atom : phi) {
    if (!(atom.weight > 0.0)) throw InvariantError("atom weights are positive", "");
    if (atom.point.size() != n) throw InvariantError("atoms share one state space", "");
    for (std::size_t i = 0; i < n; ++i) a[i] += atom.weight * atom.point[i];
  }
  const double na = l1_norm(a), nb = l1_norm(b);
  if (std::abs(na - nb) > kProbTolerance * std::max(1.0, na))
    throw InvariantError("||b|| = ||a|| within 1e-9", format_roundtrip(nb) + " vs " + format_roundtrip(na));

  const std::size_t count = phi.size();
  std::vector<ProbVector> zeta(count);
  // Tiny residual differences are float noise from earlier stages.
  const double noise = 1e-15 * std::max(1.0, na);
  for (std::size_t k = count; k-- > 0;) {
    const double beta = phi[k].weight;
    const auto& xi = phi[k].point;
    if (k == 0) {
      std::vector<double> z(n);
      for (std::size_t i = 0; i < n; ++i) z[i] = std::max(0.0, b[i]) / beta;
      zeta[0] = ProbVector::normalized(std::move(z));
      break;
    }
    std::vector<double> z(xi.values());
    std::vector<double> deficit(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (b[j] - a[j] > noise) deficit[j] = b[j] - a[j];
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(a[i] - b[i] > noise) || !(xi[i] > 0.0)) continue;  // i not in R1
      double need = std::min(beta * xi[i], a[i] - b[i]);
      while (need > 0.0 && j < n) {
        if (deficit[j] <= 0.0) {
          ++j;
          continue;
        }
        const double t = std::min(need, deficit[j]);
        z[i] -= t / beta;
        z[j] += t / beta;
        deficit[j] -= t;
        need -= t;
        if (deficit[j] <= 0.0) ++j;
      }
    }
    for (double& v : z) v = std::max(0.0, v);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] -= beta * xi[i];
      b[i] -= beta * z[i];
    }
    zeta[k] = ProbVector::normalized(std::move(z));
  }

  RetargetResult out;
  KahanSum cost;
  for (std::size_t k = 0; k < count; ++k) {
    cost += phi[k].weight * l1_distance(phi[k].point, zeta[k]);
    out.psi.push_back({phi[k].weight, zeta[k]});
  }
  out.zeta = std::move(zeta);
  out.cost = cost.value();
  return out;
}

inline RetargetResult retarget_barycenter(const DiscreteMeasure& phi, const ProbVector& q) {
  return retarget_barycenter(std::span<const Atom>(phi.atoms()), NonnegVector(q.values()));
}

/// d_K(mu, P(K|q)) = ||b(mu) - q||.
inline double distance_to_fiber(const DiscreteMeasure& mu, const ProbVector& q) {
  return l1_distance(barycenter(mu), q);
}

/// A measure with barycenter q at distance distance_to_fiber(mu, q) from mu.
inline DiscreteMeasure fiber_witness(const DiscreteMeasure& mu, const ProbVector& q) {
  return DiscreteMeasure::normalized(retarget_barycenter(mu, q).psi);
}

struct FiberMass {
  double mass = 0.0;
  bool pass = false;
};

/// mu{x : (x)_i >= q_i / 2} against the lower bound q_i / 2, for mu with
/// barycenter q.
inline FiberMass fiber_mass_check(const DiscreteMeasure& mu, std::size_t i) {
  const auto q = barycenter(mu);
  if (i >= q.size()) throw InvariantError("state index in range", std::to_string(i));
  if (!(q[i] > 0.0)) throw InvariantError("fiber mass check needs (q)_i > 0", "state " + std::to_string(i));
  KahanSum mass;
  for (const auto& a : mu.atoms())
    if (a.point[i] >= q[i] / 2.0) mass += a.weight;
  return {mass.value(), mass.value() >= q[i] / 2.0 - 1e-12};
}

}  // namespace partfilter
