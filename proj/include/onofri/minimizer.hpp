#pragma once

#include "onofri/fields.hpp"
#include "onofri/meanfield.hpp"

#include <random>
#include <string>

namespace onofri {

enum class ConstraintMode { Backtrack, Penalty };

/// ||Lambda(u)||^2 <= c0 with c0 in (0, 2/3).
struct ConstraintSpec {
  double c0 = 0.5;
  ConstraintMode mode = ConstraintMode::Backtrack;
  double penalty_weight = 1e4;

  void validate() const;
};

/// a avg|grad u|^2 + 2 avg u - log avg e^{2u}.
double functional_J(const AxiProfile& u, double a);
double functional_J(const ScalarField& u, double a);

/// a avg|grad u|^2 + 2 avg u.
double functional_S(const AxiProfile& u, double a);

/// L2(avg) gradient density 2(-a Delta u + 1 - e^{2u} / avg e^{2u}) at the nodes.
/// Exact for the node-quadrature discretization of functional_J.
Eigen::VectorXd gradient_J(const AxiProfile& u, double a);

/// u = (1/2) log(e^{2w} - 3 avg(e^{2w} x3) x3). Throws DomainError naming the
/// first node where the adjusted density is not positive.
AxiProfile retract_to_M1(const AxiProfile& w);

/// (0, 0, 3 avg((-a Delta u + 1) e^{-2u} x3)).
Vec3 multipliers(const AxiProfile& u, double a);

/// max over nodes of |-a Delta u + 1 - e^{2u}(1 + lambda . x)|.
double stationarity_residual(const AxiProfile& u, double a);

/// ||Lambda(u)||^2 for an axisymmetric profile (3/2 Lambda_33^2).
double profile_lambda_norm_sq(const AxiProfile& u);

struct MinimizeOptions {
  int max_iter = 5000;
  double grad_tol = 1e-8;
};

struct MinimizeResult {
  AxiProfile profile = AxiProfile::zero(AxiProfile::kMinDegree);
  double a = 0.0;
  double c0 = 0.0;
  double J = 0.0;
  double S = 0.0;
  Vec3 lambda = Vec3::Zero();
  int iterations = 0;
  double gradient_norm = 0.0;
  double stationarity = 0.0;
  bool moments_feasible = true;  // every accepted iterate: |avg e^{2u} x3| < 1e-8
  bool lambda_feasible = true;   // every accepted iterate: ||Lambda||^2 <= c0 + 1e-10
  bool converged = false;
};

/// Projected descent for J_a over {avg e^{2u} x = 0, ||Lambda||^2 <= c0} among
/// axisymmetric profiles. Each step: direction -(2(aK + I))^{-1} g projected onto
/// the tangent space of the moment constraint, Armijo backtracking, retraction,
/// mass normalization, and (backtrack mode) rejection of steps violating the
/// Lambda bound. Requires a in (1/3, 1).
MinimizeResult minimize(double a, const ConstraintSpec& spec, const AxiProfile& init,
                        const MinimizeOptions& options = {});

/// Random profile of degree l_max with modes 1..degree, scaled to the given sup norm.
AxiProfile random_profile(int l_max, double sup, std::mt19937_64& rng, int degree = 8);

/// {a, c0, J, S_a, lambda:[...], iters, feasible:{moments, lambda_bound}, sup_norm}
std::string to_json(const MinimizeResult& result);

}  // namespace onofri
