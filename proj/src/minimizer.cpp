#include "onofri/minimizer.hpp"

#include "onofri/error.hpp"

#include "json.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace onofri {

namespace {

double avg(const AxiProfile& u, const Eigen::VectorXd& f) { return u.average(f); }

Eigen::VectorXd exp2u(const AxiProfile& u) {
  if (!(2.0 * u.values().maxCoeff() <= 700.0)) throw OverflowError("e^{2u} overflows");
  return (2.0 * u.values().array()).exp().matrix();
}

// Constant shift so that avg e^{2u} = 1.
AxiProfile normalize_mass(const AxiProfile& u) {
  return u.plus_constant(-0.5 * std::log(avg(u, exp2u(u))));
}

double moment3(const AxiProfile& u) {
  return avg(u, (exp2u(u).array() * u.basis().nodes.array()).matrix());
}

}  // namespace

void ConstraintSpec::validate() const {
  if (!(c0 > 0.0 && c0 < 2.0 / 3.0)) throw DomainError("ConstraintSpec: c0 must lie in (0, 2/3)");
  if (mode == ConstraintMode::Penalty && !(penalty_weight > 0.0)) {
    throw DomainError("ConstraintSpec: penalty weight must be positive");
  }
}

double functional_S(const AxiProfile& u, double a) {
  const Eigen::VectorXd& c = u.coefficients();
  double energy = 0.0;
  for (Eigen::Index l = 1; l < c.size(); ++l) {
    energy += static_cast<double>(l) * (l + 1.0) * c[l] * c[l] / (2.0 * l + 1.0);
  }
  return a * energy + 2.0 * c[0];
}

double functional_J(const AxiProfile& u, double a) {
  return functional_S(u, a) - std::log(avg(u, exp2u(u)));
}

double functional_J(const ScalarField& u, double a) {
  return a * dirichlet_energy(u) / (4.0 * std::numbers::pi) + 2.0 * mean_value(u) - std::log(exp_mass(u));
}

Eigen::VectorXd gradient_J(const AxiProfile& u, double a) {
  const Eigen::VectorXd e = exp2u(u);
  const double m = avg(u, e);
  return 2.0 * (a * u.minus_laplacian() + Eigen::VectorXd::Ones(e.size()) - e / m);
}

AxiProfile retract_to_M1(const AxiProfile& w) {
  const Eigen::VectorXd e = exp2u(w);
  const Eigen::VectorXd& t = w.basis().nodes;
  const double m3 = avg(w, (e.array() * t.array()).matrix());
  const Eigen::VectorXd rho = e - 3.0 * m3 * t;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (!(rho[k] > 0.0)) {
      std::ostringstream os;
      os << "retract_to_M1: adjusted density " << rho[k] << " is not positive at node " << k << " (x3 = " << t[k]
         << ")";
      throw DomainError(os.str());
    }
  }
  return AxiProfile::from_values(w.l_max(), (0.5 * rho.array().log()).matrix());
}

Vec3 multipliers(const AxiProfile& u, double a) {
  exp2u(u);
  const Eigen::ArrayXd f = (a * u.minus_laplacian()).array() + 1.0;
  const Eigen::ArrayXd g = f * (-2.0 * u.values().array()).exp() * u.basis().nodes.array();
  return Vec3(0.0, 0.0, 3.0 * avg(u, g.matrix()));
}

double stationarity_residual(const AxiProfile& u, double a) {
  const double l3 = multipliers(u, a)[2];
  const Eigen::ArrayXd e = exp2u(u).array();
  const Eigen::ArrayXd r =
      (a * u.minus_laplacian()).array() + 1.0 - e * (1.0 + l3 * u.basis().nodes.array());
  return r.abs().maxCoeff();
}

double profile_lambda_norm_sq(const AxiProfile& u) {
  const Eigen::ArrayXd e = exp2u(u).array();
  const Eigen::ArrayXd t = u.basis().nodes.array();
  const double beta = avg(u, (e * (t * t - 1.0 / 3.0)).matrix()) / avg(u, e.matrix());
  return 1.5 * beta * beta;
}

MinimizeResult minimize(double a, const ConstraintSpec& spec, const AxiProfile& init, const MinimizeOptions& opt) {
  if (!(a > 1.0 / 3.0 && a < 1.0)) throw DomainError("minimize: a must lie in (1/3, 1)");
  spec.validate();

  const LegendreBasis& b = init.basis();
  const Eigen::VectorXd& t = b.nodes;
  const Eigen::VectorXd half_w = 0.5 * b.weights;
  Eigen::MatrixXd precond = 2.0 * a * b.stiffness;
  precond.diagonal().array() += 2.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> plu(precond);

  MinimizeResult res;
  res.a = a;
  res.c0 = spec.c0;

  auto violation = [&](const AxiProfile& u) { return std::max(0.0, profile_lambda_norm_sq(u) - spec.c0); };
  auto objective = [&](const AxiProfile& u) {
    double j = functional_J(u, a);
    if (spec.mode == ConstraintMode::Penalty) {
      const double v = violation(u);
      j += spec.penalty_weight * v * v;
    }
    return j;
  };
  auto objective_gradient = [&](const AxiProfile& u) {
    Eigen::VectorXd g = gradient_J(u, a);
    if (spec.mode == ConstraintMode::Penalty) {
      const double v = violation(u);
      if (v > 0.0) {
        // d||Lambda||^2 = 3 beta d beta, beta = avg(e (t^2 - 1/3)) with avg e = 1
        const Eigen::ArrayXd e = exp2u(u).array();
        const Eigen::ArrayXd q = t.array() * t.array() - 1.0 / 3.0;
        const double beta = avg(u, (e * q).matrix());
        const Eigen::ArrayXd dbeta = 2.0 * e * (q - beta);
        g += (2.0 * spec.penalty_weight * v * 3.0 * beta * dbeta).matrix();
      }
    }
    return g;
  };

  AxiProfile u = normalize_mass(retract_to_M1(init));
  if (spec.mode == ConstraintMode::Backtrack && violation(u) > 1e-10) {
    throw DomainError("minimize: the initial profile violates the Lambda bound after retraction");
  }
  double j = objective(u);

  for (int it = 0;; ++it) {
    const Eigen::VectorXd g = objective_gradient(u);
    const Eigen::VectorXd nrm = (exp2u(u).array() * t.array()).matrix();
    // gradient with the moment normal removed (avg inner product)
    const double mu = half_w.dot((g.array() * nrm.array()).matrix()) / half_w.dot(nrm.cwiseAbs2());
    const Eigen::VectorXd gp = g - mu * nrm;
    res.gradient_norm = std::sqrt(half_w.dot(gp.cwiseAbs2()));
    res.iterations = it;
    if (res.gradient_norm < opt.grad_tol) {
      res.converged = true;
      break;
    }
    if (it >= opt.max_iter) break;

    // preconditioned direction, projected so the linearized moment stays zero
    const Eigen::VectorXd pg = plu.solve(g);
    const Eigen::VectorXd pn = plu.solve(nrm);
    Eigen::VectorXd d = -(pg - (half_w.dot((nrm.array() * pg.array()).matrix()) /
                                half_w.dot((nrm.array() * pn.array()).matrix())) *
                                   pn);
    const double slope = half_w.dot((g.array() * d.array()).matrix());
    if (!(slope < 0.0)) {
      throw ConvergenceError("minimize: no descent direction at iteration " + std::to_string(it), {});
    }

    bool accepted = false;
    for (double step = 1.0; step >= 1e-12; step *= 0.5) {
      AxiProfile trial = u;
      try {
        trial = normalize_mass(retract_to_M1(AxiProfile::from_values(b.l_max, u.values() + step * d)));
      } catch (const Error&) {
        continue;
      }
      if (spec.mode == ConstraintMode::Backtrack && violation(trial) > 1e-10) continue;
      const double jt = objective(trial);
      if (jt <= j + 1e-4 * step * slope + 1e-14 * (1.0 + std::abs(j))) {
        u = std::move(trial);
        j = jt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("minimize: J not decreased after backtracking at iteration " + std::to_string(it),
                             {"gradient norm " + std::to_string(res.gradient_norm)});
    }
    if (std::abs(moment3(u)) >= 1e-8) res.moments_feasible = false;
    if (profile_lambda_norm_sq(u) > spec.c0 + 1e-10) res.lambda_feasible = false;
  }

  res.profile = u;
  res.J = functional_J(u, a);
  res.S = functional_S(u, a);
  res.lambda = multipliers(u, a);
  res.stationarity = stationarity_residual(u, a);
  return res;
}

AxiProfile random_profile(int l_max, double sup, std::mt19937_64& rng, int degree) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(l_max + 1);
  for (int l = 1; l <= std::min(degree, l_max); ++l) c[l] = normal(rng) / (1.0 + l);
  AxiProfile u = AxiProfile::from_coefficients(c);
  const double s = u.sup_norm();
  return s > 0.0 ? u * (sup / s) : u;
}

std::string to_json(const MinimizeResult& r) {
  nlohmann::ordered_json j;
  j["a"] = r.a;
  j["c0"] = r.c0;
  j["J"] = r.J;
  j["S_a"] = r.S;
  j["lambda"] = {r.lambda[0], r.lambda[1], r.lambda[2]};
  j["iters"] = r.iterations;
  j["feasible"] = {{"moments", r.moments_feasible}, {"lambda_bound", r.lambda_feasible}};
  j["sup_norm"] = r.profile.sup_norm();
  return j.dump(2, ' ', false, nlohmann::json::error_handler_t::strict);
}

}  // namespace onofri
