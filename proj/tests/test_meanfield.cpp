#include "onofri/error.hpp"
#include "onofri/meanfield.hpp"
#include "onofri/minimizer.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace onofri;

namespace {

AxiProfile p2_seed(double amplitude, int l_max = 64) {
  return AxiProfile::from_function(l_max, [amplitude](double t) { return amplitude * 1.5 * (t * t - 1.0 / 3.0); });
}

}  // namespace

TEST_CASE("coefficients and values stay consistent") {
  std::mt19937_64 rng(1);
  const AxiProfile u = random_profile(64, 1.0, rng, 20);
  const AxiProfile v = AxiProfile::from_values(64, u.values());
  CHECK((v.coefficients() - u.coefficients()).lpNorm<Eigen::Infinity>() < 1e-10);
  for (double t : {-1.0, -0.3, 0.0, 0.77, 1.0}) {
    double direct = 0.0;
    double p0 = 1.0, p1 = t;
    direct += u.coefficients()[0] + u.coefficients()[1] * t;
    for (int l = 2; l <= 64; ++l) {
      const double p2 = ((2.0 * l - 1.0) * t * p1 - (l - 1.0) * p0) / l;
      direct += u.coefficients()[l] * p2;
      p0 = p1;
      p1 = p2;
    }
    CHECK(u(t) == doctest::Approx(direct).epsilon(1e-13));
  }
  CHECK_THROWS_AS(AxiProfile::zero(16), DomainError);
}

TEST_CASE("derivative against differences") {
  const AxiProfile u = AxiProfile::from_function(40, [](double t) { return std::sin(2 * t) + t * t * t; });
  for (double t : {-0.9, -0.2, 0.4, 0.95}) {
    CHECK(u.derivative(t) == doctest::Approx(2 * std::cos(2 * t) + 3 * t * t).epsilon(1e-10));
  }
  CHECK(u.derivative(1.0) == doctest::Approx(2 * std::cos(2.0) + 3).epsilon(1e-9));
  CHECK(u.derivative(-1.0) == doctest::Approx(2 * std::cos(-2.0) + 3).epsilon(1e-9));
}

TEST_CASE("residual examples") {
  const AxiProfile zero = AxiProfile::zero();
  CHECK(residual(zero, 0.7).lpNorm<Eigen::Infinity>() == 0.0);

  const AxiProfile c = AxiProfile::zero().plus_constant(0.2);
  const Eigen::VectorXd rc = residual(c, 0.5);
  CHECK((rc.array() - (1.0 - std::exp(0.4))).abs().maxCoeff() < 1e-11);

  // u = x3^2 - 1/3 at a = 1/3: -a Delta u = 2u
  const AxiProfile q = AxiProfile::from_function(64, [](double t) { return t * t - 1.0 / 3.0; });
  const Eigen::VectorXd r = residual(q, 1.0 / 3.0);
  const Eigen::VectorXd& t = q.basis().nodes;
  for (Eigen::Index k = 0; k < t.size(); ++k) {
    const double u = t[k] * t[k] - 1.0 / 3.0;
    CHECK(r[k] == doctest::Approx(2 * u + 1 - std::exp(2 * u)).epsilon(1e-11).scale(1.0));
  }
  // 65 nodes: the middle one is t = 0
  CHECK(std::abs(t[32]) < 1e-15);
  CHECK(r[32] == doctest::Approx(-2.0 / 3.0 + 1 - std::exp(-2.0 / 3.0)).epsilon(1e-12));

  const AxiProfile big = AxiProfile::zero().plus_constant(400.0);
  CHECK_THROWS_AS(residual(big, 0.5), OverflowError);
  CHECK_THROWS_AS(residual(zero, 0.0), DomainError);
}

TEST_CASE("trivial spectrum crossings") {
  auto zero_at = [](double a) {
    std::vector<int> ls;
    for (auto [l, ev] : trivial_spectrum(a)) {
      if (std::abs(ev) < 1e-14) ls.push_back(l);
    }
    return ls;
  };
  CHECK(zero_at(1.0 / 3.0) == std::vector<int>{2});
  CHECK(zero_at(1.0) == std::vector<int>{1});
  CHECK(zero_at(1.0 / 6.0) == std::vector<int>{3});
  const auto half = trivial_spectrum(0.5, 3);
  CHECK(half[0].second == -2.0);
  CHECK(half[1].second == -1.0);
  CHECK(half[2].second == 1.0);
  CHECK(half[3].second == 4.0);
}

TEST_CASE("Jacobian directional derivative") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 10; ++k) {
    const AxiProfile u = random_profile(64, 0.8, rng);
    const AxiProfile phi = random_profile(64, 1.0, rng);
    const double a = 0.45;
    const double h = 1e-5;
    const Eigen::VectorXd fd =
        (residual(u + phi * h, a) - residual(u + phi * (-h), a)) / (2 * h);
    const Eigen::VectorXd jd = residual_jacobian(u, a) * phi.values();
    CHECK((fd - jd).norm() / jd.norm() < 1e-6);
  }
}

TEST_CASE("Newton at a = 0.6 returns to zero") {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const NewtonResult r = newton_solve(0.6, random_profile(64, 0.5, rng), 1e-12);
    CHECK(r.profile.sup_norm() < 1e-10);
    CHECK(r.iterations <= 25);
  }
}

TEST_CASE("Newton special cases") {
  const NewtonResult r = newton_solve(1.0 / 3.0, AxiProfile::zero(), 1e-12);
  CHECK(r.iterations <= 1);
  CHECK(r.profile.sup_norm() == 0.0);
  // forcing a step at a singular linearization
  try {
    newton_solve(1.0, AxiProfile::zero(), 0.0, 5);
    FAIL("expected a singular Jacobian");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("singular") != std::string::npos);
    CHECK(!e.trace().empty());
  }
}

TEST_CASE("nontrivial solution at a = 0.4") {
  const NewtonResult r = newton_solve(0.4, p2_seed(0.5), 1e-12);
  CHECK(r.residual_norm < 1e-10);
  const Diagnostics d = diagnose(r.profile, 0.4);
  CHECK(d.sup_norm > 0.5);
  CHECK(d.mass_defect < 1e-8);
  CHECK(kazdan_warner_defect(r.profile) < 1e-8);
  CHECK(d.lambda_norm_sq < 2.0 / 3.0);
  CHECK(d.profile_corr <= 1.0);
  CHECK(d.profile_corr > 0.9);
}

TEST_CASE("Kazdan-Warner defect of x3") {
  const AxiProfile u = AxiProfile::from_function(64, [](double t) { return t; });
  CHECK(kazdan_warner_defect(AxiProfile::zero()) < 1e-15);
  CHECK(kazdan_warner_defect(u) == doctest::Approx(std::exp(2.0) / 8 + 3 * std::exp(-2.0) / 8).epsilon(1e-13));
}

TEST_CASE("diagnostics of a pure P2 profile") {
  const AxiProfile u = p2_seed(0.01);
  const Diagnostics d = diagnose(u, 0.4);
  CHECK(d.profile_corr == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(d.sup_norm == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(d.mean == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("profile field agrees with the Legendre energy") {
  std::mt19937_64 rng(2);
  const AxiProfile u = random_profile(40, 0.7, rng, 6);
  const ScalarField f = u.to_field(build_gauss_grid(24));
  double e = 0.0;
  for (int l = 1; l <= 40; ++l) e += l * (l + 1.0) * std::pow(u.coefficients()[l], 2) / (2.0 * l + 1.0);
  CHECK(dirichlet_energy(f) / (4 * std::numbers::pi) == doctest::Approx(e).epsilon(1e-12));
  CHECK(mean_value(f) == doctest::Approx(u.coefficients()[0]).scale(1.0));
}

TEST_CASE("trivial branch stays at zero") {
  const SolutionBranch b = continue_branch(0.34, 0.6, 0.02, false);
  CHECK(!b.failed);
  REQUIRE(b.points.size() >= 10);
  CHECK(b.points.back().a == doctest::Approx(0.6));
  for (const BranchPoint& p : b.points) CHECK(p.diagnostics.sup_norm < 1e-10);
  CHECK_THROWS_AS(continue_branch(0.2, 0.5, 0.01, false), DomainError);
  CHECK_THROWS_AS(continue_branch(0.4, 1.0, 0.01, false), DomainError);
}

TEST_CASE("nontrivial branch from the bifurcation") {
  const SolutionBranch b = continue_branch(1.0 / 3.0 + 1e-3, 0.46, 0.01, true);
  CHECK(!b.failed);
  REQUIRE(b.points.size() > 5);
  for (std::size_t i = 1; i < b.points.size(); ++i) {
    CHECK(b.points[i].a > b.points[i - 1].a);
    CHECK(b.points[i].diagnostics.sup_norm > b.points[i - 1].diagnostics.sup_norm);
    CHECK(b.points[i].diagnostics.lambda_norm_sq > b.points[i - 1].diagnostics.lambda_norm_sq);
    CHECK(b.points[i].residual_norm < 1e-10);
  }
  const auto rows = near_third_report(b, 0.02);
  REQUIRE(!rows.empty());
  CHECK(rows.front().profile_corr > 0.999);
  CHECK(std::abs(rows.front().beta_ratio - 4.0 / 15.0) < 0.02);

  const BranchPoint p = refine_at(b, 0.4);
  CHECK(p.a == 0.4);
  CHECK(p.residual_norm < 1e-10);
  CHECK(p.diagnostics.mass_defect < 1e-8);
}

TEST_CASE("branch switch from below 1/3") {
  const SolutionBranch b = continue_branch(0.32, 0.36, 0.005, true);
  CHECK(!b.failed);
  bool trivial_below = true;
  for (const BranchPoint& p : b.points) {
    if (p.a < 1.0 / 3.0) trivial_below = trivial_below && p.diagnostics.sup_norm == 0.0;
  }
  CHECK(trivial_below);
  CHECK(b.points.back().diagnostics.sup_norm > 0.1);
}

TEST_CASE("branch CSV") {
  CHECK(branch_csv_header() ==
        "a,sup_norm,mean,beta,lambda_norm_sq,beta_ratio,profile_corr,uhat_l2,mass_defect,kw3,newton_iters");
  const SolutionBranch b = continue_branch(0.4, 0.41, 0.01, false);
  const std::string row = branch_csv_row(b.points.front());
  CHECK(std::count(row.begin(), row.end(), ',') == 10);
}
