// Acceptance suite. Usage: acceptance [criterion ...]; with no arguments every
// criterion runs. Prints one PASS/FAIL line per criterion and exits 1 if any fail.

#include "onofri/bubbles.hpp"
#include "onofri/concentration.hpp"
#include "onofri/error.hpp"
#include "onofri/format.hpp"
#include "onofri/meanfield.hpp"
#include "onofri/minimizer.hpp"
#include "onofri/moments.hpp"
#include "onofri/spectral.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace onofri;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kThird = 1.0 / 3.0;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[violated] " << what << "; ";
    }
  }
  void note(const std::string& s) { detail << s << "; "; }
};

std::string r17(double x) { return format_real(x); }

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

void quadrature_exactness(Verdict& v) {
  const auto grid = build_gauss_grid(32);
  double worst = 0.0;
  int count = 0;
  for (int deg = 0; deg <= 4; ++deg)
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        const int c = deg - a - b;
        const double q = integrate(*grid, [&](const Vec3& x) {
          return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c);
        });
        const double exact = (a % 2 || b % 2 || c % 2)
                                 ? 0.0
                                 : 4.0 * kPi * double_factorial(a - 1) * double_factorial(b - 1) *
                                       double_factorial(c - 1) / double_factorial(a + b + c + 1);
        worst = std::max(worst, std::abs(q - exact));
        ++count;
      }
  v.require(worst < 1e-12, "max monomial error < 1e-12");
  v.note(std::to_string(count) + " monomials, max error " + r17(worst));
}

void lambda_algebra(Verdict& v) {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto grid = build_gauss_grid(24);
  double worst_trace = 0.0;
  double worst_equiv = 0.0;
  for (int f = 0; f < 10; ++f) {
    const ScalarField u = synthesize(SHExpansion::random(6, 0.5, 1.0, rng), grid);
    const MomentMatrix l = lambda_matrix(u);
    worst_trace = std::max(worst_trace, std::abs(l.matrix().trace()));
    for (int r = 0; r < 100; ++r) {
      // Haar-random orthogonal matrix (both determinants)
      Eigen::Matrix3d g;
      for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = n(rng);
      Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
      Eigen::Matrix3d q = qr.householderQ();
      const Eigen::Vector3d d = qr.matrixQR().diagonal();
      for (int i = 0; i < 3; ++i) {
        if (d[i] < 0) q.col(i) = -q.col(i);
      }
      const Rotation a(q);
      const MomentMatrix lr = lambda_matrix(u.composed_with(a));
      worst_equiv = std::max(worst_equiv, (lr.matrix() - conjugate(l, a).matrix()).norm());
    }
  }
  v.require(worst_trace < 1e-10, "|trace Lambda| < 1e-10");
  v.require(worst_equiv < 1e-7, "||Lambda(u o A) - A^T Lambda A|| < 1e-7");
  v.note("max trace " + r17(worst_trace) + ", max equivariance defect " + r17(worst_equiv) +
         " over 10 fields x 100 orthogonal maps");
}

void thresholds(Verdict& v) {
  const ConfigSearchOptions opt;
  const ConfigSearchResult pair = min_lambda_over_configs(2, false, opt);
  v.require(pair.infimum == 2.0 / 3.0, "N=2 infimum = 2/3");

  const ConfigSearchResult tri = min_lambda_over_configs(3, false, opt);
  v.require(std::abs(tri.infimum - 1.0 / 6.0) < 1e-6, "N=3 infimum within 1e-6 of 1/6");
  double dot_err = 0.0;
  double w_err = 0.0;
  const auto& at = tri.minimizer.atoms();
  for (std::size_t i = 0; i < at.size(); ++i) {
    w_err = std::max(w_err, std::abs(at[i].weight - 1.0 / 3.0));
    for (std::size_t j = i + 1; j < at.size(); ++j) {
      dot_err = std::max(dot_err, std::abs(at[i].point.vec().dot(at[j].point.vec()) + 0.5));
    }
  }
  v.require(dot_err < 1e-4, "triangle pairwise dot products -1/2 within 1e-4");
  v.require(w_err < 1e-4, "triangle weights 1/3 within 1e-4");

  const ConfigSearchResult tet = min_lambda_over_configs(4, false, opt);
  v.require(std::abs(tet.infimum) < 1e-10, "N=4 free infimum within 1e-10 of 0");

  const ConfigSearchResult even = min_lambda_over_configs(4, true, opt);
  v.require(std::abs(even.infimum - 1.0 / 6.0) < 1e-6, "N=4 even infimum within 1e-6 of 1/6");
  double ortho = 0.0;
  const auto& ea = even.minimizer.atoms();
  for (std::size_t i = 0; i < ea.size(); ++i)
    for (std::size_t j = i + 1; j < ea.size(); ++j) {
      const double d = ea[i].point.vec().dot(ea[j].point.vec());
      ortho = std::max(ortho, std::min(std::abs(d), std::abs(std::abs(d) - 1.0)));
    }
  v.require(ortho < 1e-4, "N=4 even minimizer is two orthogonal antipodal pairs");

  v.note("N=2 " + r17(pair.infimum) + ", N=3 " + r17(tri.infimum) + " (dot err " + r17(dot_err) + ", weight err " +
         r17(w_err) + "), N=4 " + r17(tet.infimum) + ", N=4 even " + r17(even.infimum));
}

void bubble_asymptotics(Verdict& v) {
  const std::vector<std::pair<Configuration, double>> targets{{Configuration::Pair, 2.0 / 3.0},
                                                              {Configuration::Triangle, 1.0 / 6.0},
                                                              {Configuration::Tetrahedron, 0.0},
                                                              {Configuration::Octahedron, 0.0}};
  const std::vector<double> ladder{1e-2, 1e-3, 1e-4};
  for (const auto& [config, lambda_target] : targets) {
    const std::string name = to_string(config);
    std::vector<double> means;
    for (double eps : ladder) {
      const AsymptoticReport r = verify_asymptotics(BubbleSpec::named(config, eps));
      means.push_back(std::abs(r.mean));
      if (eps != 1e-3) continue;
      v.require(std::abs(r.mass_ratio - 1.0) < 0.05, name + " mass ratio within 0.05 of 1");
      v.require(std::abs(r.energy_ratio - 1.0) < 0.05, name + " energy ratio within 0.05 of 1 (got " +
                                                           r17(r.energy_ratio) + ")");
      v.require(std::abs(r.lambda_norm_sq - lambda_target) < 0.02, name + " ||Lambda||^2 within 0.02");
      v.require(r.kw_defect < 1e-6, name + " kw_defect < 1e-6");
      v.note(name + ": mass " + r17(r.mass_ratio) + ", energy " + r17(r.energy_ratio) + ", Lambda^2 " +
             r17(r.lambda_norm_sq) + ", kw " + r17(r.kw_defect));
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < means.size(); ++i) decreasing = decreasing && means[i] < means[i - 1];
    v.require(decreasing, name + " |mean| decreasing along eps = 1e-2, 1e-3, 1e-4 (got " + r17(means[0]) + ", " +
                              r17(means[1]) + ", " + r17(means[2]) + ")");
  }
}

SolutionBranch nontrivial_branch(double a_end) {
  return continue_branch(kThird + 1e-3, a_end, 0.01, true);
}

void mean_field_solver(Verdict& v) {
  std::mt19937_64 rng(55);
  double worst_sup = 0.0;
  int worst_iters = 0;
  for (int k = 0; k < 20; ++k) {
    const AxiProfile init = random_profile(AxiProfile::kDefaultDegree, 0.5, rng);
    const NewtonResult r = newton_solve(0.6, init, 1e-12, 25);
    worst_sup = std::max(worst_sup, r.profile.sup_norm());
    worst_iters = std::max(worst_iters, r.iterations);
  }
  v.require(worst_sup < 1e-10, "a = 0.6 random starts converge to 0");
  v.require(worst_iters <= 25, "at most 25 Newton iterations");
  v.note("a=0.6: max sup " + r17(worst_sup) + ", max iterations " + std::to_string(worst_iters));

  const SolutionBranch b = nontrivial_branch(0.46);
  v.require(!b.failed, "nontrivial continuation reaches 0.46");
  for (double a : {0.36, 0.40, 0.45}) {
    const BranchPoint p = refine_at(b, a);
    const double kw = kazdan_warner_defect(p.profile);
    v.require(p.diagnostics.sup_norm > 1e-3, "nontrivial at a = " + r17(a));
    v.require(p.residual_norm < 1e-10, "residual < 1e-10 at a = " + r17(a));
    v.require(p.diagnostics.mass_defect < 1e-8, "mass_defect < 1e-8 at a = " + r17(a));
    v.require(kw < 1e-8, "kazdan_warner_defect < 1e-8 at a = " + r17(a));
    v.note("a=" + r17(a) + ": sup " + r17(p.diagnostics.sup_norm) + ", residual " + r17(p.residual_norm) +
           ", mass defect " + r17(p.diagnostics.mass_defect) + ", kw " + r17(kw));
  }
}

void near_third(Verdict& v) {
  const SolutionBranch b = nontrivial_branch(kThird + 0.02);
  v.require(!b.failed, "continuation near 1/3");
  const BranchPoint near = refine_at(b, kThird + 1e-3);
  v.require(near.diagnostics.profile_corr > 0.999, "profile_corr > 0.999 at 1/3 + 1e-3");
  v.require(std::abs(near.diagnostics.beta_ratio - 4.0 / 15.0) < 0.02, "|beta_ratio - 4/15| < 0.02 at 1/3 + 1e-3");
  v.note("at 1/3+1e-3: profile_corr " + r17(near.diagnostics.profile_corr) + ", beta_ratio " +
         r17(near.diagnostics.beta_ratio));
  // ||u_hat|| / ||u||_inf^2 as a approaches 1/3: each value at most 5% above the previous one
  std::vector<double> ratios;
  for (double d : {1e-2, 3e-3, 1e-3}) {
    const BranchPoint p = refine_at(b, kThird + d);
    ratios.push_back(p.diagnostics.uhat_l2 / (p.diagnostics.sup_norm * p.diagnostics.sup_norm));
  }
  for (std::size_t i = 1; i < ratios.size(); ++i) {
    v.require(ratios[i] <= 1.05 * ratios[i - 1], "u_hat ratio shows no growth toward 1/3");
  }
  v.note("u_hat/sup^2 at 1/3 + {1e-2, 3e-3, 1e-3}: " + r17(ratios[0]) + ", " + r17(ratios[1]) + ", " + r17(ratios[2]));
}

void blow_up_trend(Verdict& v) {
  const SolutionBranch b = nontrivial_branch(0.48);
  v.require(!b.failed, "continuation reaches 0.48");
  std::vector<const BranchPoint*> pts;
  for (const BranchPoint& p : b.points) {
    if (p.a >= 0.35 - 1e-12 && p.a <= 0.48 + 1e-12) pts.push_back(&p);
  }
  v.require(pts.size() >= 10, "at least 10 branch points in [0.35, 0.48]");
  bool sup_up = true;
  bool lam_up = true;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    sup_up = sup_up && pts[i]->diagnostics.sup_norm > pts[i - 1]->diagnostics.sup_norm;
    lam_up = lam_up && pts[i]->diagnostics.lambda_norm_sq > pts[i - 1]->diagnostics.lambda_norm_sq;
  }
  v.require(sup_up, "sup_norm strictly increasing");
  v.require(lam_up, "lambda_norm_sq strictly increasing");
  const BranchPoint end = refine_at(b, 0.48);
  const double l48 = end.diagnostics.lambda_norm_sq;
  v.require(l48 > 0.5, "lambda_norm_sq(0.48) > 0.5 (got " + r17(l48) + ")");
  v.require(l48 < 2.0 / 3.0, "lambda_norm_sq(0.48) < 2/3");
  // same point at twice the resolution
  const NewtonResult fine = newton_solve(0.48, end.profile.resampled(128), 1e-12);
  v.note(std::to_string(pts.size()) + " points; at 0.48: sup " + r17(end.diagnostics.sup_norm) +
         ", lambda_norm_sq " + r17(l48) + " (degree 128: " + r17(diagnose(fine.profile, 0.48).lambda_norm_sq) + ")");
}

void constrained_minimization(Verdict& v) {
  ConstraintSpec spec;
  spec.c0 = 0.5;
  double worst_j = 0.0;
  double worst_sup = 0.0;
  double worst_lambda = 0.0;
  bool feasible = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const MinimizeResult r = minimize(0.49, spec, random_profile(AxiProfile::kDefaultDegree, 0.1, rng));
    worst_j = std::max(worst_j, std::abs(r.J));
    worst_sup = std::max(worst_sup, r.profile.sup_norm());
    worst_lambda = std::max(worst_lambda, r.lambda.cwiseAbs().maxCoeff());
    feasible = feasible && r.moments_feasible && r.lambda_feasible;
  }
  v.require(worst_j < 1e-6, "|J| < 1e-6");
  v.require(worst_sup < 1e-3, "||u||_inf < 1e-3");
  v.require(worst_lambda < 1e-6, "|lambda_i| < 1e-6");
  v.require(feasible, "all iterates feasible");
  v.note("10 seeds: max |J| " + r17(worst_j) + ", max sup " + r17(worst_sup) + ", max |lambda| " + r17(worst_lambda));
}

void inequality_suites(Verdict& v) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> scale(0.01, 1.5);
  const auto grid = build_gauss_grid(32);
  double min_gap = 1e300;
  double min_jensen = 1e300;
  double min_gap6 = 1e300;
  double min_gap12 = 1e300;
  for (int k = 0; k < 1000; ++k) {
    SHExpansion e = SHExpansion::random(8, scale(rng), 1.5, rng);
    const ScalarField u = synthesize(e, grid);
    const double mean = mean_value(u);
    const double log_mass = std::log(exp_mass(u));
    min_gap = std::min(min_gap, onofri_gap(u));
    min_jensen = std::min(min_jensen, log_mass - 2.0 * mean);

    // avg|grad u|^2 >= 6 avg u^2 off degrees <= 1, >= 12 avg u^2 off degrees <= 2
    for (int cut : {1, 2}) {
      SHExpansion p = e;
      for (int l = 0; l <= cut; ++l)
        for (int m = -l; m <= l; ++m) p(l, m) = 0.0;
      const ScalarField w = synthesize(p, grid);
      const double energy = dirichlet_energy(w) / (4.0 * kPi);
      const double gap = energy - (cut == 1 ? 6.0 : 12.0) * mean_square(w);
      (cut == 1 ? min_gap6 : min_gap12) = std::min(cut == 1 ? min_gap6 : min_gap12, gap);
    }
  }
  v.require(min_gap >= -1e-10, "onofri_gap >= -1e-10");
  v.require(min_jensen >= -1e-12, "Jensen 2 mean <= log avg e^{2u} + 1e-12");
  v.require(min_gap6 >= -1e-9, "6 L^2 spectral bound");
  v.require(min_gap12 >= -1e-9, "12 L^2 spectral bound");
  v.note("1000 fields: min onofri_gap " + r17(min_gap) + ", min Jensen slack " + r17(min_jensen) +
         ", min 6-gap " + r17(min_gap6) + ", min 12-gap " + r17(min_gap12));
}

void gradient_correctness(Verdict& v) {
  std::mt19937_64 rng(31);
  const double h = 1e-5;
  double worst_g = 0.0;
  double worst_j = 0.0;
  for (int k = 0; k < 20; ++k) {
    const AxiProfile u = random_profile(AxiProfile::kDefaultDegree, 0.8, rng);
    const AxiProfile phi = random_profile(AxiProfile::kDefaultDegree, 1.0, rng);
    const double a = 0.35 + 0.03 * k;
    const double fd = (functional_J(u + phi * h, a) - functional_J(u + phi * (-h), a)) / (2 * h);
    const double an = u.average((gradient_J(u, a).array() * phi.values().array()).matrix());
    worst_g = std::max(worst_g, std::abs(fd - an) / std::abs(an));

    const Eigen::VectorXd rfd = (residual(u + phi * h, a) - residual(u + phi * (-h), a)) / (2 * h);
    const Eigen::VectorXd jd = residual_jacobian(u, a) * phi.values();
    worst_j = std::max(worst_j, (rfd - jd).norm() / jd.norm());
  }
  v.require(worst_g < 1e-6, "gradient_J relative error < 1e-6");
  v.require(worst_j < 1e-6, "Jacobian relative error < 1e-6");
  v.note("max relative errors: gradient " + r17(worst_g) + ", Jacobian " + r17(worst_j));
}

struct Criterion {
  const char* title;
  std::function<void(Verdict&)> run;
};

const std::map<int, Criterion>& criteria() {
  static const std::map<int, Criterion> table{
      {1, {"quadrature exactness", quadrature_exactness}},
      {2, {"Lambda algebra", lambda_algebra}},
      {3, {"concentration thresholds", thresholds}},
      {4, {"bubble asymptotics", bubble_asymptotics}},
      {5, {"mean field solver", mean_field_solver}},
      {6, {"near-1/3 expansion", near_third}},
      {7, {"blow-up trend", blow_up_trend}},
      {8, {"constrained minimization", constrained_minimization}},
      {9, {"inequality property suites", inequality_suites}},
      {10, {"gradient correctness", gradient_correctness}},
  };
  return table;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    try {
      selected.push_back(std::stoi(argv[i]));
    } catch (const std::exception&) {
      std::cerr << "usage: acceptance [criterion ...]\n";
      return 2;
    }
  }
  if (selected.empty()) {
    for (const auto& [k, c] : criteria()) selected.push_back(k);
  }
  int failures = 0;
  for (int k : selected) {
    const auto it = criteria().find(k);
    if (it == criteria().end()) {
      std::cerr << "unknown criterion " << k << '\n';
      return 2;
    }
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      it->second.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::ostringstream line;
    line.precision(3);
    line << "criterion " << k << " (" << it->second.title << "): " << (v.pass ? "PASS" : "FAIL") << " [" << std::fixed
         << secs << " s] " << v.detail.str();
    std::cout << line.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
