#pragma once

#include "onofri/fields.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace onofri {

/// Legendre-Gauss collocation data for degree L_max: L_max + 1 nodes in t = x3.
struct LegendreBasis {
  int l_max = 0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;     // sum 2
  Eigen::MatrixXd vandermonde; // (k, l) -> P_l(t_k)
  Eigen::MatrixXd analysis;    // values -> coefficients
  Eigen::MatrixXd stiffness;   // -Laplace-Beltrami acting on node values

  /// Shared instance per degree.
  static std::shared_ptr<const LegendreBasis> get(int l_max);
};

/// An axisymmetric field u(x3) = sum_l c_l P_l(x3), stored by coefficients and
/// by values at the Legendre-Gauss nodes. Both views are kept consistent.
class AxiProfile {
 public:
  static constexpr int kMinDegree = 32;
  static constexpr int kDefaultDegree = 64;

  static AxiProfile zero(int l_max = kDefaultDegree);
  static AxiProfile from_coefficients(Eigen::VectorXd coefficients);
  static AxiProfile from_values(int l_max, Eigen::VectorXd values);
  /// Interpolates f at the nodes.
  static AxiProfile from_function(int l_max, const std::function<double(double)>& f);

  int l_max() const { return basis_->l_max; }
  const LegendreBasis& basis() const { return *basis_; }
  const Eigen::VectorXd& coefficients() const { return coeffs_; }
  const Eigen::VectorXd& values() const { return values_; }

  double operator()(double t) const;
  double derivative(double t) const;

  /// Node values of -Laplace-Beltrami u.
  Eigen::VectorXd minus_laplacian() const;

  /// Truncates or zero-pads the expansion.
  AxiProfile resampled(int l_max) const;

  AxiProfile operator+(const AxiProfile& other) const;
  AxiProfile operator*(double s) const;
  AxiProfile plus_constant(double c) const;

  /// avg over the sphere of f(t) = (1/2) int f dt, by the node rule.
  double average(const Eigen::VectorXd& node_values) const;

  /// max |u| over the nodes and the poles t = +-1.
  double sup_norm() const;

  /// Sphere field with closed-form value and gradient.
  ScalarField to_field(std::shared_ptr<const QuadratureGrid> grid) const;

 private:
  AxiProfile(std::shared_ptr<const LegendreBasis> basis, Eigen::VectorXd coeffs, Eigen::VectorXd values);

  std::shared_ptr<const LegendreBasis> basis_;
  Eigen::VectorXd coeffs_;
  Eigen::VectorXd values_;
};

struct Diagnostics {
  double mass_defect = 0.0;    // |avg e^{2u} - 1|
  double kw3 = 0.0;            // avg e^{2u} x3
  double beta = 0.0;           // Lambda_33
  double lambda_norm_sq = 0.0; // 3/2 beta^2 for axisymmetric fields
  double sup_norm = 0.0;
  double mean = 0.0;
  double beta_ratio = 0.0;     // beta / sup_norm
  double profile_corr = 0.0;   // L2 correlation of u - mean with P_2 = (3/2)(x3^2 - 1/3)
  double uhat_l2 = 0.0;        // L2(S^2) norm of u - mean - (15/(8a)) beta (x3^2 - 1/3)
};

Diagnostics diagnose(const AxiProfile& u, double a);

/// r = -a Delta u + 1 - e^{2u} at the nodes. Throws OverflowError when 2 max u > 700.
Eigen::VectorXd residual(const AxiProfile& u, double a);

/// Jacobian of residual with respect to node values: a K - diag(2 e^{2u}).
Eigen::MatrixXd residual_jacobian(const AxiProfile& u, double a);

/// Eigenvalues a l(l+1) - 2 of the linearization at u = 0 on degree-l harmonics.
std::vector<std::pair<int, double>> trivial_spectrum(double a, int l_max = 10);

/// |avg e^{2u} x3|; the x1, x2 moments vanish by symmetry.
double kazdan_warner_defect(const AxiProfile& u);

struct NewtonResult {
  AxiProfile profile;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Damped Newton on the collocation system with Armijo backtracking (factor 1/2,
/// minimum step 1e-4). Throws ConvergenceError (with the iteration trace) on
/// divergence or a singular Jacobian.
NewtonResult newton_solve(double a, const AxiProfile& init, double tol = 1e-12, int max_iter = 50);

struct BranchPoint {
  double a = 0.0;
  AxiProfile profile = AxiProfile::zero(AxiProfile::kMinDegree);
  Diagnostics diagnostics;
  int newton_iters = 0;
  double residual_norm = 0.0;
};

struct SolutionBranch {
  std::vector<BranchPoint> points;
  bool failed = false;
  std::string failure;
  std::vector<std::string> warnings;
};

struct ContinuationOptions {
  int l_max = AxiProfile::kDefaultDegree;
  double tol = 1e-12;
  double min_step = 1e-6;
  double switch_amplitude = 0.05;  // initial P_2 coefficient after crossing 1/3
  int max_points = 2000;
};

/// Pseudo-arclength continuation in a, tangent predictor and bordered Newton
/// corrector, step halving on failure. Without switching, follows the branch
/// through u = 0 at a_start. With switching, follows the branch emanating from
/// a = 1/3 along P_2, seeded at the first parameter past 1/3.
/// Requires [a_start, a_end] within (0.3, 1).
SolutionBranch continue_branch(double a_start, double a_end, double step, bool switch_at_third,
                               const ContinuationOptions& options = {});

/// Newton solve at exactly `a`, seeded by interpolating the branch.
BranchPoint refine_at(const SolutionBranch& branch, double a, double tol = 1e-12);

struct NearThirdRow {
  double a = 0.0;
  double profile_corr = 0.0;
  double beta_ratio = 0.0;
  double uhat_ratio = 0.0;  // uhat_l2 / sup_norm^2
};

/// Rows for nontrivial branch points with 1/3 < a <= 1/3 + window.
std::vector<NearThirdRow> near_third_report(const SolutionBranch& branch, double window = 0.02);

/// Column order: a, sup_norm, mean, beta, lambda_norm_sq, beta_ratio,
/// profile_corr, uhat_l2, mass_defect, kw3, newton_iters.
std::string branch_csv_header();
std::string branch_csv_row(const BranchPoint& p);

}  // namespace onofri
