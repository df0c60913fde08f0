#include "onofri/meanfield.hpp"

#include "onofri/error.hpp"
#include "onofri/format.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>

namespace onofri {

namespace {

constexpr double kExpCap = 700.0;

// P_0..P_l_max at t.
void legendre_values(int l_max, double t, double* out) {
  out[0] = 1.0;
  if (l_max >= 1) out[1] = t;
  for (int l = 2; l <= l_max; ++l) {
    out[l] = ((2.0 * l - 1.0) * t * out[l - 1] - (l - 1.0) * out[l - 2]) / l;
  }
}

void check_overflow(const Eigen::VectorXd& values) {
  Eigen::Index k = 0;
  const double m = values.maxCoeff(&k);
  if (!(2.0 * m <= kExpCap)) {
    std::ostringstream os;
    os << "e^{2u} overflows at collocation node " << k << " (u = " << m << ")";
    throw OverflowError(os.str());
  }
}

// sphere average of node values: (1/2) sum w_k f_k
double node_average(const LegendreBasis& b, const Eigen::VectorXd& f) { return 0.5 * b.weights.dot(f); }

}  // namespace

std::shared_ptr<const LegendreBasis> LegendreBasis::get(int l_max) {
  if (l_max < 2) throw DomainError("LegendreBasis: degree must be at least 2");
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const LegendreBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(l_max);
  if (it != cache.end()) return it->second;

  auto b = std::make_shared<LegendreBasis>();
  const int n = l_max + 1;
  b->l_max = l_max;
  std::vector<double> nodes;
  std::vector<double> weights;
  gauss_legendre(n, nodes, weights);
  b->nodes = Eigen::Map<Eigen::VectorXd>(nodes.data(), n);
  b->weights = Eigen::Map<Eigen::VectorXd>(weights.data(), n);
  b->vandermonde.resize(n, n);
  std::vector<double> p(n);
  for (int k = 0; k < n; ++k) {
    legendre_values(l_max, nodes[k], p.data());
    for (int l = 0; l < n; ++l) b->vandermonde(k, l) = p[l];
  }
  Eigen::VectorXd norm(n);
  Eigen::VectorXd eig(n);
  for (int l = 0; l < n; ++l) {
    norm[l] = (2.0 * l + 1.0) / 2.0;
    eig[l] = static_cast<double>(l) * (l + 1.0);
  }
  b->analysis = norm.asDiagonal() * b->vandermonde.transpose() * b->weights.asDiagonal();
  b->stiffness = b->vandermonde * eig.asDiagonal() * b->analysis;
  cache.emplace(l_max, b);
  return b;
}

AxiProfile::AxiProfile(std::shared_ptr<const LegendreBasis> basis, Eigen::VectorXd coeffs, Eigen::VectorXd values)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), values_(std::move(values)) {}

AxiProfile AxiProfile::zero(int l_max) {
  return from_coefficients(Eigen::VectorXd::Zero(l_max + 1));
}

AxiProfile AxiProfile::from_coefficients(Eigen::VectorXd coefficients) {
  const int l_max = static_cast<int>(coefficients.size()) - 1;
  if (l_max < kMinDegree) {
    throw DomainError("AxiProfile: degree " + std::to_string(l_max) + " below the minimum " +
                      std::to_string(kMinDegree));
  }
  auto b = LegendreBasis::get(l_max);
  Eigen::VectorXd values = b->vandermonde * coefficients;
  return AxiProfile(std::move(b), std::move(coefficients), std::move(values));
}

AxiProfile AxiProfile::from_values(int l_max, Eigen::VectorXd values) {
  if (l_max < kMinDegree) {
    throw DomainError("AxiProfile: degree " + std::to_string(l_max) + " below the minimum " +
                      std::to_string(kMinDegree));
  }
  if (values.size() != l_max + 1) throw DomainError("AxiProfile: expected one value per node");
  auto b = LegendreBasis::get(l_max);
  Eigen::VectorXd coeffs = b->analysis * values;
  return AxiProfile(std::move(b), std::move(coeffs), std::move(values));
}

AxiProfile AxiProfile::from_function(int l_max, const std::function<double(double)>& f) {
  auto b = LegendreBasis::get(std::max(l_max, 2));
  Eigen::VectorXd v(b->nodes.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = f(b->nodes[k]);
  return from_values(l_max, std::move(v));
}

double AxiProfile::operator()(double t) const {
  // Clenshaw for sum c_l P_l(t).
  double b1 = 0.0;
  double b2 = 0.0;
  for (int l = l_max(); l >= 1; --l) {
    const double alpha = (2.0 * l + 1.0) / (l + 1.0) * t;
    const double beta = -(l + 1.0) / (l + 2.0);
    const double b0 = coeffs_[l] + alpha * b1 + beta * b2;
    b2 = b1;
    b1 = b0;
  }
  return coeffs_[0] + t * b1 - 0.5 * b2;
}

double AxiProfile::derivative(double t) const {
  const int n = l_max();
  if (std::abs(t) >= 1.0) {
    const double s = t > 0 ? 1.0 : -1.0;
    double d = 0.0;
    for (int l = 1; l <= n; ++l) d += coeffs_[l] * std::pow(s, l + 1) * l * (l + 1.0) / 2.0;
    return d;
  }
  // P_l' = l (P_{l-1} - t P_l) / (1 - t^2)
  std::vector<double> p(n + 1);
  legendre_values(n, t, p.data());
  double d = 0.0;
  for (int l = 1; l <= n; ++l) d += coeffs_[l] * l * (p[l - 1] - t * p[l]);
  return d / (1.0 - t * t);
}

Eigen::VectorXd AxiProfile::minus_laplacian() const { return basis_->stiffness * values_; }

AxiProfile AxiProfile::resampled(int l_max) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(l_max + 1);
  const int m = std::min(l_max, this->l_max());
  c.head(m + 1) = coeffs_.head(m + 1);
  return from_coefficients(std::move(c));
}

AxiProfile AxiProfile::operator+(const AxiProfile& other) const {
  const int n = std::max(l_max(), other.l_max());
  return from_coefficients(resampled(n).coeffs_ + other.resampled(n).coeffs_);
}

AxiProfile AxiProfile::operator*(double s) const { return AxiProfile(basis_, coeffs_ * s, values_ * s); }

AxiProfile AxiProfile::plus_constant(double c) const {
  Eigen::VectorXd coeffs = coeffs_;
  coeffs[0] += c;
  return AxiProfile(basis_, std::move(coeffs), values_.array() + c);
}

double AxiProfile::average(const Eigen::VectorXd& node_values) const { return node_average(*basis_, node_values); }

double AxiProfile::sup_norm() const {
  const double poles = std::max(std::abs(coeffs_.sum()), std::abs((*this)(-1.0)));
  return std::max(values_.cwiseAbs().maxCoeff(), poles);
}

ScalarField AxiProfile::to_field(std::shared_ptr<const QuadratureGrid> grid) const {
  const AxiProfile self = *this;
  auto value = [self](const Vec3& x) { return self(std::clamp(x[2], -1.0, 1.0)); };
  auto gradient = [self](const Vec3& x) {
    const double t = std::clamp(x[2], -1.0, 1.0);
    return Vec3(self.derivative(t) * (Vec3(0.0, 0.0, 1.0) - t * x));
  };
  return ScalarField::from_function(std::move(grid), value, gradient);
}

Eigen::VectorXd residual(const AxiProfile& u, double a) {
  if (!(a > 0.0)) throw DomainError("residual: a must be positive");
  check_overflow(u.values());
  return a * u.minus_laplacian() + Eigen::VectorXd::Ones(u.values().size()) -
         (2.0 * u.values().array()).exp().matrix();
}

Eigen::MatrixXd residual_jacobian(const AxiProfile& u, double a) {
  check_overflow(u.values());
  Eigen::MatrixXd j = a * u.basis().stiffness;
  j.diagonal() -= (2.0 * (2.0 * u.values().array()).exp()).matrix();
  return j;
}

std::vector<std::pair<int, double>> trivial_spectrum(double a, int l_max) {
  if (!(a > 0.0)) throw DomainError("trivial_spectrum: a must be positive");
  std::vector<std::pair<int, double>> out;
  for (int l = 0; l <= l_max; ++l) out.emplace_back(l, a * l * (l + 1.0) - 2.0);
  return out;
}

double kazdan_warner_defect(const AxiProfile& u) {
  check_overflow(u.values());
  const Eigen::VectorXd f = ((2.0 * u.values().array()).exp() * u.basis().nodes.array()).matrix();
  return std::abs(u.average(f));
}

Diagnostics diagnose(const AxiProfile& u, double a) {
  check_overflow(u.values());
  const LegendreBasis& b = u.basis();
  const Eigen::ArrayXd e = (2.0 * u.values().array()).exp();
  const Eigen::ArrayXd t = b.nodes.array();
  Diagnostics d;
  const double mass = node_average(b, e.matrix());
  d.mass_defect = std::abs(mass - 1.0);
  d.kw3 = node_average(b, (e * t).matrix());
  d.beta = node_average(b, (e * (t * t - 1.0 / 3.0)).matrix()) / mass;
  d.lambda_norm_sq = 1.5 * d.beta * d.beta;
  d.sup_norm = u.sup_norm();
  d.mean = u.coefficients()[0];
  d.beta_ratio = d.sup_norm > 0.0 ? d.beta / d.sup_norm : 0.0;

  // avg P_l^2 = 1 / (2l + 1)
  const Eigen::VectorXd& c = u.coefficients();
  double var = 0.0;
  for (Eigen::Index l = 1; l < c.size(); ++l) var += c[l] * c[l] / (2.0 * l + 1.0);
  d.profile_corr = var > 0.0 ? std::clamp(c[2] / std::sqrt(5.0) / std::sqrt(var), -1.0, 1.0) : 0.0;

  // (15 / 8a) beta (x3^2 - 1/3) = (5 beta / 4a) P_2
  Eigen::VectorXd chat = c;
  chat[0] = 0.0;
  chat[2] -= 5.0 * d.beta / (4.0 * a);
  double hat = 0.0;
  for (Eigen::Index l = 1; l < chat.size(); ++l) hat += chat[l] * chat[l] / (2.0 * l + 1.0);
  d.uhat_l2 = std::sqrt(4.0 * std::numbers::pi * hat);
  return d;
}

NewtonResult newton_solve(double a, const AxiProfile& init, double tol, int max_iter) {
  if (!(a > 0.0)) throw DomainError("newton_solve: a must be positive");
  std::vector<std::string> trace;
  AxiProfile u = init;
  Eigen::VectorXd r = residual(u, a);
  double norm = r.lpNorm<Eigen::Infinity>();
  int it = 0;
  auto record = [&](double step) {
    std::ostringstream os;
    os << "iter " << it << ": |r|_inf = " << norm << ", step = " << step;
    trace.push_back(os.str());
  };
  record(0.0);
  while (norm >= tol) {
    if (it >= max_iter) throw ConvergenceError("newton_solve: iteration limit reached", trace);
    ++it;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(residual_jacobian(u, a));
    if (!(lu.rcond() > 1e-14)) {
      trace.push_back("singular Jacobian, rcond = " + format_real(lu.rcond()));
      throw ConvergenceError("newton_solve: singular Jacobian", trace);
    }
    const Eigen::VectorXd du = lu.solve(-r);
    const double merit = r.norm();
    double step = 1.0;
    bool accepted = false;
    while (step >= 1e-4) {
      try {
        AxiProfile trial = AxiProfile::from_values(u.l_max(), u.values() + step * du);
        Eigen::VectorXd rt = residual(trial, a);
        if (rt.norm() <= (1.0 - 1e-4 * step) * merit) {
          u = std::move(trial);
          r = std::move(rt);
          accepted = true;
          break;
        }
      } catch (const OverflowError&) {
      }
      step *= 0.5;
    }
    if (!accepted) {
      record(step);
      throw ConvergenceError("newton_solve: residual not reduced after backtracking", trace);
    }
    norm = r.lpNorm<Eigen::Infinity>();
    record(step);
  }
  return NewtonResult{u, it, norm};
}

namespace {

struct State {
  Eigen::VectorXd u;
  double a;
};

double weighted_dot(const LegendreBasis& b, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  return 0.5 * (b.weights.array() * x.array() * y.array()).sum();
}

// Unit tangent of F(u, a) = 0, oriented along `prev` (or increasing a).
std::optional<State> tangent(const LegendreBasis& b, const State& z, const State* prev) {
  const AxiProfile u = AxiProfile::from_values(b.l_max, z.u);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(residual_jacobian(u, z.a));
  if (!(lu.rcond() > 1e-14)) return std::nullopt;
  State t{lu.solve(-(b.stiffness * z.u)), 1.0};
  double n = std::sqrt(weighted_dot(b, t.u, t.u) + 1.0);
  t.u /= n;
  t.a /= n;
  const double orient = prev ? weighted_dot(b, t.u, prev->u) + t.a * prev->a : t.a;
  if (orient < 0.0) {
    t.u = -t.u;
    t.a = -t.a;
  }
  return t;
}

struct Corrected {
  State z;
  int iterations;
  double residual;
};

// Bordered Newton on {F(u, a) = 0, <tau, z - z_pred> = 0}.
std::optional<Corrected> correct(const LegendreBasis& b, const State& pred, const State& tau, double tol) {
  const int n = static_cast<int>(pred.u.size());
  State z = pred;
  for (int it = 1; it <= 20; ++it) {
    AxiProfile u = AxiProfile::from_values(b.l_max, z.u);
    Eigen::VectorXd f;
    try {
      f = residual(u, z.a);
    } catch (const OverflowError&) {
      return std::nullopt;
    }
    Eigen::MatrixXd m(n + 1, n + 1);
    m.topLeftCorner(n, n) = residual_jacobian(u, z.a);
    m.topRightCorner(n, 1) = b.stiffness * z.u;
    m.bottomLeftCorner(1, n) = (0.5 * b.weights.array() * tau.u.array()).matrix().transpose();
    m(n, n) = tau.a;
    Eigen::VectorXd rhs(n + 1);
    rhs.head(n) = -f;
    rhs[n] = -(weighted_dot(b, tau.u, z.u - pred.u) + tau.a * (z.a - pred.a));
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);
    if (!(lu.rcond() > 1e-14)) return std::nullopt;
    const Eigen::VectorXd d = lu.solve(rhs);
    z.u += d.head(n);
    z.a += d[n];
    if (!std::isfinite(z.a) || !z.u.allFinite()) return std::nullopt;
    try {
      const double res = residual(AxiProfile::from_values(b.l_max, z.u), z.a).lpNorm<Eigen::Infinity>();
      if (res < tol) return Corrected{z, it, res};
    } catch (const OverflowError&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

BranchPoint make_point(double a, const AxiProfile& u, int iters, double res) {
  BranchPoint p;
  p.a = a;
  p.profile = u;
  p.diagnostics = diagnose(u, a);
  p.newton_iters = iters;
  p.residual_norm = res;
  return p;
}

constexpr double kThird = 1.0 / 3.0;

// Newton from a_0 P_2 seeds of growing amplitude until a nontrivial solution appears.
std::optional<NewtonResult> seed_nontrivial(double a, const ContinuationOptions& opt, std::vector<std::string>& notes) {
  double amp = opt.switch_amplitude;
  for (int k = 0; k < 8; ++k, amp *= 2.0) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(opt.l_max + 1);
    c[2] = amp;
    try {
      NewtonResult r = newton_solve(a, AxiProfile::from_coefficients(c), opt.tol, 100);
      if (r.profile.sup_norm() > 1e-8) return r;
      notes.push_back("P2 seed amplitude " + format_real(amp) + " at a = " + format_real(a) +
                      " returned the trivial solution; ramping");
    } catch (const Error& e) {
      notes.push_back("P2 seed amplitude " + format_real(amp) + " failed: " + e.what());
    }
  }
  return std::nullopt;
}

}  // namespace

SolutionBranch continue_branch(double a_start, double a_end, double step, bool switch_at_third,
                               const ContinuationOptions& opt) {
  auto in_range = [](double a) { return a > 0.3 && a < 1.0; };
  if (!in_range(a_start) || !in_range(a_end)) {
    throw DomainError("continue_branch: the parameter range must lie within (0.3, 1)");
  }
  if (!(step > 0.0)) throw DomainError("continue_branch: step must be positive");
  const double dir = a_end >= a_start ? 1.0 : -1.0;

  SolutionBranch branch;
  int l_max = opt.l_max;
  auto basis = LegendreBasis::get(l_max);

  State z{Eigen::VectorXd::Zero(l_max + 1), a_start};
  int first_iters = 0;
  double first_res = 0.0;
  const bool crosses = (a_start - kThird) * (a_end - kThird) < 0.0 || a_start > kThird;
  if (switch_at_third && crosses) {
    double a_seed = a_start;
    if (a_start <= kThird) {
      // trivial points up to the crossing, then the first parameter past 1/3
      for (double a = a_start; a < kThird; a += step) {
        branch.points.push_back(make_point(a, AxiProfile::zero(l_max), 0, 0.0));
      }
      a_seed = kThird + std::min(step, 1e-3);
    }
    auto seeded = seed_nontrivial(a_seed, opt, branch.warnings);
    if (!seeded) {
      branch.failed = true;
      branch.failure = "branch switch at a = " + format_real(a_seed) + " found no nontrivial solution";
      return branch;
    }
    z = State{seeded->profile.values(), a_seed};
    first_iters = seeded->iterations;
    first_res = seeded->residual_norm;
  } else {
    NewtonResult r = newton_solve(a_start, AxiProfile::zero(l_max), opt.tol);
    z = State{r.profile.values(), a_start};
    first_iters = r.iterations;
    first_res = r.residual_norm;
  }
  branch.points.push_back(make_point(z.a, AxiProfile::from_values(l_max, z.u), first_iters, first_res));

  auto tau0 = tangent(*basis, z, nullptr);
  if (!tau0) {
    branch.failed = true;
    branch.failure = "singular Jacobian at the starting point a = " + format_real(z.a);
    return branch;
  }
  State tau = *tau0;
  if (tau.a * dir < 0.0) {
    tau.u = -tau.u;
    tau.a = -tau.a;
  }

  double ds = step;
  while (static_cast<int>(branch.points.size()) < opt.max_points) {
    if ((z.a - a_end) * dir >= 0.0) break;
    State pred{z.u + ds * tau.u, z.a + ds * tau.a};
    std::optional<Corrected> c = correct(*basis, pred, tau, opt.tol);
    if (c && (c->z.a - a_end) * dir > 0.0) {
      // land exactly on a_end
      try {
        NewtonResult r = newton_solve(a_end, AxiProfile::from_values(l_max, c->z.u), opt.tol);
        c = Corrected{State{r.profile.values(), a_end}, r.iterations, r.residual_norm};
      } catch (const Error&) {
        c.reset();
      }
    }
    if (!c) {
      ds *= 0.5;
      if (ds < opt.min_step) {
        branch.failed = true;
        branch.failure = "corrector failed at minimum step near a = " + format_real(z.a);
        return branch;
      }
      continue;
    }
    const State prev_tau = tau;
    z = c->z;
    AxiProfile u = AxiProfile::from_values(l_max, z.u);
    if (l_max < 128 && z.a > 0.47 && u.sup_norm() > 4.0) {
      branch.warnings.push_back("sup_norm " + format_real(u.sup_norm()) + " at a = " + format_real(z.a) +
                                ": raising the degree to 128");
      l_max = 128;
      basis = LegendreBasis::get(l_max);
      NewtonResult r = newton_solve(z.a, u.resampled(l_max), opt.tol);
      u = r.profile;
      z.u = u.values();
      c->iterations += r.iterations;
      c->residual = r.residual_norm;
      State rt{prev_tau.u, prev_tau.a};
      rt.u = AxiProfile::from_values(opt.l_max, prev_tau.u).resampled(l_max).values();
      auto t = tangent(*basis, z, &rt);
      if (!t) {
        branch.failed = true;
        branch.failure = "singular Jacobian after resampling at a = " + format_real(z.a);
        return branch;
      }
      tau = *t;
    } else {
      auto t = tangent(*basis, z, &prev_tau);
      if (!t) {
        branch.failed = true;
        branch.failure = "singular Jacobian at a = " + format_real(z.a);
        branch.points.push_back(make_point(z.a, u, c->iterations, c->residual));
        return branch;
      }
      tau = *t;
    }
    branch.points.push_back(make_point(z.a, u, c->iterations, c->residual));
    if (c->iterations <= 4) ds = std::min(2.0 * ds, step);
  }
  return branch;
}

BranchPoint refine_at(const SolutionBranch& branch, double a, double tol) {
  if (branch.points.empty()) throw DomainError("refine_at: empty branch");
  const auto& pts = branch.points;
  // bracketing pair by parameter, else the nearest point
  std::size_t lo = 0;
  std::size_t hi = 0;
  double best = std::numeric_limits<double>::infinity();
  bool bracketed = false;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if ((pts[i].a - a) * (pts[i + 1].a - a) <= 0.0 && pts[i].a != pts[i + 1].a) {
      lo = i;
      hi = i + 1;
      bracketed = true;
      break;
    }
  }
  if (!bracketed) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (std::abs(pts[i].a - a) < best) {
        best = std::abs(pts[i].a - a);
        lo = hi = i;
      }
    }
  }
  const int l_max = std::max(pts[lo].profile.l_max(), pts[hi].profile.l_max());
  AxiProfile seed = pts[lo].profile.resampled(l_max);
  if (lo != hi) {
    const double s = (a - pts[lo].a) / (pts[hi].a - pts[lo].a);
    seed = seed * (1.0 - s) + pts[hi].profile.resampled(l_max) * s;
  }
  NewtonResult r = newton_solve(a, seed, tol);
  return make_point(a, r.profile, r.iterations, r.residual_norm);
}

std::vector<NearThirdRow> near_third_report(const SolutionBranch& branch, double window) {
  std::vector<NearThirdRow> rows;
  for (const BranchPoint& p : branch.points) {
    const Diagnostics& d = p.diagnostics;
    if (!(p.a > kThird && p.a <= kThird + window) || d.sup_norm < 1e-8) continue;
    rows.push_back({p.a, d.profile_corr, d.beta_ratio, d.uhat_l2 / (d.sup_norm * d.sup_norm)});
  }
  return rows;
}

std::string branch_csv_header() {
  return "a,sup_norm,mean,beta,lambda_norm_sq,beta_ratio,profile_corr,uhat_l2,mass_defect,kw3,newton_iters";
}

std::string branch_csv_row(const BranchPoint& p) {
  const Diagnostics& d = p.diagnostics;
  std::string s = format_real(p.a);
  for (double v : {d.sup_norm, d.mean, d.beta, d.lambda_norm_sq, d.beta_ratio, d.profile_corr, d.uhat_l2,
                   d.mass_defect, d.kw3}) {
    s += "," + format_real(v);
  }
  return s + "," + std::to_string(p.newton_iters);
}

}  // namespace onofri
