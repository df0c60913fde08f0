#include "onofri/concentration.hpp"

#include "onofri/error.hpp"
#include "onofri/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace onofri {

PointMeasure::PointMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw DomainError("PointMeasure: no atoms");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!(a.weight > 0.0)) throw DomainError("PointMeasure: weights must be positive");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("PointMeasure: weights must sum to 1");
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
      if ((atoms_[i].point.vec() - atoms_[j].point.vec()).norm() < 1e-12) {
        throw DomainError("PointMeasure: atoms must be pairwise distinct");
      }
    }
  }
}

PointMeasure PointMeasure::uniform(const std::vector<SpherePoint>& points) {
  std::vector<Atom> atoms;
  for (const SpherePoint& p : points) atoms.push_back({1.0 / static_cast<double>(points.size()), p});
  return PointMeasure(std::move(atoms));
}

PointMeasure PointMeasure::rotated(const Rotation& a) const {
  std::vector<Atom> atoms;
  for (const Atom& at : atoms_) atoms.push_back({at.weight, a.apply(at.point)});
  return PointMeasure(std::move(atoms));
}

Vec3 centroid(const PointMeasure& mu) {
  Vec3 c = Vec3::Zero();
  for (const Atom& a : mu.atoms()) c += a.weight * a.point.vec();
  return c;
}

MomentMatrix lambda_infty(const PointMeasure& mu) {
  Mat3 m = -Mat3::Identity() / 3.0;
  for (const Atom& a : mu.atoms()) m.noalias() += a.weight * (a.point.vec() * a.point.vec().transpose());
  return MomentMatrix(Mat3(0.5 * (m + m.transpose())));
}

namespace {

// Search variables: colatitudes, longitudes, softmax logits of k "sites". In the
// even case each site stands for the antipodal pair +-p with half the weight each.
struct Problem {
  int sites = 0;
  bool even = false;
  double rho = 2e6;
  Vec3 mu = Vec3::Zero();

  struct State {
    std::vector<Vec3> p, dtheta, dphi;
    std::vector<double> nu;
  };

  State unpack(const Eigen::VectorXd& x) const {
    State s;
    s.p.resize(sites);
    s.dtheta.resize(sites);
    s.dphi.resize(sites);
    s.nu.resize(sites);
    double zmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < sites; ++k) zmax = std::max(zmax, x[2 * sites + k]);
    double z = 0.0;
    for (int k = 0; k < sites; ++k) {
      const double th = x[k];
      const double ph = x[sites + k];
      s.p[k] = Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
      s.dtheta[k] = Vec3(std::cos(th) * std::cos(ph), std::cos(th) * std::sin(ph), -std::sin(th));
      s.dphi[k] = Vec3(-std::sin(th) * std::sin(ph), std::sin(th) * std::cos(ph), 0.0);
      s.nu[k] = std::exp(x[2 * sites + k] - zmax);
      z += s.nu[k];
    }
    for (double& v : s.nu) v /= z;
    return s;
  }

  Mat3 lambda(const State& s) const {
    Mat3 m = -Mat3::Identity() / 3.0;
    for (int k = 0; k < sites; ++k) m += s.nu[k] * s.p[k] * s.p[k].transpose();
    return m;
  }

  Vec3 center(const State& s) const {
    if (even) return Vec3::Zero();
    Vec3 c = Vec3::Zero();
    for (int k = 0; k < sites; ++k) c += s.nu[k] * s.p[k];
    return c;
  }

  double value(const Eigen::VectorXd& x) const {
    const State s = unpack(x);
    const Vec3 c = center(s);
    return lambda(s).squaredNorm() + mu.dot(c) + 0.5 * rho * c.squaredNorm();
  }

  double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
    const State s = unpack(x);
    const Mat3 lam = lambda(s);
    const Vec3 c = center(s);
    const Vec3 force = even ? Vec3::Zero().eval() : Vec3(mu + rho * c);
    g.setZero(x.size());
    std::vector<double> g_nu(sites);
    double mean_g = 0.0;
    for (int k = 0; k < sites; ++k) {
      g_nu[k] = 2.0 * s.p[k].dot(lam * s.p[k]) + force.dot(s.p[k]);
      const Vec3 g_p = 4.0 * s.nu[k] * (lam * s.p[k]) + s.nu[k] * force;
      g[k] = g_p.dot(s.dtheta[k]);
      g[sites + k] = g_p.dot(s.dphi[k]);
      mean_g += s.nu[k] * g_nu[k];
    }
    for (int k = 0; k < sites; ++k) g[2 * sites + k] = s.nu[k] * (g_nu[k] - mean_g);
    return lam.squaredNorm() + mu.dot(c) + 0.5 * rho * c.squaredNorm();
  }
};

void bfgs(const Problem& prob, Eigen::VectorXd& x, int max_iter) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g(n), g_new(n);
  double f = prob.value_and_gradient(x, g);
  for (int it = 0; it < max_iter && g.norm() > 1e-14; ++it) {
    Eigen::VectorXd d = -h * g;
    if (d.dot(g) >= 0.0) {
      h.setIdentity();
      d = -g;
    }
    double step = 1.0;
    Eigen::VectorXd x_new;
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = prob.value_and_gradient(x_new, g_new);
      if (f_new <= f + 1e-4 * step * g.dot(d)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const Eigen::VectorXd sx = x_new - x;
    const Eigen::VectorXd yg = g_new - g;
    const double sy = sx.dot(yg);
    x = x_new;
    g = g_new;
    const double df = f - f_new;
    f = f_new;
    if (sy > 1e-18) {
      const double r = 1.0 / sy;
      const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n) - r * sx * yg.transpose();
      h = v * h * v.transpose() + r * sx * sx.transpose();
    }
    if (df >= 0.0 && df < 1e-18 && g.norm() < 1e-10) break;
  }
}

// Derivative-free simplex polish; returns the best vertex.
void nelder_mead(const Problem& prob, Eigen::VectorXd& x, int max_evals) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::VectorXd> simplex(n + 1, x);
  std::vector<double> fv(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) simplex[i + 1][i] += 1e-4;
  for (Eigen::Index i = 0; i <= n; ++i) fv[i] = prob.value(simplex[i]);
  int evals = static_cast<int>(n + 1);
  std::vector<Eigen::Index> order(n + 1);
  while (evals < max_evals) {
    for (Eigen::Index i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    const auto best = order.front(), worst = order.back(), second = order[n - 1];
    if (fv[worst] - fv[best] < 1e-16) break;
    Eigen::VectorXd centroid_x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i <= n; ++i) {
      if (i != worst) centroid_x += simplex[i];
    }
    centroid_x /= static_cast<double>(n);
    const Eigen::VectorXd xr = centroid_x + (centroid_x - simplex[worst]);
    const double fr = prob.value(xr);
    ++evals;
    if (fr < fv[best]) {
      const Eigen::VectorXd xe = centroid_x + 2.0 * (centroid_x - simplex[worst]);
      const double fe = prob.value(xe);
      ++evals;
      if (fe < fr) {
        simplex[worst] = xe;
        fv[worst] = fe;
      } else {
        simplex[worst] = xr;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      simplex[worst] = xr;
      fv[worst] = fr;
    } else {
      const Eigen::VectorXd xc = centroid_x + 0.5 * (simplex[worst] - centroid_x);
      const double fc = prob.value(xc);
      ++evals;
      if (fc < fv[worst]) {
        simplex[worst] = xc;
        fv[worst] = fc;
      } else {
        for (Eigen::Index i = 0; i <= n; ++i) {
          if (i == best) continue;
          simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
          fv[i] = prob.value(simplex[i]);
          ++evals;
        }
      }
    }
  }
  const auto it = std::min_element(fv.begin(), fv.end());
  x = simplex[static_cast<std::size_t>(it - fv.begin())];
}

struct Candidate {
  std::vector<Vec3> points;
  std::vector<double> weights;
  double value = std::numeric_limits<double>::infinity();
};

double measure_value(const std::vector<Vec3>& points, const std::vector<double>& weights) {
  Mat3 m = -Mat3::Identity() / 3.0;
  for (std::size_t k = 0; k < points.size(); ++k) m += weights[k] * points[k] * points[k].transpose();
  return m.squaredNorm();
}

// Closest weights (Euclidean) satisfying sum = 1 and sum nu p = 0.
std::vector<double> project_weights(const std::vector<Vec3>& points, const std::vector<double>& weights) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd a(4, n);
  Eigen::VectorXd nu(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    a(0, k) = 1.0;
    a.block<3, 1>(1, k) = points[k];
    nu[k] = weights[k];
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  b[0] = 1.0;
  const Eigen::VectorXd delta = a.completeOrthogonalDecomposition().solve(b - a * nu);
  std::vector<double> out(weights.size());
  for (Eigen::Index k = 0; k < n; ++k) out[k] = nu[k] + delta[k];
  return out;
}

Candidate run_start(int n_atoms, bool even, const ConfigSearchOptions& opt, std::uint64_t start) {
  Problem prob;
  prob.even = even;
  prob.sites = even ? n_atoms / 2 : n_atoms;
  prob.rho = 2.0 * opt.penalty;

  std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + start);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> logit(0.0, 0.5);
  Eigen::VectorXd x(3 * prob.sites);
  for (int k = 0; k < prob.sites; ++k) {
    x[k] = std::acos(unit(rng));
    x[prob.sites + k] = angle(rng);
    x[2 * prob.sites + k] = logit(rng);
  }

  bfgs(prob, x, 400);
  if (!even) {
    // Multiplier updates tighten the centroid constraint beyond the penalty level.
    for (int round = 0; round < 8; ++round) {
      const auto s = prob.unpack(x);
      const Vec3 c = prob.center(s);
      if (c.norm() < 1e-15) break;
      prob.mu += prob.rho * c;
      bfgs(prob, x, 400);
    }
  }
  Eigen::VectorXd polished = x;
  nelder_mead(prob, polished, 400 * static_cast<int>(x.size()));
  if (prob.value(polished) < prob.value(x)) x = polished;

  const auto s = prob.unpack(x);
  Candidate c;
  if (even) {
    for (int k = 0; k < prob.sites; ++k) {
      c.points.push_back(s.p[k]);
      c.points.push_back(-s.p[k]);
      c.weights.push_back(0.5 * s.nu[k]);
      c.weights.push_back(0.5 * s.nu[k]);
    }
  } else {
    c.points = s.p;
    c.weights = project_weights(s.p, s.nu);
  }
  double total = 0.0;
  for (double w : c.weights) {
    if (!(w > 0.0)) return Candidate{};
    total += w;
  }
  for (double& w : c.weights) w /= total;
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    for (std::size_t j = i + 1; j < c.points.size(); ++j) {
      if ((c.points[i] - c.points[j]).norm() < 1e-9) return Candidate{};
    }
  }
  c.value = measure_value(c.points, c.weights);
  return c;
}

// KKT residual in (weights, tangent displacements) with constraint rows
// sum nu = 1 and, unless even, sum nu p = 0.
double stationarity(const std::vector<Vec3>& points, const std::vector<double>& weights, bool even) {
  std::vector<Vec3> sites;
  std::vector<double> nu;
  if (even) {
    for (std::size_t k = 0; k < points.size(); k += 2) {
      sites.push_back(points[k]);
      nu.push_back(weights[k] + weights[k + 1]);
    }
  } else {
    sites = points;
    nu = weights;
  }
  const auto n = static_cast<Eigen::Index>(sites.size());
  Mat3 lam = -Mat3::Identity() / 3.0;
  for (Eigen::Index k = 0; k < n; ++k) lam += nu[k] * sites[k] * sites[k].transpose();

  const Eigen::Index rows = even ? 1 : 4;
  Eigen::VectorXd grad(3 * n);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, 3 * n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Vec3& p = sites[k];
    Vec3 t1 = (std::abs(p[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
    t1 = (t1 - t1.dot(p) * p).normalized();
    const Vec3 t2 = p.cross(t1);
    const Vec3 g_p = 4.0 * nu[k] * (lam * p);
    grad[k] = 2.0 * p.dot(lam * p);
    grad[n + 2 * k] = g_p.dot(t1);
    grad[n + 2 * k + 1] = g_p.dot(t2);
    jac(0, k) = 1.0;
    if (!even) {
      jac.block<3, 1>(1, k) = p;
      jac.block<3, 1>(1, n + 2 * k) = nu[k] * t1;
      jac.block<3, 1>(1, n + 2 * k + 1) = nu[k] * t2;
    }
  }
  const Eigen::VectorXd mult = jac.transpose().completeOrthogonalDecomposition().solve(grad);
  return (grad - jac.transpose() * mult).norm();
}

PointMeasure canonical(std::vector<Vec3> points, std::vector<double> weights) {
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return weights[a] > weights[b]; });
  std::vector<Vec3> p;
  std::vector<double> w;
  for (auto i : order) {
    p.push_back(points[i]);
    w.push_back(weights[i]);
  }
  const Rotation first = rotation_mapping(SpherePoint::normalized(p[0]), SpherePoint(0.0, 0.0, 1.0));
  for (Vec3& v : p) v = first.apply(v);
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double r = std::hypot(p[i][0], p[i][1]);
    if (r < 1e-9) continue;
    const double turn = std::numbers::pi / 2 - std::atan2(p[i][1], p[i][0]);
    const Rotation spin = Rotation::about_axis(Vec3::UnitZ(), turn);
    for (Vec3& v : p) v = spin.apply(v);
    break;
  }
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < p.size(); ++i) atoms.push_back({w[i], SpherePoint::normalized(p[i])});
  return PointMeasure(std::move(atoms));
}

}  // namespace

ConfigSearchResult min_lambda_over_configs(int n_atoms, bool even_symmetric, const ConfigSearchOptions& options) {
  if (n_atoms < 2) {
    throw DomainError("min_lambda_over_configs: infeasible, N = " + std::to_string(n_atoms) +
                      " atoms cannot have zero centroid");
  }
  if (even_symmetric && n_atoms % 2 != 0) {
    throw DomainError("min_lambda_over_configs: even-symmetric search needs an even N");
  }
  if (options.starts < 1) throw DomainError("min_lambda_over_configs: need at least one start");

  std::vector<Vec3> points;
  std::vector<double> weights;
  if (n_atoms == 2) {
    // Centering two atoms forces an antipodal pair with equal weights.
    points = {Vec3::UnitZ(), -Vec3::UnitZ()};
    weights = {0.5, 0.5};
  } else {
    std::vector<Candidate> found(static_cast<std::size_t>(options.starts));
    parallel_for(found.size(), [&](std::size_t i) { found[i] = run_start(n_atoms, even_symmetric, options, i); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < found.size(); ++i) {
      if (found[i].value < found[best].value) best = i;
    }
    if (!std::isfinite(found[best].value)) throw ConvergenceError("min_lambda_over_configs: no start produced a valid measure", {});
    points = found[best].points;
    weights = found[best].weights;
  }

  ConfigSearchResult result{n_atoms, even_symmetric, 0.0, canonical(points, weights), 0.0, 0.0};
  // the pair value is analytic; summing 1/9 + 1/9 + 4/9 in floating point lands one ulp above 2/3
  result.infimum = n_atoms == 2 ? 2.0 / 3.0 : lambda_norm_sq(lambda_infty(result.minimizer));
  std::vector<Vec3> cp;
  std::vector<double> cw;
  for (const Atom& a : result.minimizer.atoms()) {
    cp.push_back(a.point.vec());
    cw.push_back(a.weight);
  }
  if (even_symmetric) {
    // Re-pair atoms as (p, -p) for the symmetric residual.
    std::vector<Vec3> paired;
    std::vector<double> paired_w;
    std::vector<bool> used(cp.size(), false);
    for (std::size_t i = 0; i < cp.size(); ++i) {
      if (used[i]) continue;
      for (std::size_t j = i + 1; j < cp.size(); ++j) {
        if (!used[j] && (cp[i] + cp[j]).norm() < 1e-9) {
          paired.insert(paired.end(), {cp[i], cp[j]});
          paired_w.insert(paired_w.end(), {cw[i], cw[j]});
          used[i] = used[j] = true;
          break;
        }
      }
    }
    result.stationarity_residual = stationarity(paired, paired_w, true);
  } else {
    result.stationarity_residual = stationarity(cp, cw, false);
  }
  result.centroid_residual = centroid(result.minimizer).norm();
  return result;
}

std::string to_json(const ConfigSearchResult& result) {
  nlohmann::ordered_json j;
  j["N"] = result.n_atoms;
  j["even"] = result.even_symmetric;
  j["infimum"] = result.infimum;
  j["atoms"] = nlohmann::ordered_json::array();
  for (const Atom& a : result.minimizer.atoms()) {
    j["atoms"].push_back({{"nu", a.weight}, {"p", {a.point.x1(), a.point.x2(), a.point.x3()}}});
  }
  j["stationarity_residual"] = result.stationarity_residual;
  return j.dump(2);
}

}  // namespace onofri
