#include "onofri/sphere.hpp"

#include "onofri/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace onofri {

namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kOrthoTol = 1e-12;

std::string format_point(const Vec3& x) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << x[0] << ", " << x[1] << ", " << x[2] << ")";
  return os.str();
}

// Unit tangent at p built from the coordinate axis least aligned with p
// (lowest index wins ties).
Vec3 least_aligned_tangent(const Vec3& p) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(p[i]) < std::abs(p[axis])) axis = i;
  }
  Vec3 v = Vec3::Zero();
  v[axis] = 1.0;
  v -= v.dot(p) * p;
  return v.normalized();
}

}  // namespace

SpherePoint::SpherePoint(double x1, double x2, double x3) : SpherePoint(Vec3(x1, x2, x3)) {}

SpherePoint::SpherePoint(const Vec3& x) : x_(x) {
  if (!x.allFinite() || std::abs(x.squaredNorm() - 1.0) > kUnitTol) {
    throw DomainError("SpherePoint: not a unit vector " + format_point(x));
  }
}

SpherePoint SpherePoint::normalized(const Vec3& x) {
  const double n = x.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw DomainError("SpherePoint: cannot normalize " + format_point(x));
  }
  return SpherePoint(Vec3(x / n));
}

SpherePoint SpherePoint::from_angles(double colatitude, double longitude) {
  const double s = std::sin(colatitude);
  return normalized(Vec3(s * std::cos(longitude), s * std::sin(longitude), std::cos(colatitude)));
}

Rotation::Rotation(const Mat3& m) : m_(m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!m.allFinite() || ortho > kOrthoTol || std::abs(std::abs(m.determinant()) - 1.0) > kOrthoTol) {
    throw DomainError("Rotation: matrix is not orthogonal");
  }
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  const Vec3 k = axis.normalized();
  Mat3 cross;
  cross << 0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0;
  const Mat3 r = Mat3::Identity() + std::sin(angle) * cross + (1.0 - std::cos(angle)) * cross * cross;
  // Re-orthogonalize away the last few ulps so the strict check passes.
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return Rotation(Mat3(svd.matrixU() * svd.matrixV().transpose()));
}

double Quadrature::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

bool CapPatch::contains(const Vec3& x) const {
  return x.dot(center.vec()) > std::cos(outer_radius);
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw DomainError("gauss_legendre: n must be positive");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

std::shared_ptr<const QuadratureGrid> build_gauss_grid(int L) {
  if (L < 2) throw DomainError("build_gauss_grid: L must be >= 2, got " + std::to_string(L));
  auto grid = std::make_shared<QuadratureGrid>();
  grid->L = L;
  gauss_legendre(L, grid->t_nodes, grid->t_weights);
  const int n_lon = 2 * L;
  grid->longitudes.resize(n_lon);
  for (int j = 0; j < n_lon; ++j) grid->longitudes[j] = 2.0 * std::numbers::pi * j / n_lon;

  grid->rule.nodes.reserve(static_cast<std::size_t>(L) * n_lon);
  grid->rule.weights.reserve(static_cast<std::size_t>(L) * n_lon);
  const double dphi = 2.0 * std::numbers::pi / n_lon;
  for (int i = 0; i < L; ++i) {
    const double t = grid->t_nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (int j = 0; j < n_lon; ++j) {
      const double phi = grid->longitudes[j];
      grid->rule.nodes.emplace_back(s * std::cos(phi), s * std::sin(phi), t);
      grid->rule.weights.push_back(grid->t_weights[i] * dphi);
    }
  }
  return grid;
}

double integrate(const Quadrature& rule, const PointFunction& f) {
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double v = f(rule.nodes[k]);
    if (!std::isfinite(v)) {
      throw QuadratureError("integrate: non-finite value at node " + format_point(rule.nodes[k]));
    }
    sum += rule.weights[k] * v;
  }
  return sum;
}

double integrate(const QuadratureGrid& grid, const PointFunction& f) { return integrate(grid.rule, f); }

double integrate_samples(const Quadrature& rule, std::span<const double> values) {
  if (values.size() != rule.size()) throw DomainError("integrate_samples: size mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    if (!std::isfinite(values[k])) {
      throw QuadratureError("integrate: non-finite value at node " + format_point(rule.nodes[k]));
    }
    sum += rule.weights[k] * values[k];
  }
  return sum;
}

double geodesic_distance(const Vec3& p, const Vec3& q) {
  return std::acos(std::clamp(p.dot(q), -1.0, 1.0));
}

double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  return geodesic_distance(p.vec(), q.vec());
}

Rotation rotation_mapping(const SpherePoint& p, const SpherePoint& q) {
  const Vec3& a = p.vec();
  const Vec3& b = q.vec();
  const Vec3 axis = a.cross(b);
  const double c = std::clamp(a.dot(b), -1.0, 1.0);
  const double s = axis.norm();
  if (s < 1e-15) {
    if (c > 0.0) return Rotation::identity();
    const Vec3 k = least_aligned_tangent(a);
    return Rotation(Mat3(2.0 * k * k.transpose() - Mat3::Identity()));
  }
  return Rotation::about_axis(axis / s, std::atan2(s, c));
}

std::vector<CapPatch> build_cap_patches(std::span<const SpherePoint> centers, double two_delta,
                                        int n_r, int n_ang) {
  if (!(two_delta > 0.0) || two_delta >= std::numbers::pi / 2) {
    throw DomainError("build_cap_patches: outer radius must lie in (0, pi/2)");
  }
  if (n_r < 4 || n_ang < 3) throw DomainError("build_cap_patches: need n_r >= 4 and n_ang >= 3");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      const double d = geodesic_distance(centers[i], centers[j]);
      if (!(d > 2.0 * two_delta)) {
        std::ostringstream os;
        os << "build_cap_patches: caps " << i << " and " << j << " overlap (distance " << d
           << " <= " << 2.0 * two_delta << ")";
        throw DomainError(os.str());
      }
    }
  }

  // Radial panels in s, split where r = R/2.
  const double s_mid = std::cbrt(0.5);
  const int n_inner = std::max(2, (3 * n_r) / 4);
  const int n_outer = std::max(2, n_r - n_inner);
  std::vector<double> gx, gw;
  std::vector<double> r_nodes, r_weights;
  auto add_panel = [&](double s0, double s1, int n) {
    gauss_legendre(n, gx, gw);
    const double half = 0.5 * (s1 - s0);
    for (int k = 0; k < n; ++k) {
      const double s = s0 + half * (gx[k] + 1.0);
      const double r = two_delta * s * s * s;
      const double drds = 3.0 * two_delta * s * s;
      r_nodes.push_back(r);
      r_weights.push_back(gw[k] * half * drds * std::sin(r));
    }
  };
  add_panel(0.0, s_mid, n_inner);
  add_panel(s_mid, 1.0, n_outer);

  std::vector<double> angles(n_ang);
  for (int k = 0; k < n_ang; ++k) angles[k] = 2.0 * std::numbers::pi * (k + 0.5) / n_ang;
  const double dtheta = 2.0 * std::numbers::pi / n_ang;

  std::vector<CapPatch> caps;
  caps.reserve(centers.size());
  for (const SpherePoint& c : centers) {
    CapPatch cap;
    cap.center = c;
    cap.outer_radius = two_delta;
    cap.n_r = static_cast<int>(r_nodes.size());
    cap.n_ang = n_ang;
    cap.e1 = least_aligned_tangent(c.vec());
    cap.e2 = c.vec().cross(cap.e1);
    cap.r_nodes = r_nodes;
    cap.r_weights = r_weights;
    cap.angles = angles;
    cap.rule.nodes.reserve(r_nodes.size() * n_ang);
    cap.rule.weights.reserve(r_nodes.size() * n_ang);
    for (std::size_t k = 0; k < r_nodes.size(); ++k) {
      const double cr = std::cos(r_nodes[k]);
      const double sr = std::sin(r_nodes[k]);
      for (double th : angles) {
        Vec3 x = cr * c.vec() + sr * (std::cos(th) * cap.e1 + std::sin(th) * cap.e2);
        cap.rule.nodes.push_back(x.normalized());
        cap.rule.weights.push_back(r_weights[k] * dtheta);
      }
    }
    caps.push_back(std::move(cap));
  }
  return caps;
}

double sphere_monomial_integral(int a, int b, int c) {
  if (a < 0 || b < 0 || c < 0) throw DomainError("sphere_monomial_integral: negative exponent");
  if (a % 2 || b % 2 || c % 2) return 0.0;
  return 2.0 * std::tgamma((a + 1) / 2.0) * std::tgamma((b + 1) / 2.0) * std::tgamma((c + 1) / 2.0) /
         std::tgamma((a + b + c + 3) / 2.0);
}

Quadrature composite_rule(const QuadratureGrid& grid, std::span<const CapPatch> caps) {
  if (caps.empty()) return grid.rule;

  Quadrature out;
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < grid.rule.size(); ++k) {
    const Vec3& x = grid.rule.nodes[k];
    const bool inside = std::any_of(caps.begin(), caps.end(), [&](const CapPatch& cap) { return cap.contains(x); });
    if (!inside) kept.push_back(k);
  }

  std::vector<std::array<int, 3>> exps;
  for (int d = 0; d <= 4; ++d) {
    for (int a = 0; a <= d; ++a) {
      for (int b = 0; a + b <= d; ++b) exps.push_back({a, b, d - a - b});
    }
  }
  auto monomial = [](const Vec3& x, const std::array<int, 3>& e) {
    return std::pow(x[0], e[0]) * std::pow(x[1], e[1]) * std::pow(x[2], e[2]);
  };

  const auto n_mono = static_cast<Eigen::Index>(exps.size());
  const auto n_kept = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd scaled(n_mono, n_kept);
  Eigen::VectorXd residual(n_mono);
  for (Eigen::Index m = 0; m < n_mono; ++m) {
    double target = sphere_monomial_integral(exps[m][0], exps[m][1], exps[m][2]);
    for (const CapPatch& cap : caps) {
      for (std::size_t k = 0; k < cap.rule.size(); ++k) target -= cap.rule.weights[k] * monomial(cap.rule.nodes[k], exps[m]);
    }
    double current = 0.0;
    for (Eigen::Index j = 0; j < n_kept; ++j) {
      const std::size_t k = kept[j];
      const double v = monomial(grid.rule.nodes[k], exps[m]);
      scaled(m, j) = grid.rule.weights[k] * v;
      current += grid.rule.weights[k] * v;
    }
    residual[m] = target - current;
  }
  // Relative correction w_j (1 + delta_j) with minimum |delta|.
  const Eigen::VectorXd delta = scaled.completeOrthogonalDecomposition().solve(residual);

  out.nodes.reserve(kept.size());
  out.weights.reserve(kept.size());
  for (Eigen::Index j = 0; j < n_kept; ++j) {
    const std::size_t k = kept[j];
    const double w = grid.rule.weights[k] * (1.0 + delta[j]);
    if (!(w > 0.0)) throw QuadratureError("composite_rule: corrected weight is not positive; refine the grid");
    out.nodes.push_back(grid.rule.nodes[k]);
    out.weights.push_back(w);
  }
  for (const CapPatch& cap : caps) {
    out.nodes.insert(out.nodes.end(), cap.rule.nodes.begin(), cap.rule.nodes.end());
    out.weights.insert(out.weights.end(), cap.rule.weights.begin(), cap.rule.weights.end());
  }
  return out;
}

}  // namespace onofri
