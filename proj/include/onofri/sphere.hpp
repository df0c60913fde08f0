#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace onofri {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A point on the unit sphere. Construction rejects |x|^2 - 1 > 1e-12.
class SpherePoint {
 public:
  SpherePoint(double x1, double x2, double x3);
  explicit SpherePoint(const Vec3& x);

  /// Projects an arbitrary nonzero vector onto the sphere.
  static SpherePoint normalized(const Vec3& x);
  /// Colatitude in [0, pi], longitude in any range.
  static SpherePoint from_angles(double colatitude, double longitude);

  const Vec3& vec() const { return x_; }
  double x1() const { return x_[0]; }
  double x2() const { return x_[1]; }
  double x3() const { return x_[2]; }

  SpherePoint operator-() const { return SpherePoint(Vec3(-x_)); }

 private:
  Vec3 x_;
};

/// An orthogonal 3x3 matrix (det = +-1).
class Rotation {
 public:
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(Mat3::Identity()); }
  /// Right-handed rotation by `angle` about the unit `axis`.
  static Rotation about_axis(const Vec3& axis, double angle);

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(Mat3(m_.transpose())); }
  double det() const { return m_.determinant(); }

  Vec3 apply(const Vec3& x) const { return m_ * x; }
  SpherePoint apply(const SpherePoint& p) const { return SpherePoint::normalized(m_ * p.vec()); }

  Rotation operator*(const Rotation& other) const { return Rotation(Mat3(m_ * other.m_)); }

 private:
  Mat3 m_;
};

/// A node/weight rule on the sphere. Nodes are unit vectors.
struct Quadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  double total_weight() const;
};

/// Gauss-Legendre nodes in t = x3 times 2L equispaced longitudes.
/// Node (i, j) is stored at index i * 2L + j.
struct QuadratureGrid {
  int L = 0;
  std::vector<double> t_nodes;    // L Gauss-Legendre nodes on (-1, 1)
  std::vector<double> t_weights;  // matching 1D weights (sum 2)
  std::vector<double> longitudes; // 2L values, 2 pi j / (2L)
  Quadrature rule;

  int n_lat() const { return L; }
  int n_lon() const { return 2 * L; }
};

/// Geodesic polar-coordinate rule on the cap B_R(center), R = outer_radius.
struct CapPatch {
  SpherePoint center{0.0, 0.0, 1.0};
  double outer_radius = 0.0;
  int n_r = 0;
  int n_ang = 0;
  Vec3 e1 = Vec3::UnitX();  // tangent frame at center
  Vec3 e2 = Vec3::UnitY();
  std::vector<double> r_nodes;  // radial nodes (geodesic distance)
  std::vector<double> r_weights;  // include the sin r area factor
  std::vector<double> angles;     // n_ang uniform angles
  Quadrature rule;

  double area() const { return rule.total_weight(); }
  bool contains(const Vec3& x) const;
};

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

std::shared_ptr<const QuadratureGrid> build_gauss_grid(int L);

using PointFunction = std::function<double(const Vec3&)>;

/// Sum of w_i f(p_i). Throws QuadratureError naming the node on non-finite values.
double integrate(const Quadrature& rule, const PointFunction& f);
double integrate(const QuadratureGrid& grid, const PointFunction& f);

/// Weighted sum of precomputed node values.
double integrate_samples(const Quadrature& rule, std::span<const double> values);

/// Arc length in [0, pi].
double geodesic_distance(const SpherePoint& p, const SpherePoint& q);
double geodesic_distance(const Vec3& p, const Vec3& q);

/// Deterministic R in SO(3) with R p = q: the rotation in the plane of p and q;
/// identity if p = q; for q = -p, a half turn about the axis obtained by
/// orthonormalizing the first coordinate vector least aligned with p.
Rotation rotation_mapping(const SpherePoint& p, const SpherePoint& q);

/// Radial nodes follow r = R s^3 with s Gauss-Legendre on two panels split at
/// r = R/2, so a cutoff kink at R/2 falls on a panel edge.
/// Requires pairwise center distances > 2 * two_delta.
std::vector<CapPatch> build_cap_patches(std::span<const SpherePoint> centers, double two_delta,
                                        int n_r, int n_ang);

/// Caps plus the global grid with nodes inside any cap dropped. The surviving
/// global weights get a minimum-norm correction so the masked part integrates
/// every polynomial of degree <= 4 exactly over the complement of the caps.
Quadrature composite_rule(const QuadratureGrid& grid, std::span<const CapPatch> caps);

/// Exact integral of x1^a x2^b x3^c over the unit sphere.
double sphere_monomial_integral(int a, int b, int c);

}  // namespace onofri
