#include "onofri/bubbles.hpp"

#include "onofri/concentration.hpp"
#include "onofri/error.hpp"
#include "onofri/format.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace onofri {

std::string to_string(Configuration c) {
  switch (c) {
    case Configuration::Pair: return "PAIR";
    case Configuration::Triangle: return "TRIANGLE";
    case Configuration::Tetrahedron: return "TETRAHEDRON";
    case Configuration::Octahedron: return "OCTAHEDRON";
    case Configuration::Custom: return "CUSTOM";
  }
  return "CUSTOM";
}

Configuration configuration_from_string(const std::string& name) {
  std::string up = name;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char ch) { return std::toupper(ch); });
  for (Configuration c : {Configuration::Pair, Configuration::Triangle, Configuration::Tetrahedron,
                          Configuration::Octahedron}) {
    if (to_string(c) == up) return c;
  }
  throw DomainError("unknown configuration '" + name + "'");
}

std::vector<SpherePoint> configuration_centers(Configuration c) {
  const double r3 = std::sqrt(3.0);
  const double r2 = std::sqrt(2.0);
  switch (c) {
    case Configuration::Pair:
      return {SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)};
    case Configuration::Triangle:
      return {SpherePoint(0, 0, 1), SpherePoint(0, r3 / 2, -0.5), SpherePoint(0, -r3 / 2, -0.5)};
    case Configuration::Tetrahedron:
      return {SpherePoint(0, 0, 1), SpherePoint(0, 2 * r2 / 3, -1.0 / 3),
              SpherePoint(std::sqrt(2.0 / 3), -r2 / 3, -1.0 / 3),
              SpherePoint(-std::sqrt(2.0 / 3), -r2 / 3, -1.0 / 3)};
    case Configuration::Octahedron:
      return {SpherePoint(1, 0, 0), SpherePoint(-1, 0, 0), SpherePoint(0, 1, 0),
              SpherePoint(0, -1, 0), SpherePoint(0, 0, 1), SpherePoint(0, 0, -1)};
    case Configuration::Custom: break;
  }
  throw DomainError("configuration_centers: custom configurations carry explicit centers");
}

double configuration_mass(Configuration c) {
  return 1.0 / static_cast<double>(configuration_centers(c).size());
}

BubbleSpec BubbleSpec::named(Configuration c, double eps, double delta) {
  BubbleSpec s;
  s.config = c;
  s.centers = configuration_centers(c);
  s.eps = eps;
  s.delta = delta;
  s.nu = configuration_mass(c);
  return s;
}

BubbleSpec BubbleSpec::custom(std::vector<SpherePoint> centers, double eps, double nu, double delta) {
  BubbleSpec s;
  s.config = Configuration::Custom;
  s.centers = std::move(centers);
  s.eps = eps;
  s.delta = delta;
  s.nu = nu;
  return s;
}

void BubbleSpec::validate() const {
  if (centers.empty()) throw DomainError("BubbleSpec: no centers");
  if (!(delta > 0.0)) throw DomainError("BubbleSpec: delta must be positive");
  if (!(eps > 0.0) || eps > delta / 10.0 * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "BubbleSpec: need 0 < eps <= delta/10 (eps = " << eps << ", delta = " << delta << ")";
    throw DomainError(os.str());
  }
  if (!(nu > 0.0) || nu > 1.0) throw DomainError("BubbleSpec: nu must lie in (0, 1]");
  for (std::size_t i = 0; i < centers.size(); ++i) {
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      if (!(4.0 * delta < geodesic_distance(centers[i], centers[j]))) {
        throw DomainError("BubbleSpec: 4 delta must be below the minimum center separation");
      }
    }
  }
}

double cutoff(double r, double delta) {
  if (r <= delta) return 1.0;
  if (r >= 2.0 * delta) return 0.0;
  const double s = (r - delta) / delta;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double cutoff_derivative(double r, double delta) {
  if (r <= delta || r >= 2.0 * delta) return 0.0;
  const double s = (r - delta) / delta;
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) / delta;
}

namespace {

struct Profile {
  double eps2;
  double delta;
  double half_log_nu;

  double value(double r) const {
    if (r >= 2.0 * delta) return 0.0;
    return cutoff(r, delta) * (-std::log(eps2 + r * r) + half_log_nu);
  }
  double slope(double r) const {
    if (r >= 2.0 * delta) return 0.0;
    const double phi = -std::log(eps2 + r * r) + half_log_nu;
    return cutoff(r, delta) * (-2.0 * r / (eps2 + r * r)) + cutoff_derivative(r, delta) * phi;
  }
};

}  // namespace

ScalarField make_bubble_field(const BubbleSpec& spec, const BubbleQuadrature& quad) {
  spec.validate();
  const Profile prof{spec.eps * spec.eps, spec.delta, 0.5 * std::log(spec.nu)};
  std::vector<Vec3> centers;
  for (const SpherePoint& c : spec.centers) centers.push_back(c.vec());
  const double cos_support = std::cos(2.0 * spec.delta);

  auto value = [prof, centers, cos_support](const Vec3& x) {
    double u = 0.0;
    for (const Vec3& c : centers) {
      const double d = x.dot(c);
      if (d <= cos_support) continue;
      u += prof.value(geodesic_distance(x, c));
    }
    return u;
  };
  auto gradient = [prof, centers, cos_support](const Vec3& x) {
    Vec3 g = Vec3::Zero();
    for (const Vec3& c : centers) {
      const double d = x.dot(c);
      if (d <= cos_support) continue;
      // grad r = -(c - (x.c) x) / sin r; the tangent part has norm sin r.
      const Vec3 tangent = c - d * x;
      const double sin_r = tangent.norm();
      if (sin_r < 1e-300) continue;
      const double r = std::atan2(sin_r, d);
      g -= prof.slope(r) * tangent / sin_r;
    }
    return g;
  };
  auto caps = build_cap_patches(spec.centers, 2.0 * spec.delta, quad.n_r, quad.n_ang);
  return ScalarField::from_function(build_gauss_grid(quad.grid_L), value, gradient, std::move(caps));
}

AsymptoticPrediction predicted_asymptotics(const BubbleSpec& spec) {
  spec.validate();
  const double n = static_cast<double>(spec.centers.size());
  AsymptoticPrediction p;
  p.exp_mass = n * spec.nu / (4.0 * spec.eps * spec.eps);
  p.energy = 8.0 * std::numbers::pi * n * std::log(1.0 / spec.eps);
  p.mean = 0.0;
  p.lambda = lambda_infty(PointMeasure::uniform(spec.centers));
  return p;
}

AsymptoticReport verify_asymptotics(const BubbleSpec& spec, const BubbleQuadrature& quad) {
  const ScalarField u = make_bubble_field(spec, quad);
  AsymptoticReport r;
  r.config = spec.config;
  r.eps = spec.eps;
  r.delta = spec.delta;
  r.predicted = predicted_asymptotics(spec);
  r.exp_mass = exp_mass(u);
  r.energy = dirichlet_energy(u);
  r.mean = mean_value(u);
  r.lambda = lambda_matrix(u);
  r.lambda_norm_sq = lambda_norm_sq(r.lambda);
  r.kw_defect = exp_first_moments(u).cwiseAbs().maxCoeff() / r.exp_mass;
  r.mass_ratio = r.exp_mass / r.predicted.exp_mass;
  r.energy_ratio = r.energy / r.predicted.energy;
  r.energy_offset = r.energy - r.predicted.energy;
  if (!(r.mass_ratio > 0.0) || !(r.energy_ratio > 0.0) || !std::isfinite(r.mass_ratio) ||
      !std::isfinite(r.energy_ratio)) {
    throw QuadratureError("verify_asymptotics: non-positive or non-finite ratio");
  }
  return r;
}

double bubble_mean_limit(const BubbleSpec& spec, const BubbleQuadrature& quad) {
  spec.validate();
  // Every cap contributes the same radial integral of chi (-log r^2 + log(nu)/2).
  const auto caps = build_cap_patches(std::vector<SpherePoint>{spec.centers.front()}, 2.0 * spec.delta, quad.n_r, 4);
  const CapPatch& cap = caps.front();
  double s = 0.0;
  for (std::size_t k = 0; k < cap.r_nodes.size(); ++k) {
    const double r = cap.r_nodes[k];
    s += cap.r_weights[k] * cutoff(r, spec.delta) * (-2.0 * std::log(r) + 0.5 * std::log(spec.nu));
  }
  return static_cast<double>(spec.centers.size()) * 2.0 * std::numbers::pi * s / (4.0 * std::numbers::pi);
}

std::string bubble_csv_header() { return "config,eps,mass_ratio,energy_ratio,lambda_norm_sq,kw_defect,mean"; }

std::string bubble_csv_row(const AsymptoticReport& r) {
  return to_string(r.config) + "," + format_real(r.eps) + "," + format_real(r.mass_ratio) + "," +
         format_real(r.energy_ratio) + "," + format_real(r.lambda_norm_sq) + "," + format_real(r.kw_defect) + "," +
         format_real(r.mean);
}

}  // namespace onofri
