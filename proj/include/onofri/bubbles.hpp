#pragma once

#include "onofri/fields.hpp"
#include "onofri/moments.hpp"

#include <optional>
#include <string>
#include <vector>

namespace onofri {

enum class Configuration { Pair, Triangle, Tetrahedron, Octahedron, Custom };

std::string to_string(Configuration c);
Configuration configuration_from_string(const std::string& name);

/// Centers of a named configuration: the antipodal pair (+-e3), the triangle in
/// {x1 = 0} through the north pole, the tetrahedron with a vertex at the north
/// pole, and the octahedron (+-e_i).
std::vector<SpherePoint> configuration_centers(Configuration c);

/// Default mass parameter 1/N.
double configuration_mass(Configuration c);

/// A sum of cut-off logarithmic peaks
///   u(p) = sum_i chi(r_i) (-log(eps^2 + r_i^2) + log(nu)/2),  r_i = dist(p, p_i),
/// with chi = 1 on [0, delta], 0 beyond 2 delta.
struct BubbleSpec {
  Configuration config = Configuration::Triangle;
  std::vector<SpherePoint> centers;
  double eps = 1e-3;
  double delta = 0.35;
  double nu = 1.0 / 3.0;

  static BubbleSpec named(Configuration c, double eps, double delta = 0.35);
  static BubbleSpec custom(std::vector<SpherePoint> centers, double eps, double nu, double delta = 0.35);

  /// Throws DomainError unless 0 < eps <= delta/10, 4 delta < min center
  /// separation and nu in (0, 1].
  void validate() const;
};

/// Quadrature controls for bubble fields.
struct BubbleQuadrature {
  int grid_L = 32;
  int n_r = 200;
  int n_ang = 16;
};

/// Quintic smoothstep cutoff: 1 on [0, delta], 1 - s^3(10 - 15 s + 6 s^2) with
/// s = (r - delta)/delta on [delta, 2 delta], 0 beyond. C^2.
double cutoff(double r, double delta);
double cutoff_derivative(double r, double delta);

/// Field with closed-form value and gradient and a cap patch at every center.
ScalarField make_bubble_field(const BubbleSpec& spec, const BubbleQuadrature& quad = {});

struct AsymptoticPrediction {
  double exp_mass = 0.0;  // N nu / (4 eps^2)
  double energy = 0.0;    // 8 pi N log(1/eps)
  double mean = 0.0;      // 0
  MomentMatrix lambda;    // lambda_infty of the uniform measure on the centers
};

struct AsymptoticReport {
  Configuration config = Configuration::Custom;
  double eps = 0.0;
  double delta = 0.0;
  double exp_mass = 0.0;
  double energy = 0.0;
  double mean = 0.0;
  MomentMatrix lambda;
  double lambda_norm_sq = 0.0;
  double kw_defect = 0.0;  // max_i |avg e^{2u} x_i| / avg e^{2u}
  AsymptoticPrediction predicted;
  double mass_ratio = 0.0;    // measured / predicted
  double energy_ratio = 0.0;  // measured / predicted
  double energy_offset = 0.0; // energy - predicted energy (the bounded remainder)
};

AsymptoticPrediction predicted_asymptotics(const BubbleSpec& spec);

AsymptoticReport verify_asymptotics(const BubbleSpec& spec, const BubbleQuadrature& quad = {});

/// The eps -> 0 limit of avg u for the spec's centers, delta and nu.
double bubble_mean_limit(const BubbleSpec& spec, const BubbleQuadrature& quad = {});

/// CSV header and row: config, eps, mass_ratio, energy_ratio, lambda_norm_sq, kw_defect, mean.
std::string bubble_csv_header();
std::string bubble_csv_row(const AsymptoticReport& report);

}  // namespace onofri
