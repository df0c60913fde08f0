#pragma once

#include "onofri/fields.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace onofri {

/// Real spherical harmonics with int Y_{l,m}^2 dV = 1 and no Condon-Shortley
/// phase: m > 0 carries cos(m phi), m < 0 carries sin(|m| phi).
///
/// Conversions: x3 = k Y_{1,0}, x1 = k Y_{1,1}, x2 = k Y_{1,-1} with
/// k = sqrt(4 pi / 3); x3^2 - 1/3 = sqrt(16 pi / 45) Y_{2,0}.
namespace sh {
inline const double kDegreeOne = std::sqrt(4.0 * std::numbers::pi / 3.0);
inline const double kZonalTwo = std::sqrt(16.0 * std::numbers::pi / 45.0);
}  // namespace sh

class SHExpansion {
 public:
  explicit SHExpansion(int l_max);
  SHExpansion(int l_max, std::vector<double> coefficients);

  static std::size_t index(int l, int m) { return static_cast<std::size_t>(l * l + l + m); }
  static std::size_t count(int l_max) { return static_cast<std::size_t>((l_max + 1) * (l_max + 1)); }

  int l_max() const { return l_max_; }
  double operator()(int l, int m) const { return c_[index(l, m)]; }
  double& operator()(int l, int m) { return c_[index(l, m)]; }
  const std::vector<double>& coefficients() const { return c_; }

  /// Pointwise evaluation of the series.
  double evaluate(const Vec3& x) const;
  /// Tangential gradient of the series at x.
  Vec3 gradient(const Vec3& x) const;

  /// Sum of squared coefficients (= int u^2 dV).
  double l2_norm_sq() const;

  /// Random coefficients, N(0, amplitude^2 / (1 + l)^decay) per mode.
  static SHExpansion random(int l_max, double amplitude, double decay, std::mt19937_64& rng);

 private:
  int l_max_;
  std::vector<double> c_;
};

/// Coefficients by Gauss quadrature of u Y_{l,m}; needs grid L >= l_max + 1.
SHExpansion analyze(const ScalarField& u, int l_max);

/// Samples on `grid`, with closed-form value and gradient evaluators attached.
ScalarField synthesize(const SHExpansion& e, std::shared_ptr<const QuadratureGrid> grid);

/// Multiplies coefficient (l, m) by -l(l+1).
SHExpansion laplace_beltrami(const SHExpansion& e);

/// sum l(l+1) c_{l,m}^2 = int |grad u|^2 dV.
double dirichlet_energy_spectral(const SHExpansion& e);

/// Normalized associated Legendre values P^m_l(t) scaled so that the real
/// harmonics are orthonormal, for 0 <= m <= l <= l_max; entry [index(l, m)].
std::vector<double> normalized_legendre(int l_max, double t);

}  // namespace onofri
