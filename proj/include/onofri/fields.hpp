#pragma once

#include "onofri/sphere.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace onofri {

using GradientFunction = std::function<Vec3(const Vec3&)>;

/// A real function on the unit sphere.
///
/// Every field carries samples at the nodes of its integration rule. The rule is
/// the global Gauss grid, or the composite grid-plus-caps rule when cap patches
/// are attached. Closed-form fields also keep a point evaluator and may keep a
/// tangent-gradient evaluator; band-limited fields remember their degree cutoff.
class ScalarField {
 public:
  /// Samples given at the nodes of `grid` (index i * 2L + j).
  static ScalarField from_samples(std::shared_ptr<const QuadratureGrid> grid, std::vector<double> samples);

  static ScalarField from_function(std::shared_ptr<const QuadratureGrid> grid, PointFunction value,
                                   GradientFunction gradient = {}, std::vector<CapPatch> caps = {});

  static ScalarField zero(std::shared_ptr<const QuadratureGrid> grid);

  const QuadratureGrid& grid() const { return *grid_; }
  const std::shared_ptr<const QuadratureGrid>& grid_ptr() const { return grid_; }
  const Quadrature& rule() const { return *rule_; }
  std::span<const double> values() const { return values_; }
  const std::vector<CapPatch>& caps() const { return caps_; }

  /// Samples at the global grid nodes (evaluated when the rule is composite).
  std::vector<double> grid_values() const;

  bool has_evaluator() const { return static_cast<bool>(value_fn_); }
  bool has_gradient() const { return static_cast<bool>(gradient_fn_); }
  std::optional<int> band_limit() const { return band_limit_; }

  double operator()(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;

  /// The field x -> u(A x). Requires a closed-form evaluator.
  ScalarField composed_with(const Rotation& rotation) const;
  ScalarField plus_constant(double c) const;

  /// Marks the field as band-limited to degree `l_max` (used by the spectral energy).
  ScalarField with_band_limit(int l_max) const;

 private:
  ScalarField() = default;

  std::shared_ptr<const QuadratureGrid> grid_;
  std::shared_ptr<const Quadrature> rule_;
  std::vector<double> values_;
  PointFunction value_fn_;
  GradientFunction gradient_fn_;
  std::vector<CapPatch> caps_;
  std::optional<int> band_limit_;
};

/// avg u = (1/4pi) int u dV.
double mean_value(const ScalarField& u);

/// avg e^{2u}. Throws OverflowError when 2 max u > 700.
double exp_mass(const ScalarField& u);

/// (avg e^{2u} x_i)_{i=1..3}.
Vec3 exp_first_moments(const ScalarField& u);

/// int |grad u|^2 dV (not averaged). Uses the gradient evaluator when present,
/// otherwise the spectral sum of a band-limited field.
double dirichlet_energy(const ScalarField& u);

/// avg |grad u|^2 + 2 avg u - log avg e^{2u}. Nonnegative by the classical inequality.
double onofri_gap(const ScalarField& u);

/// (1/4pi) int u^2 dV.
double mean_square(const ScalarField& u);

/// Throws OverflowError if 2 max u > 700, naming the maximizing node.
void check_exponent_range(const Quadrature& rule, std::span<const double> values);

/// Flat CSV dump: a header line `onofri-field,gauss,<L>`, then
/// `x1,x2,x3,weight,value` rows at the global grid nodes.
void write_field_csv(std::ostream& out, const ScalarField& u);
ScalarField read_field_csv(std::istream& in);

}  // namespace onofri
