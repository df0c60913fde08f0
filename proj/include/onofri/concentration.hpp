#pragma once

#include "onofri/moments.hpp"
#include "onofri/sphere.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace onofri {

struct Atom {
  double weight;
  SpherePoint point;
};

/// A discrete probability measure sum nu_i delta_{p_i}. Weights are positive,
/// sum to 1 within 1e-12, and points are pairwise distinct.
class PointMeasure {
 public:
  explicit PointMeasure(std::vector<Atom> atoms);

  /// Equal weights 1/N on the given points.
  static PointMeasure uniform(const std::vector<SpherePoint>& points);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  PointMeasure rotated(const Rotation& a) const;

 private:
  std::vector<Atom> atoms_;
};

/// sum nu_i p_i.
Vec3 centroid(const PointMeasure& mu);

/// sum nu_i p_i p_i^T - I/3, the limit of Lambda along a sequence concentrating on mu.
MomentMatrix lambda_infty(const PointMeasure& mu);

struct ConfigSearchOptions {
  int starts = 200;
  std::uint64_t seed = 1;
  double penalty = 1e6;
};

struct ConfigSearchResult {
  int n_atoms = 0;
  bool even_symmetric = false;
  double infimum = 0.0;
  PointMeasure minimizer;
  /// Norm of the objective gradient after removing the constraint normals
  /// (least-squares KKT residual), in weight / tangent-point coordinates.
  double stationarity_residual = 0.0;
  double centroid_residual = 0.0;
};

/// Minimizes ||lambda_infty(mu)||^2 over centered N-atom measures by multi-start
/// local search. With even_symmetric, atoms come in antipodal pairs of equal
/// weight (N must be even). The minimizer is rotated so its heaviest atom sits
/// at the north pole and the next one lies in the plane x1 = 0.
/// Throws DomainError for N < 2 (a single atom cannot be centered).
ConfigSearchResult min_lambda_over_configs(int n_atoms, bool even_symmetric,
                                           const ConfigSearchOptions& options = {});

/// {N, even, infimum, atoms:[{nu, p}], stationarity_residual}
std::string to_json(const ConfigSearchResult& result);

}  // namespace onofri
