#include "onofri/moments.hpp"

#include "onofri/error.hpp"

#include <algorithm>
#include <cmath>

namespace onofri {

MomentMatrix::MomentMatrix(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw DomainError("MomentMatrix: non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw DomainError("MomentMatrix: not symmetric");
  if (std::abs(m.trace()) > 1e-10) throw DomainError("MomentMatrix: not trace-free");
}

MomentMatrix lambda_matrix(const ScalarField& u) {
  const Quadrature& rule = u.rule();
  const auto values = u.values();
  check_exponent_range(rule, values);
  // The common factor e^{-2 max u} cancels in the ratio.
  const double shift = *std::max_element(values.begin(), values.end());
  double mass = 0.0;
  Mat3 second = Mat3::Zero();
  for (std::size_t k = 0; k < rule.size(); ++k) {
    const double w = rule.weights[k] * std::exp(2.0 * (values[k] - shift));
    const Vec3& x = rule.nodes[k];
    mass += w;
    second.noalias() += w * (x * x.transpose());
  }
  Mat3 lambda = second / mass - Mat3::Identity() / 3.0;
  lambda = 0.5 * (lambda + lambda.transpose()).eval();
  return MomentMatrix(lambda);
}

double lambda_norm_sq(const MomentMatrix& lambda) { return lambda.matrix().squaredNorm(); }

MomentMatrix conjugate(const MomentMatrix& lambda, const Rotation& a) {
  const Mat3 out = a.matrix().transpose() * lambda.matrix() * a.matrix();
  return MomentMatrix(Mat3(0.5 * (out + out.transpose())));
}

}  // namespace onofri
