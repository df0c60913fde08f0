#pragma once

#include "onofri/fields.hpp"

namespace onofri {

/// Symmetric trace-free 3x3 matrix: the e^{2u}-weighted second moments of the
/// sphere minus I/3. Construction checks symmetry (1e-12) and trace (1e-10).
class MomentMatrix {
 public:
  MomentMatrix() : m_(Mat3::Zero()) {}
  explicit MomentMatrix(const Mat3& m);

  const Mat3& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

 private:
  Mat3 m_;
};

/// Lambda_ij = avg(e^{2u}(x_i x_j - delta_ij/3)) / avg(e^{2u}).
MomentMatrix lambda_matrix(const ScalarField& u);

/// Frobenius norm squared.
double lambda_norm_sq(const MomentMatrix& lambda);

/// A^T Lambda A, the moment matrix of u(A x).
MomentMatrix conjugate(const MomentMatrix& lambda, const Rotation& a);

}  // namespace onofri
