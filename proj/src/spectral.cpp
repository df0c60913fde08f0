#include "onofri/spectral.hpp"

#include "onofri/error.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace onofri {

namespace {

// P[index(l,m)] = normalized P^m_l(t); Q[index(l,m)] = P / sin(theta) for m >= 1,
// built by the same recurrence from a seed without the sin factor.
void legendre_tables(int l_max, double t, std::vector<double>& p, std::vector<double>* q) {
  const std::size_t n = SHExpansion::count(l_max);
  p.assign(n, 0.0);
  if (q) q->assign(n, 0.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));

  auto fill_column = [&](std::vector<double>& out, int m, double seed) {
    out[SHExpansion::index(m, m)] = seed;
    if (m + 1 > l_max) return;
    out[SHExpansion::index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * t * seed;
    for (int l = m + 2; l <= l_max; ++l) {
      const double ll = static_cast<double>(l);
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - m * m) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      out[SHExpansion::index(l, m)] =
          a * (t * out[SHExpansion::index(l - 1, m)] - b * out[SHExpansion::index(l - 2, m)]);
    }
  };

  double pmm = 1.0 / std::sqrt(4.0 * std::numbers::pi);
  double qmm = 0.0;
  fill_column(p, 0, pmm);
  for (int m = 1; m <= l_max; ++m) {
    const double f = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    qmm = (m == 1) ? f * pmm : f * s * qmm;
    pmm = f * s * pmm;
    fill_column(p, m, pmm);
    if (q) fill_column(*q, m, qmm);
  }
}

}  // namespace

std::vector<double> normalized_legendre(int l_max, double t) {
  std::vector<double> p;
  legendre_tables(l_max, t, p, nullptr);
  return p;
}

SHExpansion::SHExpansion(int l_max) : l_max_(l_max), c_(count(l_max), 0.0) {
  if (l_max < 0) throw DomainError("SHExpansion: negative degree cutoff");
}

SHExpansion::SHExpansion(int l_max, std::vector<double> coefficients) : l_max_(l_max), c_(std::move(coefficients)) {
  if (l_max < 0 || c_.size() != count(l_max)) throw DomainError("SHExpansion: coefficient count must be (l_max+1)^2");
}

double SHExpansion::evaluate(const Vec3& x) const {
  const double t = std::clamp(x[2], -1.0, 1.0);
  const double phi = std::atan2(x[1], x[0]);
  std::vector<double> p;
  legendre_tables(l_max_, t, p, nullptr);
  double u = 0.0;
  for (int l = 0; l <= l_max_; ++l) u += c_[index(l, 0)] * p[index(l, 0)];
  for (int m = 1; m <= l_max_; ++m) {
    const double cm = std::cos(m * phi);
    const double sm = std::sin(m * phi);
    for (int l = m; l <= l_max_; ++l) {
      u += std::numbers::sqrt2 * p[index(l, m)] * (c_[index(l, m)] * cm + c_[index(l, -m)] * sm);
    }
  }
  return u;
}

Vec3 SHExpansion::gradient(const Vec3& x) const {
  const double t = std::clamp(x[2], -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - t * t));
  const double phi = std::atan2(x[1], x[0]);
  std::vector<double> p, q;
  legendre_tables(l_max_, t, p, &q);

  double d_theta = 0.0;
  double d_phi_over_s = 0.0;
  for (int l = 1; l <= l_max_; ++l) {
    d_theta -= c_[index(l, 0)] * std::sqrt(l * (l + 1.0)) * p[index(l, 1)];
  }
  for (int m = 1; m <= l_max_; ++m) {
    const double cm = std::cos(m * phi);
    const double sm = std::sin(m * phi);
    for (int l = m; l <= l_max_; ++l) {
      const double q_prev = (l - 1 >= m) ? q[index(l - 1, m)] : 0.0;
      const double dp = l * t * q[index(l, m)] -
                        std::sqrt((2.0 * l + 1.0) / (2.0 * l - 1.0) * (static_cast<double>(l) * l - m * m)) * q_prev;
      const double a = c_[index(l, m)];
      const double b = c_[index(l, -m)];
      d_theta += std::numbers::sqrt2 * dp * (a * cm + b * sm);
      d_phi_over_s += std::numbers::sqrt2 * m * q[index(l, m)] * (-a * sm + b * cm);
    }
  }
  const Vec3 e_theta(t * std::cos(phi), t * std::sin(phi), -s);
  const Vec3 e_phi(-std::sin(phi), std::cos(phi), 0.0);
  return d_theta * e_theta + d_phi_over_s * e_phi;
}

double SHExpansion::l2_norm_sq() const {
  double s = 0.0;
  for (double c : c_) s += c * c;
  return s;
}

SHExpansion SHExpansion::random(int l_max, double amplitude, double decay, std::mt19937_64& rng) {
  SHExpansion e(l_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l <= l_max; ++l) {
    const double sd = amplitude / std::pow(1.0 + l, 0.5 * decay);
    for (int m = -l; m <= l; ++m) e(l, m) = sd * normal(rng);
  }
  return e;
}

SHExpansion analyze(const ScalarField& u, int l_max) {
  const QuadratureGrid& grid = u.grid();
  if (l_max < 0) throw DomainError("analyze: negative degree cutoff");
  if (grid.L < l_max + 1) {
    throw DomainError("analyze: grid L = " + std::to_string(grid.L) + " cannot resolve degree " +
                      std::to_string(l_max) + " (need L >= l_max + 1)");
  }
  const std::vector<double> values = u.grid_values();
  const int n_lon = grid.n_lon();
  const double dphi = 2.0 * std::numbers::pi / n_lon;
  SHExpansion e(l_max);
  std::vector<double> p, cos_sum(l_max + 1), sin_sum(l_max + 1);
  for (int i = 0; i < grid.n_lat(); ++i) {
    legendre_tables(l_max, grid.t_nodes[i], p, nullptr);
    for (int m = 0; m <= l_max; ++m) {
      double cs = 0.0, sn = 0.0;
      for (int j = 0; j < n_lon; ++j) {
        const double v = values[static_cast<std::size_t>(i) * n_lon + j];
        cs += v * std::cos(m * grid.longitudes[j]);
        sn += v * std::sin(m * grid.longitudes[j]);
      }
      cos_sum[m] = cs;
      sin_sum[m] = sn;
    }
    const double w = grid.t_weights[i] * dphi;
    for (int l = 0; l <= l_max; ++l) {
      e(l, 0) += w * p[SHExpansion::index(l, 0)] * cos_sum[0];
      for (int m = 1; m <= l; ++m) {
        e(l, m) += w * std::numbers::sqrt2 * p[SHExpansion::index(l, m)] * cos_sum[m];
        e(l, -m) += w * std::numbers::sqrt2 * p[SHExpansion::index(l, m)] * sin_sum[m];
      }
    }
  }
  return e;
}

ScalarField synthesize(const SHExpansion& e, std::shared_ptr<const QuadratureGrid> grid) {
  auto shared = std::make_shared<const SHExpansion>(e);
  ScalarField f = ScalarField::from_function(
      std::move(grid), [shared](const Vec3& x) { return shared->evaluate(x); },
      [shared](const Vec3& x) { return shared->gradient(x); });
  if (e.l_max() + 1 <= f.grid().L) return f.with_band_limit(e.l_max());
  return f;
}

SHExpansion laplace_beltrami(const SHExpansion& e) {
  SHExpansion out = e;
  for (int l = 0; l <= e.l_max(); ++l) {
    for (int m = -l; m <= l; ++m) out(l, m) *= -static_cast<double>(l) * (l + 1);
  }
  return out;
}

double dirichlet_energy_spectral(const SHExpansion& e) {
  double s = 0.0;
  for (int l = 1; l <= e.l_max(); ++l) {
    for (int m = -l; m <= l; ++m) s += static_cast<double>(l) * (l + 1) * e(l, m) * e(l, m);
  }
  return s;
}

}  // namespace onofri
