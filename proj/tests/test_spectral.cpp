#include "onofri/error.hpp"
#include "onofri/spectral.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace onofri;

TEST_CASE("analysis inverts synthesis") {
  std::mt19937_64 rng(3);
  const SHExpansion e = SHExpansion::random(10, 1.0, 1.0, rng);
  const ScalarField u = synthesize(e, build_gauss_grid(16));
  const SHExpansion back = analyze(u, 10);
  for (std::size_t i = 0; i < e.coefficients().size(); ++i) {
    CHECK(std::abs(back.coefficients()[i] - e.coefficients()[i]) < 1e-12);
  }
  CHECK_THROWS_AS(analyze(u, 16), DomainError);
}

TEST_CASE("coordinate functions in the real basis") {
  const auto grid = build_gauss_grid(8);
  const ScalarField x3 = ScalarField::from_function(grid, [](const Vec3& x) { return x[2]; });
  const ScalarField x1 = ScalarField::from_function(grid, [](const Vec3& x) { return x[0]; });
  const ScalarField x2 = ScalarField::from_function(grid, [](const Vec3& x) { return x[1]; });
  const ScalarField q = ScalarField::from_function(grid, [](const Vec3& x) { return x[2] * x[2] - 1.0 / 3.0; });
  CHECK(analyze(x3, 2)(1, 0) == doctest::Approx(sh::kDegreeOne).epsilon(1e-13));
  CHECK(analyze(x1, 2)(1, 1) == doctest::Approx(sh::kDegreeOne).epsilon(1e-13));
  CHECK(analyze(x2, 2)(1, -1) == doctest::Approx(sh::kDegreeOne).epsilon(1e-13));
  CHECK(analyze(q, 2)(2, 0) == doctest::Approx(sh::kZonalTwo).epsilon(1e-13));
}

TEST_CASE("orthonormality of the normalized Legendre table") {
  std::vector<double> t;
  std::vector<double> w;
  gauss_legendre(12, t, w);
  const int l_max = 8;
  // Y_lm = sqrt2 P_lm cos(m phi) for m > 0, so every m needs int P_lm P_l'm dt = 1/(2 pi)
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m; l <= l_max; ++l) {
      for (int k = m; k <= l_max; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const auto p = normalized_legendre(l_max, t[i]);
          s += w[i] * p[SHExpansion::index(l, m)] * p[SHExpansion::index(k, m)];
        }
        const double expected = (l == k) ? 1.0 / (2.0 * std::numbers::pi) : 0.0;
        CHECK(std::abs(s - expected) < 1e-13);
      }
    }
  }
}

TEST_CASE("series gradient matches central differences") {
  std::mt19937_64 rng(11);
  const SHExpansion e = SHExpansion::random(7, 1.0, 0.0, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const Vec3 x = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 g = e.gradient(x);
    CHECK(std::abs(g.dot(x)) < 1e-12);
    // tangent directions through great circles
    Vec3 a = x.cross(Vec3(n(rng), n(rng), n(rng))).normalized();
    const double h = 1e-5;
    const Vec3 xp = std::cos(h) * x + std::sin(h) * a;
    const Vec3 xm = std::cos(h) * x - std::sin(h) * a;
    const double fd = (e.evaluate(xp) - e.evaluate(xm)) / (2 * h);
    CHECK(fd == doctest::Approx(g.dot(a)).epsilon(1e-7).scale(1.0));
  }
  // gradient stays finite and correct at the poles
  const Vec3 np(0, 0, 1);
  const double h = 1e-5;
  const double fd = (e.evaluate(Vec3(std::sin(h), 0, std::cos(h))) - e.evaluate(Vec3(-std::sin(h), 0, std::cos(h)))) /
                    (2 * h);
  CHECK(fd == doctest::Approx(e.gradient(np)[0]).epsilon(1e-7).scale(1.0));
}

TEST_CASE("Laplace-Beltrami eigenvalues and energy") {
  std::mt19937_64 rng(5);
  const SHExpansion e = SHExpansion::random(6, 0.5, 1.0, rng);
  const SHExpansion le = laplace_beltrami(e);
  for (int l = 0; l <= 6; ++l)
    for (int m = -l; m <= l; ++m) CHECK(le(l, m) == doctest::Approx(-l * (l + 1.0) * e(l, m)));
  const ScalarField u = synthesize(e, build_gauss_grid(16));
  CHECK(dirichlet_energy(u) == doctest::Approx(dirichlet_energy_spectral(e)).epsilon(1e-12));
  CHECK(e.l2_norm_sq() == doctest::Approx(mean_square(u) * 4.0 * std::numbers::pi).epsilon(1e-12));
  // band-limited samples without a gradient evaluator use the spectral energy
  const ScalarField samples = ScalarField::from_samples(u.grid_ptr(), u.grid_values()).with_band_limit(6);
  CHECK(dirichlet_energy(samples) == doctest::Approx(dirichlet_energy_spectral(e)).epsilon(1e-12));
}
