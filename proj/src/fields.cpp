#include "onofri/fields.hpp"

#include "onofri/error.hpp"
#include "onofri/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace onofri {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kMaxExponent = 700.0;

std::vector<double> sample(const Quadrature& rule, const PointFunction& f) {
  std::vector<double> v(rule.size());
  for (std::size_t k = 0; k < rule.size(); ++k) v[k] = f(rule.nodes[k]);
  return v;
}

// Sum of w e^{2u} g over the rule. Exponent range checked by the caller.
template <class G>
double weighted_exp_sum(const ScalarField& u, G&& g) {
  const Quadrature& rule = u.rule();
  const auto values = u.values();
  double s = 0.0;
  for (std::size_t k = 0; k < rule.size(); ++k) s += rule.weights[k] * std::exp(2.0 * values[k]) * g(rule.nodes[k]);
  return s;
}

}  // namespace

ScalarField ScalarField::from_samples(std::shared_ptr<const QuadratureGrid> grid, std::vector<double> samples) {
  if (!grid) throw DomainError("ScalarField: null grid");
  if (samples.size() != grid->rule.size()) {
    throw DomainError("ScalarField: expected " + std::to_string(grid->rule.size()) + " samples, got " +
                      std::to_string(samples.size()));
  }
  ScalarField f;
  f.rule_ = std::shared_ptr<const Quadrature>(grid, &grid->rule);
  f.grid_ = std::move(grid);
  f.values_ = std::move(samples);
  integrate_samples(*f.rule_, f.values_);  // rejects non-finite samples
  return f;
}

ScalarField ScalarField::from_function(std::shared_ptr<const QuadratureGrid> grid, PointFunction value,
                                       GradientFunction gradient, std::vector<CapPatch> caps) {
  if (!grid) throw DomainError("ScalarField: null grid");
  if (!value) throw DomainError("ScalarField: missing evaluator");
  ScalarField f;
  if (caps.empty()) {
    f.rule_ = std::shared_ptr<const Quadrature>(grid, &grid->rule);
  } else {
    f.rule_ = std::make_shared<const Quadrature>(composite_rule(*grid, caps));
  }
  f.grid_ = std::move(grid);
  f.value_fn_ = std::move(value);
  f.gradient_fn_ = std::move(gradient);
  f.caps_ = std::move(caps);
  f.values_ = sample(*f.rule_, f.value_fn_);
  integrate_samples(*f.rule_, f.values_);
  return f;
}

ScalarField ScalarField::zero(std::shared_ptr<const QuadratureGrid> grid) {
  return from_function(std::move(grid), [](const Vec3&) { return 0.0; }, [](const Vec3&) { return Vec3::Zero().eval(); });
}

std::vector<double> ScalarField::grid_values() const {
  if (caps_.empty()) return values_;
  return sample(grid_->rule, value_fn_);
}

double ScalarField::operator()(const Vec3& x) const {
  if (!value_fn_) throw DomainError("ScalarField: field has no closed-form evaluator");
  return value_fn_(x);
}

Vec3 ScalarField::gradient(const Vec3& x) const {
  if (!gradient_fn_) throw DomainError("ScalarField: field has no gradient evaluator");
  return gradient_fn_(x);
}

ScalarField ScalarField::composed_with(const Rotation& rotation) const {
  if (!value_fn_) throw DomainError("ScalarField: composition needs a closed-form evaluator");
  const Mat3 a = rotation.matrix();
  PointFunction value = [fn = value_fn_, a](const Vec3& x) { return fn(a * x); };
  GradientFunction gradient;
  if (gradient_fn_) {
    gradient = [fn = gradient_fn_, a](const Vec3& x) { return Vec3(a.transpose() * fn(a * x)); };
  }
  std::vector<CapPatch> caps;
  if (!caps_.empty()) {
    std::vector<SpherePoint> centers;
    for (const CapPatch& c : caps_) centers.push_back(SpherePoint::normalized(a.transpose() * c.center.vec()));
    caps = build_cap_patches(centers, caps_.front().outer_radius, caps_.front().n_r, caps_.front().n_ang);
  }
  ScalarField out = from_function(grid_, std::move(value), std::move(gradient), std::move(caps));
  out.band_limit_ = band_limit_;
  return out;
}

ScalarField ScalarField::plus_constant(double c) const {
  ScalarField out = *this;
  for (double& v : out.values_) v += c;
  if (value_fn_) out.value_fn_ = [fn = value_fn_, c](const Vec3& x) { return fn(x) + c; };
  return out;
}

ScalarField ScalarField::with_band_limit(int l_max) const {
  if (l_max < 0 || l_max + 1 > grid_->L) throw DomainError("ScalarField: band limit exceeds grid resolution");
  ScalarField out = *this;
  out.band_limit_ = l_max;
  return out;
}

void check_exponent_range(const Quadrature& rule, std::span<const double> values) {
  const auto it = std::max_element(values.begin(), values.end());
  if (it == values.end()) return;
  if (2.0 * *it > kMaxExponent) {
    const Vec3& x = rule.nodes[static_cast<std::size_t>(it - values.begin())];
    std::ostringstream os;
    os.precision(17);
    os << "e^{2u} overflow: max u = " << *it << " at (" << x[0] << ", " << x[1] << ", " << x[2] << ")";
    throw OverflowError(os.str());
  }
}

double mean_value(const ScalarField& u) { return integrate_samples(u.rule(), u.values()) / kFourPi; }

double mean_square(const ScalarField& u) {
  const auto v = u.values();
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += u.rule().weights[k] * v[k] * v[k];
  return s / kFourPi;
}

double exp_mass(const ScalarField& u) {
  check_exponent_range(u.rule(), u.values());
  return weighted_exp_sum(u, [](const Vec3&) { return 1.0; }) / kFourPi;
}

Vec3 exp_first_moments(const ScalarField& u) {
  check_exponent_range(u.rule(), u.values());
  Vec3 m = Vec3::Zero();
  const Quadrature& rule = u.rule();
  const auto values = u.values();
  for (std::size_t k = 0; k < rule.size(); ++k) m += rule.weights[k] * std::exp(2.0 * values[k]) * rule.nodes[k];
  return m / kFourPi;
}

double dirichlet_energy(const ScalarField& u) {
  if (u.has_gradient()) {
    const Quadrature& rule = u.rule();
    double s = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
      const Vec3 g = u.gradient(rule.nodes[k]);
      if (!g.allFinite()) throw QuadratureError("dirichlet_energy: non-finite gradient");
      s += rule.weights[k] * g.squaredNorm();
    }
    return s;
  }
  if (u.band_limit()) return dirichlet_energy_spectral(analyze(u, *u.band_limit()));
  throw DomainError("dirichlet_energy: field has neither a gradient evaluator nor a band limit");
}

double onofri_gap(const ScalarField& u) {
  return dirichlet_energy(u) / kFourPi + 2.0 * mean_value(u) - std::log(exp_mass(u));
}

void write_field_csv(std::ostream& out, const ScalarField& u) {
  const QuadratureGrid& grid = u.grid();
  const std::vector<double> v = u.grid_values();
  out << "onofri-field,gauss," << grid.L << "\n";
  out << "x1,x2,x3,weight,value\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < grid.rule.size(); ++k) {
    const Vec3& x = grid.rule.nodes[k];
    out << x[0] << "," << x[1] << "," << x[2] << "," << grid.rule.weights[k] << "," << v[k] << "\n";
  }
}

ScalarField read_field_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("onofri-field,gauss,", 0) != 0) {
    throw DomainError("read_field_csv: missing 'onofri-field,gauss,<L>' header");
  }
  const int L = std::stoi(line.substr(std::string("onofri-field,gauss,").size()));
  auto grid = build_gauss_grid(L);
  if (!std::getline(in, line) || line != "x1,x2,x3,weight,value") {
    throw DomainError("read_field_csv: missing column header");
  }
  std::vector<double> samples;
  samples.reserve(grid->rule.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    double cols[5];
    for (double& c : cols) {
      if (!std::getline(row, cell, ',')) throw DomainError("read_field_csv: short row");
      c = std::stod(cell);
    }
    const std::size_t k = samples.size();
    if (k >= grid->rule.size() || (grid->rule.nodes[k] - Vec3(cols[0], cols[1], cols[2])).norm() > 1e-12) {
      throw DomainError("read_field_csv: node " + std::to_string(k) + " does not match the Gauss grid");
    }
    samples.push_back(cols[4]);
  }
  return ScalarField::from_samples(std::move(grid), std::move(samples));
}

}  // namespace onofri
