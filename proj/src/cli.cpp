#include "onofri/cli.hpp"

#include "onofri/bubbles.hpp"
#include "onofri/concentration.hpp"
#include "onofri/error.hpp"
#include "onofri/format.hpp"
#include "onofri/meanfield.hpp"
#include "onofri/minimizer.hpp"
#include "onofri/spectral.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

namespace onofri::cli {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Format { Csv, Json };

// Options of one subcommand, with config-file fallbacks for anything not given on the command line.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, var, help)->capture_default_str();
    appliers_.push_back([opt, &var, name](const json& j) {
      if (opt->count() == 0 && j.contains(name)) var = j.at(name).get<T>();
    });
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, var, help);
    appliers_.push_back([opt, &var, name](const json& j) {
      if (opt->count() == 0 && j.contains(name)) var = j.at(name).get<bool>();
    });
    return opt;
  }

  // Top-level keys apply to every command; an object under the command name overrides them.
  void apply(const json& config) const {
    json merged = json::object();
    for (auto it = config.begin(); it != config.end(); ++it) {
      if (!it.value().is_object()) merged[it.key()] = it.value();
    }
    if (config.contains(app_->get_name()) && config.at(app_->get_name()).is_object()) {
      for (auto& [k, v] : config.at(app_->get_name()).items()) merged[k] = v;
    }
    for (const auto& f : appliers_) f(merged);
  }

 private:
  CLI::App* app_;
  std::vector<std::function<void(const json&)>> appliers_;
};

std::string csv_bool(bool b) { return b ? "true" : "false"; }

int quad_check(int L, Format fmt, std::ostream& out) {
  if (L < 2) throw UsageError("quad-check: L must be at least 2");
  const auto grid = build_gauss_grid(L);
  bool all = true;
  json rows = json::array();
  std::ostringstream csv;
  csv << "a,b,c,quadrature,exact,abs_error,pass\n";
  for (int deg = 0; deg <= 4; ++deg) {
    for (int a = deg; a >= 0; --a) {
      for (int b = deg - a; b >= 0; --b) {
        const int c = deg - a - b;
        const double q = integrate(*grid, [a, b, c](const Vec3& x) {
          return std::pow(x[0], a) * std::pow(x[1], b) * std::pow(x[2], c);
        });
        const double exact = sphere_monomial_integral(a, b, c);
        const double err = std::abs(q - exact);
        const bool pass = err < 1e-12;
        all = all && pass;
        csv << a << ',' << b << ',' << c << ',' << format_real(q) << ',' << format_real(exact) << ','
            << format_real(err) << ',' << csv_bool(pass) << '\n';
        rows.push_back({{"a", a}, {"b", b}, {"c", c}, {"quadrature", q}, {"exact", exact}, {"abs_error", err},
                        {"pass", pass}});
      }
    }
  }
  if (fmt == Format::Csv) {
    out << csv.str();
  } else {
    out << json{{"L", L}, {"pass", all}, {"checks", rows}}.dump(2) << '\n';
  }
  return all ? kSuccess : kFailure;
}

struct BubbleArgs {
  std::vector<std::string> configs{"PAIR", "TRIANGLE", "TETRAHEDRON", "OCTAHEDRON"};
  std::vector<double> eps{1e-2, 1e-3};
  double delta = 0.35;
  int grid_L = 32;
  int n_r = 200;
  int n_ang = 16;
};

int bubble_report(const BubbleArgs& args, Format fmt, std::ostream& out) {
  std::vector<Configuration> configs;
  for (const std::string& name : args.configs) {
    try {
      configs.push_back(configuration_from_string(name));
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
  }
  if (args.grid_L < 2 || args.n_r < 4 || args.n_ang < 3) throw UsageError("bubble-report: quadrature too coarse");
  const BubbleQuadrature quad{args.grid_L, args.n_r, args.n_ang};
  json rows = json::array();
  std::ostringstream csv;
  csv << bubble_csv_header() << ",error\n";
  for (Configuration c : configs) {
    for (double eps : args.eps) {
      try {
        const AsymptoticReport r = verify_asymptotics(BubbleSpec::named(c, eps, args.delta), quad);
        csv << bubble_csv_row(r) << ",\n";
        rows.push_back({{"config", to_string(c)},
                        {"eps", eps},
                        {"mass_ratio", r.mass_ratio},
                        {"energy_ratio", r.energy_ratio},
                        {"lambda_norm_sq", r.lambda_norm_sq},
                        {"kw_defect", r.kw_defect},
                        {"mean", r.mean}});
      } catch (const Error& e) {
        std::string msg = e.what();
        for (char& ch : msg) {
          if (ch == ',' || ch == '\n') ch = ';';
        }
        csv << to_string(c) << ',' << format_real(eps) << ",,,,,," << msg << '\n';
        rows.push_back({{"config", to_string(c)}, {"eps", eps}, {"error", e.what()}});
      }
    }
  }
  if (fmt == Format::Csv) {
    out << csv.str();
  } else {
    out << rows.dump(2) << '\n';
  }
  return kSuccess;
}

struct SearchArgs {
  int n = 3;
  bool even = false;
  int starts = 200;
  std::uint64_t seed = 1;
};

int config_search(const SearchArgs& args, Format fmt, std::ostream& out) {
  if (args.starts < 1) throw UsageError("config-search: need at least one start");
  ConfigSearchOptions opt;
  opt.starts = args.starts;
  opt.seed = args.seed;
  const ConfigSearchResult r = min_lambda_over_configs(args.n, args.even, opt);
  if (fmt == Format::Json) {
    out << to_json(r) << '\n';
    return kSuccess;
  }
  out << "N,even,infimum,stationarity_residual,atom,nu,x1,x2,x3\n";
  for (std::size_t i = 0; i < r.minimizer.size(); ++i) {
    const Atom& at = r.minimizer.atoms()[i];
    out << r.n_atoms << ',' << csv_bool(r.even_symmetric) << ',' << format_real(r.infimum) << ','
        << format_real(r.stationarity_residual) << ',' << i << ',' << format_real(at.weight) << ','
        << format_real(at.point.x1()) << ',' << format_real(at.point.x2()) << ',' << format_real(at.point.x3())
        << '\n';
  }
  return kSuccess;
}

struct BranchArgs {
  double a_start = 1.0 / 3.0 + 1e-3;
  double a_end = 0.48;
  double step = 0.005;
  bool switch_at_third = false;
  int l_max = AxiProfile::kDefaultDegree;
};

int branch(const BranchArgs& args, Format fmt, std::ostream& out, std::ostream& err) {
  auto ok = [](double a) { return a > 0.3 && a < 1.0; };
  if (!ok(args.a_start) || !ok(args.a_end)) throw UsageError("branch: a-start and a-end must lie in (0.3, 1)");
  if (!(args.step > 0.0)) throw UsageError("branch: step must be positive");
  if (args.l_max < AxiProfile::kMinDegree) throw UsageError("branch: l-max must be at least 32");
  ContinuationOptions opt;
  opt.l_max = args.l_max;
  const SolutionBranch b = continue_branch(args.a_start, args.a_end, args.step, args.switch_at_third, opt);
  for (const std::string& w : b.warnings) err << "warning: " << w << '\n';
  if (fmt == Format::Csv) {
    out << branch_csv_header() << '\n';
    for (const BranchPoint& p : b.points) out << branch_csv_row(p) << '\n';
  } else {
    json pts = json::array();
    for (const BranchPoint& p : b.points) {
      const Diagnostics& d = p.diagnostics;
      pts.push_back({{"a", p.a},
                     {"sup_norm", d.sup_norm},
                     {"mean", d.mean},
                     {"beta", d.beta},
                     {"lambda_norm_sq", d.lambda_norm_sq},
                     {"beta_ratio", d.beta_ratio},
                     {"profile_corr", d.profile_corr},
                     {"uhat_l2", d.uhat_l2},
                     {"mass_defect", d.mass_defect},
                     {"kw3", d.kw3},
                     {"newton_iters", p.newton_iters}});
    }
    out << json{{"points", pts}, {"failed", b.failed}, {"failure", b.failure}, {"warnings", b.warnings}}.dump(2)
        << '\n';
  }
  if (b.failed) {
    err << "error: " << b.failure << '\n';
    return kFailure;
  }
  return kSuccess;
}

struct MinimizeArgs {
  double a = 0.49;
  double c0 = 0.5;
  int runs = 10;
  std::uint64_t seed = 1;
  double amplitude = 0.1;
  int l_max = AxiProfile::kDefaultDegree;
  std::string mode = "backtrack";
  double penalty_weight = 1e4;
  int max_iter = 5000;
};

int minimize_cmd(const MinimizeArgs& args, Format fmt, std::ostream& out, std::ostream& err) {
  if (!(args.a > 1.0 / 3.0 && args.a < 1.0)) throw UsageError("minimize: a must lie in (1/3, 1)");
  if (!(args.c0 > 0.0 && args.c0 < 2.0 / 3.0)) throw UsageError("minimize: c0 must lie in (0, 2/3)");
  if (args.runs < 1) throw UsageError("minimize: runs must be positive");
  if (args.l_max < AxiProfile::kMinDegree) throw UsageError("minimize: l-max must be at least 32");
  if (!(args.amplitude >= 0.0)) throw UsageError("minimize: amplitude must be nonnegative");
  ConstraintSpec spec;
  spec.c0 = args.c0;
  spec.penalty_weight = args.penalty_weight;
  if (args.mode == "backtrack") {
    spec.mode = ConstraintMode::Backtrack;
  } else if (args.mode == "penalty") {
    spec.mode = ConstraintMode::Penalty;
  } else {
    throw UsageError("minimize: mode must be backtrack or penalty");
  }
  MinimizeOptions opt;
  opt.max_iter = args.max_iter;

  int code = kSuccess;
  json records = json::array();
  if (fmt == Format::Csv) {
    out << "seed,a,c0,J,S_a,lambda1,lambda2,lambda3,iters,feasible_moments,feasible_lambda_bound,sup_norm\n";
  }
  for (int i = 0; i < args.runs; ++i) {
    const std::uint64_t seed = args.seed + static_cast<std::uint64_t>(i);
    std::mt19937_64 rng(seed);
    try {
      const MinimizeResult r = minimize(args.a, spec, random_profile(args.l_max, args.amplitude, rng), opt);
      if (fmt == Format::Csv) {
        out << seed << ',' << format_real(r.a) << ',' << format_real(r.c0) << ',' << format_real(r.J) << ','
            << format_real(r.S) << ',' << format_real(r.lambda[0]) << ',' << format_real(r.lambda[1]) << ','
            << format_real(r.lambda[2]) << ',' << r.iterations << ',' << csv_bool(r.moments_feasible) << ','
            << csv_bool(r.lambda_feasible) << ',' << format_real(r.profile.sup_norm()) << '\n';
      } else {
        json rec = json::parse(to_json(r));
        json with_seed = {{"seed", seed}};
        for (auto& [k, v] : rec.items()) with_seed[k] = v;
        records.push_back(with_seed);
      }
    } catch (const Error& e) {
      err << "error: seed " << seed << ": " << e.what() << '\n';
      code = kFailure;
    }
  }
  if (fmt == Format::Json) out << records.dump(2) << '\n';
  return code;
}

struct SampleArgs {
  int samples = 1000;
  int l_max = 8;
  double amplitude = 1.0;
  double decay = 2.0;
  std::uint64_t seed = 1;
};

int mto_sample(const SampleArgs& args, Format fmt, std::ostream& out) {
  if (args.samples < 1 || args.l_max < 1) throw UsageError("mto-sample: samples and l-max must be positive");
  if (!(args.amplitude >= 0.0)) throw UsageError("mto-sample: amplitude must be nonnegative");
  const auto grid = build_gauss_grid(std::max(32, 4 * args.l_max));
  std::mt19937_64 rng(args.seed);
  std::uniform_real_distribution<double> scale(0.01, 1.0);
  bool all = true;
  json rows = json::array();
  if (fmt == Format::Csv) out << "index,mean,log_mass,energy_avg,onofri_gap,jensen_slack,pass\n";
  for (int i = 0; i < args.samples; ++i) {
    const ScalarField u = synthesize(SHExpansion::random(args.l_max, args.amplitude * scale(rng), args.decay, rng), grid);
    const double mean = mean_value(u);
    const double log_mass = std::log(exp_mass(u));
    const double energy = dirichlet_energy(u) / (4.0 * std::numbers::pi);
    const double gap = energy + 2.0 * mean - log_mass;
    const double jensen = log_mass - 2.0 * mean;
    const bool pass = gap >= -1e-10 && jensen >= -1e-12;
    all = all && pass;
    if (fmt == Format::Csv) {
      out << i << ',' << format_real(mean) << ',' << format_real(log_mass) << ',' << format_real(energy) << ','
          << format_real(gap) << ',' << format_real(jensen) << ',' << csv_bool(pass) << '\n';
    } else {
      rows.push_back({{"index", i}, {"mean", mean}, {"log_mass", log_mass}, {"energy_avg", energy},
                      {"onofri_gap", gap}, {"jensen_slack", jensen}, {"pass", pass}});
    }
  }
  if (fmt == Format::Json) out << json{{"pass", all}, {"samples", rows}}.dump(2) << '\n';
  return all ? kSuccess : kFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical lab for the constrained Moser-Trudinger-Onofri inequality", "onofri-lab"};
  app.require_subcommand(1);

  std::string out_path;
  std::string format_name = "csv";
  std::string config_path;
  app.add_option("--out", out_path, "Write results to this file instead of stdout");
  app.add_option("--format", format_name, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--config", config_path, "JSON file with option values; command-line flags take precedence");

  std::vector<std::pair<CLI::App*, std::unique_ptr<Binder>>> commands;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    // global options may also follow the command name
    sub->add_option("--out", out_path, "Write results to this file instead of stdout");
    sub->add_option("--format", format_name, "Output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--config", config_path, "JSON config file");
    commands.emplace_back(sub, std::make_unique<Binder>(sub));
    return commands.back().second.get();
  };

  int quad_L = 32;
  add("quad-check", "Quadrature exactness on sphere monomials of degree <= 4")->option("L", quad_L, "Grid parameter");

  BubbleArgs bubble;
  {
    Binder* b = add("bubble-report", "Bubble asymptotics over configurations and an eps ladder");
    b->option("configs", bubble.configs, "PAIR, TRIANGLE, TETRAHEDRON, OCTAHEDRON");
    b->option("eps", bubble.eps, "Bubble scales");
    b->option("delta", bubble.delta, "Cutoff radius");
    b->option("grid-L", bubble.grid_L, "Global grid parameter");
    b->option("n-r", bubble.n_r, "Radial cap nodes");
    b->option("n-ang", bubble.n_ang, "Angular cap nodes");
  }

  SearchArgs search;
  {
    Binder* b = add("config-search", "Minimize ||Lambda||^2 over centered N-atom measures");
    b->option("N", search.n, "Number of atoms");
    b->flag("even", search.even, "Restrict to antipodally symmetric measures");
    b->option("starts", search.starts, "Multi-start count");
    b->option("seed", search.seed, "Random seed");
  }

  BranchArgs br;
  {
    Binder* b = add("branch", "Continuation of axisymmetric mean field solutions");
    b->option("a-start", br.a_start, "First parameter");
    b->option("a-end", br.a_end, "Last parameter");
    b->option("step", br.step, "Arclength step");
    b->flag("switch", br.switch_at_third, "Follow the nontrivial branch born at a = 1/3");
    b->option("l-max", br.l_max, "Legendre degree");
  }

  MinimizeArgs mz;
  {
    Binder* b = add("minimize", "Constrained descent for J_a from seeded random starts");
    b->option("a", mz.a, "Parameter a in (1/3, 1)");
    b->option("c0", mz.c0, "Bound on ||Lambda||^2, in (0, 2/3)");
    b->option("runs", mz.runs, "Number of seeded runs");
    b->option("seed", mz.seed, "First seed");
    b->option("amplitude", mz.amplitude, "Sup norm of the random initial profiles");
    b->option("l-max", mz.l_max, "Legendre degree");
    b->option("mode", mz.mode, "backtrack or penalty");
    b->option("penalty-weight", mz.penalty_weight, "Penalty weight");
    b->option("max-iter", mz.max_iter, "Iteration cap");
  }

  SampleArgs sample;
  {
    Binder* b = add("mto-sample", "Onofri and Jensen inequalities on random band-limited fields");
    b->option("samples", sample.samples, "Number of fields");
    b->option("l-max", sample.l_max, "Band limit");
    b->option("amplitude", sample.amplitude, "Largest coefficient amplitude; each field draws one in [0.01, 1] times this");
    b->option("decay", sample.decay, "Spectral decay exponent");
    b->option("seed", sample.seed, "Random seed");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const Binder* binder = nullptr;
  for (const auto& [sub, b] : commands) {
    if (sub == chosen) binder = b.get();
  }

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw UsageError("cannot read config file " + config_path);
      json config;
      try {
        config = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError(std::string("invalid config file: ") + e.what());
      }
      if (!config.is_object()) throw UsageError("config file must hold a JSON object");
      try {
        binder->apply(config);
      } catch (const json::exception& e) {
        throw UsageError(std::string("bad value in config file: ") + e.what());
      }
      if (config.contains("format") && app.get_option("--format")->count() == 0 &&
          chosen->get_option("--format")->count() == 0) {
        format_name = config.at("format").get<std::string>();
      }
      if (config.contains("out") && out_path.empty()) out_path = config.at("out").get<std::string>();
    }
    if (format_name != "csv" && format_name != "json") throw UsageError("format must be csv or json");
    const Format fmt = format_name == "json" ? Format::Json : Format::Csv;

    std::ostringstream buffer;
    const std::string name = chosen->get_name();
    int code = kSuccess;
    if (name == "quad-check") {
      code = quad_check(quad_L, fmt, buffer);
    } else if (name == "bubble-report") {
      code = bubble_report(bubble, fmt, buffer);
    } else if (name == "config-search") {
      code = config_search(search, fmt, buffer);
    } else if (name == "branch") {
      code = branch(br, fmt, buffer, err);
    } else if (name == "minimize") {
      code = minimize_cmd(mz, fmt, buffer, err);
    } else {
      code = mto_sample(sample, fmt, buffer);
    }

    if (out_path.empty()) {
      out << buffer.str();
    } else {
      std::ofstream file(out_path, std::ios::binary);
      if (!file) {
        err << "error: cannot open " << out_path << " for writing\n";
        return kFailure;
      }
      file << buffer.str();
      if (!file) {
        err << "error: write to " << out_path << " failed\n";
        return kFailure;
      }
    }
    return code;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    for (const std::string& line : e.trace()) err << "  " << line << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace onofri::cli
