#include "nscrit/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nscrit/error.hpp"
#include "nscrit/examples.hpp"

namespace nscrit {

namespace {

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

Eigen::VectorXd restrict_full(const Eigen::VectorXd& full, const FESpace& v) {
  Eigen::VectorXd out(v.num_free_dofs());
  for (int i = 0; i < v.num_free_dofs(); ++i) out[i] = full[v.free_dofs()[i]];
  return out;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

class Collector {
 public:
  explicit Collector(std::string prefix) : prefix_(std::move(prefix)) {}

  void add(const std::string& name, bool ok, const std::string& detail) {
    results.push_back({prefix_ + name, ok, detail});
  }

  /// Records an exception as a failure of the named check instead of aborting the suite.
  template <class F>
  void guard(const std::string& name, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, e.what());
    }
  }

  std::vector<PropertyResult> results;

 private:
  std::string prefix_;
};

void check_basics(Collector& out) {
  out.guard("quadrature-exactness", [&] {
    double worst = 0.0;
    for (int d = 1; d <= 20; ++d) {
      const QuadratureRule& rule = quadrature(d);
      for (int a = 0; a <= d; ++a)
        for (int b = 0; a + b <= d; ++b) {
          double s = 0.0;
          for (int q = 0; q < rule.size(); ++q)
            s += rule.weights[q] * std::pow(rule.points[q].x(), a) * std::pow(rule.points[q].y(), b);
          const double exact = factorial(a) * factorial(b) / factorial(a + b + 2);
          worst = std::max(worst, std::abs(s - exact) / exact);
        }
    }
    out.add("quadrature-exactness", worst < 1e-12, "max relative error " + num(worst));
  });

  out.guard("lagrange-partition-of-unity", [&] {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 1; k <= 4; ++k) {
      LagrangeBasis basis(k);
      Eigen::VectorXd v(basis.size()), dx(basis.size()), dy(basis.size());
      for (int i = 0; i < 50; ++i) {
        double x = u(rng), y = u(rng);
        if (x + y > 1.0) x = 1.0 - x, y = 1.0 - y;
        basis.eval({x, y}, v, dx, dy);
        worst = std::max({worst, std::abs(v.sum() - 1.0), std::abs(dx.sum()), std::abs(dy.sum())});
      }
    }
    out.add("lagrange-partition-of-unity", worst < 1e-12, "max deviation " + num(worst));
  });

  out.guard("pressure-basis-orthonormal", [&] {
    double worst = 0.0;
    for (int d = 0; d <= 3; ++d) {
      PressureBasis basis(d);
      const QuadratureRule& rule = quadrature(2 * d + 1);
      const Eigen::MatrixXd tab = basis.tabulate(rule.points);
      const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(rule.weights.data(), rule.size());
      const Eigen::MatrixXd gram = tab.transpose() * w.asDiagonal() * tab;
      worst = std::max(worst, (gram - Eigen::MatrixXd::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff());
    }
    out.add("pressure-basis-orthonormal", worst < 1e-12, "max Gram deviation " + num(worst));
  });

  out.guard("graded-grid-invariants", [&] {
    int grids = 0;
    std::string first;
    for (double alpha : {0.51, 0.55, 0.75, 0.9})
      for (double T : {0.1, 1.0})
        for (double tau : {1.0 / 40, 1.0 / 100, 1.0 / 160, T}) {
          const auto bad = grid_violations(build_graded_grid(T, std::min(tau, T), alpha));
          ++grids;
          if (!bad.empty() && first.empty()) first = "alpha=" + num(alpha) + " T=" + num(T) + ": " + bad.front();
        }
    out.add("graded-grid-invariants", first.empty(), first.empty() ? std::to_string(grids) + " grids" : first);
  });

  out.guard("rate-fit-scale-invariant", [&] {
    const std::vector<std::pair<double, double>> p = {{1.0 / 40, 3.7624e-2}, {1.0 / 80, 1.5475e-2}, {1.0 / 160, 7.5879e-3}};
    auto q = p;
    for (auto& [r, e] : q) e *= 123.0;
    const double d = std::abs(fit_rate(p) - fit_rate(q));
    out.add("rate-fit-scale-invariant", d < 1e-12, "slope change " + num(d));
  });
}

void check_case(Collector& out, const SuiteCase& sc, const RunConfig& base) {
  MeshPtr mesh;
  out.guard("mesh-audit", [&] {
    MeshPtr structured = build_structured_mesh(sc.n);
    mesh = family_mesh(sc.n, sc.k);
    std::string msg;
    bool ok = true;
    for (const MeshPtr& m : {structured, refine_uniform(structured), alfeld_split(structured), mesh}) {
      const MeshAudit audit = audit_mesh(*m);
      if (!audit.ok && ok) msg = audit.message;
      ok = ok && audit.ok;
    }
    out.add("mesh-audit", ok, ok ? "structured, refined, Alfeld" : msg);
  });
  if (!mesh) return;

  Problem problem;
  try {
    problem = build_problem(sc.n, sc.k);
  } catch (const std::exception& e) {
    out.add("discretization", false, e.what());
    return;
  }
  const Discretization& disc = problem.disc;
  const SpacePtr& V = disc.velocity;
  const SolverOptions& opts = base.solver;

  out.guard("mass-stiffness-structure", [&] {
    const double sym_m = (Eigen::MatrixXd(disc.mass_full) - Eigen::MatrixXd(disc.mass_full).transpose()).cwiseAbs().maxCoeff();
    const double sym_k = (Eigen::MatrixXd(disc.stiffness_full) - Eigen::MatrixXd(disc.stiffness_full).transpose()).cwiseAbs().maxCoeff();
    const int ns = V->num_scalar_dofs();
    Eigen::VectorXd ones_x = Eigen::VectorXd::Zero(V->num_dofs());
    ones_x.head(ns).setOnes();
    const double area = ones_x.dot(disc.mass_full * ones_x);
    const double kernel = (disc.stiffness_full * ones_x).cwiseAbs().maxCoeff();
    const bool ok = sym_m < 1e-14 && sym_k < 1e-11 && std::abs(area - 1.0) < 1e-12 && kernel < 1e-10;
    out.add("mass-stiffness-structure", ok,
            "asym " + num(std::max(sym_m, sym_k)) + ", area " + num(area) + ", K*1 " + num(kernel));
  });

  out.guard("divergence-of-linear-field", [&] {
    const FEFunction lin = interpolate(V, [](const Point& x) { return Eigen::Vector2d(x.x(), 0.0); });
    const CsrMatrix b = assemble_divergence(*V, *disc.pressure);
    const double dev = (b * lin.coefficients - disc.pressure->mean_vector()).cwiseAbs().maxCoeff();
    out.add("divergence-of-linear-field", dev < 1e-12, "deviation " + num(dev));
  });

  out.guard("infsup-positive", [&] {
    const InfSupResult r = infsup_constant(disc, 3000, opts);
    out.add("infsup-positive", r.beta > 0.05, "beta " + num(r.beta));
  });

  out.guard("projections", [&] {
    const QuadratureRule& rule = quadrature(base.data_exactness);
    const VectorField data = initial_data_example1(base.eps);
    const ProjectionResult p = l2_project_divfree(data, disc, rule, opts);
    const ProjectionResult again = l2_project_divfree(p.u, disc, opts);
    const double idem = (again.u.coefficients - p.u.coefficients).norm() / p.u.coefficients.norm();
    out.add("projection-idempotent", idem < 1e-11, "relative change " + num(idem));

    double data_sq = 0.0;
    const Mesh& m = *V->mesh();
    for (int c = 0; c < m.num_cells(); ++c) {
      const AffineMap map = affine_map(m, c);
      for (int q = 0; q < rule.size(); ++q)
        data_sq += rule.weights[q] * std::abs(map.det) * data(map.map(rule.points[q])).squaredNorm();
    }
    const double pn = l2_norm(p.u);
    out.add("projection-nonexpansive", pn <= std::sqrt(data_sq) * (1 + 1e-12),
            num(pn) + " <= " + num(std::sqrt(data_sq)));

    const double div = max_pointwise_divergence(p.u, quadrature(assembly_exactness(sc.k)));
    const double h1 = h1_seminorm(p.u);
    out.add("projection-divergence-free", div <= 1e-9 * h1, "max |div| / |grad| " + num(div / h1));

    const ProjectionResult r = stokes_ritz_project(p.u, disc, opts);
    const double fixed = (r.u.coefficients - p.u.coefficients).norm() / p.u.coefficients.norm();
    out.add("stokes-ritz-fixed-point", fixed < 1e-11, "relative change " + num(fixed));
  });

  out.guard("discrete-stokes", [&] {
    const auto fields = random_divfree_fields(disc, 2, base.seed, opts);
    const FEFunction a1 = apply_discrete_stokes(fields[0], disc, opts).u;
    const FEFunction a2 = apply_discrete_stokes(fields[1], disc, opts).u;
    const double lhs = a1.coefficients.dot(disc.mass_full * fields[1].coefficients);
    const double rhs = fields[0].coefficients.dot(disc.mass_full * a2.coefficients);
    const double sym = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
    out.add("discrete-stokes-symmetric", sym < 1e-10, "relative asymmetry " + num(sym));
    const double neg = a1.coefficients.dot(disc.mass_full * fields[0].coefficients);
    const double grad = fields[0].coefficients.dot(disc.stiffness_full * fields[0].coefficients);
    out.add("discrete-stokes-negative", neg <= 0.0 && std::abs(neg + grad) <= 1e-10 * grad,
            "(A phi, phi) " + num(neg) + ", -|grad phi|^2 " + num(-grad));
  });

  for (Example ex : {Example::Example1, Example::Example2}) {
    const std::string tag = "-" + to_string(ex);
    out.guard("run" + tag, [&] {
      RunConfig c = base;
      c.example = ex;
      c.k = sc.k;
      const RunAudit a = audit_run(c, disc, 1.0 / 80);
      out.add("energy-identity" + tag, a.max_residual_ratio <= 1e-9,
              "max tau|res| / |u0|^2 " + num(a.max_residual_ratio));
      out.add("energy-monotone" + tag, a.monotone, std::to_string(a.ledger.rows.size()) + " steps");
      out.add("dissipation-bound" + tag, a.dissipation <= a.initial_l2_squared + 1e-8,
              num(a.dissipation) + " <= " + num(a.initial_l2_squared));
      out.add("pointwise-divergence" + tag, a.max_divergence_ratio <= 1e-9,
              "max |div| / |grad| " + num(a.max_divergence_ratio));
      const Diagnostics d = diagnostics(a.ledger, build_graded_grid(c.T, 1.0 / 80, c.alpha));
      out.add("partial-sums-monotone" + tag, d.dissipation_monotone,
              "S(N) " + num(d.rows.back().dissipation) + " <= " + num(d.dissipation_bound));
    });
  }

  out.guard("heavy-dissipation", [&] {
    RunConfig c = base;
    c.mu = 10.0;
    c.example = Example::Example1;
    const RunAudit a = audit_run(c, disc, 1.0 / 80, 0);
    const double ratio = a.final_l2 / std::sqrt(a.initial_l2_squared);
    out.add("heavy-dissipation", ratio < 0.01, "|u_N| / |u_0| " + num(ratio));
  });
}

}  // namespace

RunAudit audit_run(const RunConfig& config, const Discretization& disc, double tau, int samples) {
  const GradedGrid grid = build_graded_grid(config.T, tau, config.alpha);
  RunAudit audit;
  for (int j = 0; j < samples; ++j) {
    const int step = samples == 1 ? grid.N
                                  : 1 + static_cast<int>(std::lround(j * (grid.N - 1) / double(samples - 1)));
    if (std::find(audit.sampled_steps.begin(), audit.sampled_steps.end(), step) == audit.sampled_steps.end())
      audit.sampled_steps.push_back(step);
  }
  const QuadratureRule& rule = quadrature(assembly_exactness(disc.velocity->degree()));
  RunOptions options;
  options.solver = config.solver;
  options.observer = [&](int n, double, const FEFunction& u) {
    if (std::find(audit.sampled_steps.begin(), audit.sampled_steps.end(), n) == audit.sampled_steps.end()) return;
    const double g = h1_seminorm(u);
    const double d = max_pointwise_divergence(u, rule);
    audit.max_divergence_ratio = std::max(audit.max_divergence_ratio, g > 0.0 ? d / g : d);
  };
  const FEFunction u0 = initial_velocity(config, disc);
  RunResult result = run(u0, grid, config.mu, disc, options);
  audit.ledger = std::move(result.ledger);
  audit.initial_l2_squared = audit.ledger.initial_l2_squared;
  audit.max_residual_ratio = audit.ledger.max_relative_residual();
  audit.monotone = audit.ledger.monotone();
  audit.dissipation = 2.0 * config.mu * audit.ledger.rows.back().dissipation;
  audit.final_l2 = std::sqrt(std::max(audit.ledger.rows.back().l2_squared, 0.0));
  return audit;
}

std::vector<FEFunction> random_divfree_fields(const Discretization& disc, int count, std::uint64_t seed,
                                              const SolverOptions& options) {
  const FESpace& V = *disc.velocity;
  const int ns = V.num_scalar_dofs();
  const double radius = 2.5 / V.mesh()->structured_n();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  SaddleSolver solver(options);
  solver.factorize(disc.mass, disc.divergence, disc.constraints);
  std::vector<FEFunction> out;
  while (static_cast<int>(out.size()) < count) {
    const Point centre(radius + (1 - 2 * radius) * unit(rng), radius + (1 - 2 * radius) * unit(rng));
    Eigen::VectorXd raw = Eigen::VectorXd::Zero(V.num_dofs());
    for (int s = 0; s < ns; ++s)
      if ((V.scalar_nodes()[s] - centre).norm() < radius && V.free_index()[s] >= 0) {
        raw[s] = normal(rng);
        raw[ns + s] = normal(rng);
      }
    const SaddleSolution sol =
        solver.solve(restrict_full(disc.mass_full * raw, V), Eigen::VectorXd::Zero(disc.num_pressure()));
    if (sol.u.norm() == 0.0) continue;
    out.push_back(from_free(disc.velocity, sol.u));
  }
  return out;
}

std::vector<double> w14_ratios(const Discretization& disc, const std::vector<FEFunction>& fields,
                               const SolverOptions& options) {
  SaddleSolver solver(options);
  solver.factorize(disc.mass, disc.divergence, disc.constraints);
  std::vector<double> out;
  for (const FEFunction& phi : fields) {
    const SaddleSolution z =
        solver.solve(restrict_full(-(disc.stiffness_full * phi.coefficients), *disc.velocity),
                     Eigen::VectorXd::Zero(disc.num_pressure()));
    const double ah = std::sqrt(std::max(disc.l2_squared(z.u), 0.0));
    const double grad = h1_seminorm(phi);
    out.push_back(gradient_l4_norm(phi) / std::sqrt(grad * ah));
  }
  return out;
}

std::vector<PropertyResult> run_property_suite(const std::vector<SuiteCase>& cases, const RunConfig& config) {
  Collector basics("");
  check_basics(basics);
  std::vector<PropertyResult> all = std::move(basics.results);
  for (const SuiteCase& sc : cases) {
    Collector c("k" + std::to_string(sc.k) + "-n" + std::to_string(sc.n) + "/");
    check_case(c, sc, config);
    all.insert(all.end(), c.results.begin(), c.results.end());
  }
  return all;
}

}  // namespace nscrit
