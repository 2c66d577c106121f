#include "nscrit/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>

#include "nscrit/error.hpp"
#include "nscrit/examples.hpp"

namespace nscrit {

namespace {

/// Calls visit(x, value, gradient, weight) at every mapped rule point.
template <class Visit>
void for_each_point(const FEFunction& f, const QuadratureRule& rule, Visit&& visit) {
  const FESpace& space = *f.space;
  if (space.kind() != SpaceKind::Velocity)
    throw Error(ErrorKind::InvalidArgument, "velocity function expected");
  const Mesh& mesh = *space.mesh();
  const Tabulation tab = space.lagrange().tabulate(rule.points);
  const int ns = space.num_scalar_dofs();
  const int nb = space.local_size();
  Eigen::MatrixXd local(nb, 2);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const AffineMap map = affine_map(mesh, c);
    const Eigen::Matrix2d jinv = map.inverse_transpose.transpose();
    const auto& dofs = space.cell_dofs(c);
    for (int a = 0; a < nb; ++a) {
      local(a, 0) = f.coefficients[dofs[a]];
      local(a, 1) = f.coefficients[ns + dofs[a]];
    }
    for (int q = 0; q < rule.size(); ++q) {
      const Eigen::Vector2d value = local.transpose() * tab.values.row(q).transpose();
      Eigen::Matrix2d ref_grad;
      ref_grad.col(0) = local.transpose() * tab.dx.row(q).transpose();
      ref_grad.col(1) = local.transpose() * tab.dy.row(q).transpose();
      visit(map.map(rule.points[q]), value, Eigen::Matrix2d(ref_grad * jinv),
            rule.weights[q] * std::abs(map.det));
    }
  }
}

const QuadratureRule& norm_rule(const FEFunction& f) {
  return quadrature(std::min(20, 2 * f.space->degree()));
}

using Polygon = std::vector<Point>;

double cross2(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Sutherland-Hodgman clip of a convex polygon against a counter-clockwise triangle.
Polygon clip(Polygon poly, const std::array<Point, 3>& tri) {
  for (int e = 0; e < 3 && !poly.empty(); ++e) {
    const Point& p = tri[e];
    const Point& q = tri[(e + 1) % 3];
    const Point d = q - p;
    auto side = [&](const Point& x) { return cross2(d, x - p); };
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % m];
      const double sa = side(a), sb = side(b);
      if (sa >= 0.0) out.push_back(a);
      if ((sa >= 0.0) != (sb >= 0.0)) out.push_back(a + (b - a) * (sa / (sa - sb)));
    }
    poly = std::move(out);
  }
  return poly;
}

double polygon_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross2(p[i], p[(i + 1) % p.size()]);
  return 0.5 * a;
}

Eigen::Vector2d value_in_cell(const FEFunction& f, int cell, const Point& x) {
  const Eigen::Vector3d bary = f.space->mesh()->barycentric(cell, x);
  Eigen::Vector2d value;
  Eigen::Matrix2d gradient;
  evaluate_in_cell(f, cell, Eigen::Vector2d(bary[1], bary[2]), value, gradient);
  return value;
}

std::array<Point, 3> cell_points(const Mesh& mesh, int c) {
  const auto& t = mesh.cell(c);
  return {mesh.vertex(t[0]), mesh.vertex(t[1]), mesh.vertex(t[2])};
}

}  // namespace

double l2_norm(const FEFunction& f) {
  double s = 0.0;
  for_each_point(f, norm_rule(f), [&](const Point&, const Eigen::Vector2d& v, const Eigen::Matrix2d&, double w) {
    s += w * v.squaredNorm();
  });
  return std::sqrt(s);
}

double h1_seminorm(const FEFunction& f) {
  double s = 0.0;
  for_each_point(f, norm_rule(f), [&](const Point&, const Eigen::Vector2d&, const Eigen::Matrix2d& g, double w) {
    s += w * g.squaredNorm();
  });
  return std::sqrt(s);
}

double l2_error(const FEFunction& f, const VectorField& exact, const QuadratureRule& rule) {
  double s = 0.0;
  for_each_point(f, rule, [&](const Point& x, const Eigen::Vector2d& v, const Eigen::Matrix2d&, double w) {
    s += w * (v - exact(x)).squaredNorm();
  });
  return std::sqrt(s);
}

double h1_error(const FEFunction& f, const GradientField& exact, const QuadratureRule& rule) {
  double s = 0.0;
  for_each_point(f, rule, [&](const Point& x, const Eigen::Vector2d&, const Eigen::Matrix2d& g, double w) {
    s += w * (g - exact(x)).squaredNorm();
  });
  return std::sqrt(s);
}

double gradient_l4_norm(const FEFunction& f) {
  double s = 0.0;
  const QuadratureRule& rule = quadrature(std::min(20, 4 * f.space->degree()));
  for_each_point(f, rule, [&](const Point&, const Eigen::Vector2d&, const Eigen::Matrix2d& g, double w) {
    const double n2 = g.squaredNorm();
    s += w * n2 * n2;
  });
  return std::pow(s, 0.25);
}

double max_pointwise_divergence(const FEFunction& f, const QuadratureRule& rule) {
  double m = 0.0;
  for_each_point(f, rule, [&](const Point&, const Eigen::Vector2d&, const Eigen::Matrix2d& g, double) {
    m = std::max(m, std::abs(g.trace()));
  });
  return m;
}

double l2_error_cross(const FEFunction& a, const FEFunction& b) {
  if (a.space->kind() != SpaceKind::Velocity || b.space->kind() != SpaceKind::Velocity)
    throw Error(ErrorKind::InvalidArgument, "cross-mesh error needs velocity functions");
  if (a.space == b.space) {
    const Eigen::VectorXd d = a.coefficients - b.coefficients;
    double s = 0.0;
    for_each_point(FEFunction(a.space, d), norm_rule(a),
                   [&](const Point&, const Eigen::Vector2d& v, const Eigen::Matrix2d&, double w) {
                     s += w * v.squaredNorm();
                   });
    return std::sqrt(s);
  }
  const Mesh& ma = *a.space->mesh();
  const Mesh& mb = *b.space->mesh();
  const QuadratureRule& rule = quadrature(std::min(20, 2 * std::max(a.space->degree(), b.space->degree())));
  double s = 0.0;
  double covered = 0.0;
  for (int ca = 0; ca < ma.num_cells(); ++ca) {
    const auto ta = cell_points(ma, ca);
    const Point lo = ta[0].cwiseMin(ta[1]).cwiseMin(ta[2]);
    const Point hi = ta[0].cwiseMax(ta[1]).cwiseMax(ta[2]);
    for (int cb : mb.cells_overlapping(lo, hi)) {
      const Polygon piece = clip(Polygon(ta.begin(), ta.end()), cell_points(mb, cb));
      if (piece.size() < 3 || polygon_area(piece) <= 1e-15 * ma.cell_area(ca)) continue;
      for (std::size_t i = 1; i + 1 < piece.size(); ++i) {
        const Point& p0 = piece[0];
        const Point e1 = piece[i] - p0, e2 = piece[i + 1] - p0;
        const double det = std::abs(cross2(e1, e2));
        covered += 0.5 * det;
        for (int q = 0; q < rule.size(); ++q) {
          const Point x = p0 + rule.points[q].x() * e1 + rule.points[q].y() * e2;
          s += rule.weights[q] * det * (value_in_cell(a, ca, x) - value_in_cell(b, cb, x)).squaredNorm();
        }
      }
    }
  }
  if (std::abs(covered - 1.0) > 1e-10)
    throw Error(ErrorKind::IncompatibleMesh, "meshes do not cover the same domain (overlap area " +
                                                 std::to_string(covered) + ")");
  return std::sqrt(s);
}

double fit_rate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw Error(ErrorKind::InvalidArgument, "rate fit needs at least two pairs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [r, e] : pairs) {
    if (!(r > 0.0) || !(e > 0.0)) throw Error(ErrorKind::InvalidArgument, "rate fit needs positive entries");
    const double x = std::log(r), y = std::log(e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pairs.size());
  const double denom = n * sxx - sx * sx;
  if (std::abs(denom) <= 1e-300) throw Error(ErrorKind::InvalidArgument, "rate fit needs distinct resolutions");
  return (n * sxy - sx * sy) / denom;
}

double last_interval_rate(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw Error(ErrorKind::InvalidArgument, "rate fit needs at least two pairs");
  return fit_rate({pairs[pairs.size() - 2], pairs.back()});
}

MeshPtr family_mesh(int n, int k) {
  MeshPtr m = build_structured_mesh(n);
  return k >= 4 ? m : alfeld_split(m);
}

std::string family_name(int k) {
  return "scott-vogelius-p" + std::to_string(k) + (k >= 4 ? "-structured" : "-alfeld");
}

Problem build_problem(int n, int k) {
  MeshPtr mesh = family_mesh(n, k);
  SpacePtr v = build_velocity_space(mesh, k);
  SpacePtr q = build_pressure_space(mesh, k - 1);
  return {mesh, build_discretization(v, q)};
}

FEFunction initial_velocity(const RunConfig& config, const Discretization& disc) {
  VectorField data;
  switch (config.example) {
    case Example::Example1: data = initial_data_example1(config.eps); break;
    case Example::Example2: data = initial_data_example2(config.eps); break;
    case Example::Manufactured: data = manufactured_velocity(); break;
  }
  return l2_project_divfree(data, disc, quadrature(config.data_exactness), config.solver).u;
}

Diagnostics diagnostics(const EnergyLedger& ledger, const GradedGrid& grid, const std::vector<double>& errors) {
  Diagnostics d;
  d.dissipation_bound = ledger.initial_l2_squared / (2.0 * ledger.mu);
  double prev = 0.0;
  for (std::size_t i = 0; i < ledger.rows.size(); ++i) {
    const LedgerRow& r = ledger.rows[i];
    DiagnosticRow row;
    row.step = r.step;
    row.t = r.step <= grid.N ? grid.times[r.step] : r.t;
    row.dissipation = r.dissipation;
    row.weighted_gradient = r.weighted_gradient;
    row.weighted_rate = r.weighted_rate;
    if (i < errors.size()) row.weighted_error = row.t * errors[i];
    if (r.dissipation < prev) d.dissipation_monotone = false;
    prev = r.dissipation;
    d.max_weighted_rate = std::max(d.max_weighted_rate, r.weighted_rate);
    d.rows.push_back(row);
  }
  return d;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(std::max(count, 0)));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min(jobs, count));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
}

namespace {

std::string fmt(double v) { return format_number(v); }

std::vector<std::pair<std::string, std::string>> echo(const RunConfig& c, StudyKind kind) {
  std::vector<std::pair<std::string, std::string>> out = {
      {"study", kind == StudyKind::Time ? "time" : "space"},
      {"example", to_string(c.example)},
      {"T", fmt(c.T)},
      {"mu", fmt(c.mu)},
      {"alpha", fmt(c.alpha)},
      {"k", std::to_string(c.k)},
      {"family", family_name(c.k)},
      {"eps", fmt(c.eps)},
      {"data_exactness", std::to_string(c.data_exactness)},
  };
  auto list = [](const std::vector<Rational>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i].str();
    return s;
  };
  if (kind == StudyKind::Time) {
    out.emplace_back("h", c.h.str());
    out.emplace_back("taus", list(c.taus));
    out.emplace_back("tau_ref", c.tau_ref.str());
  } else {
    out.emplace_back("tau", c.tau.str());
    out.emplace_back("hs", list(c.hs));
    out.emplace_back("h_ref", c.h_ref.str());
  }
  out.emplace_back("backend", to_string(c.solver.backend));
  out.emplace_back("tolerance", fmt(c.solver.tolerance));
  return out;
}

void finish(StudyReport& report) {
  std::vector<std::pair<double, double>> pairs;
  bool positive = true;
  for (const auto& r : report.rows) {
    pairs.emplace_back(r.resolution, r.error);
    positive = positive && r.error > 0.0;
  }
  if (pairs.size() >= 2 && positive) {
    report.rate_ls = fit_rate(pairs);
    report.rate_last = last_interval_rate(pairs);
  } else {
    report.rate_ls = report.rate_last = std::nan("");
  }
}

template <class T>
std::vector<std::size_t> coarsest_first(const std::vector<T>& sizes) {
  std::vector<std::size_t> order(sizes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sizes[x].value() > sizes[y].value(); });
  return order;
}

}  // namespace

StudyReport run_time_study(const RunConfig& config) {
  config.validate();
  const Problem problem = build_problem(mesh_subdivisions(config.h), config.k);
  const Discretization& disc = problem.disc;
  const FEFunction u0 = initial_velocity(config, disc);

  const auto order = coarsest_first(config.taus);
  std::vector<Rational> taus;
  for (std::size_t i : order) taus.push_back(config.taus[i]);
  taus.push_back(config.tau_ref);

  const int count = static_cast<int>(taus.size());
  std::vector<RunResult> runs(count);
  std::vector<GradedGrid> grids(count);
  parallel_for(count, config.jobs, [&](int i) {
    grids[i] = build_graded_grid(config.T, taus[i].value(), config.alpha);
    RunOptions options;
    options.solver = config.solver;
    runs[i] = run(u0, grids[i], config.mu, disc, options);
  });

  StudyReport report;
  report.kind = StudyKind::Time;
  report.config = echo(config, StudyKind::Time);
  const Eigen::VectorXd& ref = runs.back().final.coefficients;
  for (int i = 0; i + 1 < count; ++i) {
    const Eigen::VectorXd d = to_free(FEFunction(disc.velocity, runs[i].final.coefficients - ref));
    report.rows.push_back({taus[i].str(), taus[i].value(), std::sqrt(std::max(disc.l2_squared(d), 0.0))});
  }
  for (int i = 0; i < count; ++i) {
    report.ledgers.push_back(runs[i].ledger);
    report.diagnostics.push_back(diagnostics(runs[i].ledger, grids[i]));
  }
  finish(report);
  return report;
}

StudyReport run_space_study(const RunConfig& config) {
  config.validate();
  const auto order = coarsest_first(config.hs);
  std::vector<Rational> hs;
  for (std::size_t i : order) hs.push_back(config.hs[i]);
  hs.push_back(config.h_ref);

  const GradedGrid grid = build_graded_grid(config.T, config.tau.value(), config.alpha);
  const int count = static_cast<int>(hs.size());
  std::vector<RunResult> runs(count);
  parallel_for(count, config.jobs, [&](int i) {
    const Problem problem = build_problem(mesh_subdivisions(hs[i]), config.k);
    RunOptions options;
    options.solver = config.solver;
    runs[i] = run(initial_velocity(config, problem.disc), grid, config.mu, problem.disc, options);
  });

  StudyReport report;
  report.kind = StudyKind::Space;
  report.config = echo(config, StudyKind::Space);
  for (int i = 0; i + 1 < count; ++i)
    report.rows.push_back({hs[i].str(), hs[i].value(), l2_error_cross(runs[i].final, runs.back().final)});
  for (int i = 0; i < count; ++i) {
    report.ledgers.push_back(runs[i].ledger);
    report.diagnostics.push_back(diagnostics(runs[i].ledger, grid));
  }
  finish(report);
  return report;
}

void write_report_csv(std::ostream& out, const StudyReport& report) {
  std::ostringstream s;
  s.precision(17);
  for (const auto& [key, value] : report.config) s << "# " << key << '=' << value << '\n';
  s << "label,error\n";
  for (const auto& r : report.rows) s << r.label << ',' << r.error << '\n';
  s << "rate_ls," << report.rate_ls << '\n';
  s << "rate_last," << report.rate_last << '\n';
  out << s.str();
}

}  // namespace nscrit
