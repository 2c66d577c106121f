#include "doctest.h"

#include <cmath>
#include <random>

#include "nscrit/error.hpp"
#include "nscrit/property_suite.hpp"
#include "nscrit/saddle_solver.hpp"
#include "nscrit/study.hpp"
#include "oracle.hpp"

using namespace nscrit;

namespace {

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

SaddleSystem stokes_system(const Discretization& disc, unsigned seed) {
  SaddleSystem s;
  s.a = disc.stiffness;
  s.b = disc.divergence;
  s.f = random_vector(disc.num_free(), seed);
  s.g = Eigen::VectorXd::Zero(disc.num_pressure());
  s.constraints = disc.constraints;
  return s;
}

/// M/tau + mu K + N(w) for a random divergence-free w.
SaddleSystem step_system(const Discretization& disc, unsigned seed) {
  const auto w = random_divfree_fields(disc, 1, seed).front();
  SaddleSystem s;
  s.a = disc.mass * 80.0 + disc.stiffness * 0.05 + disc.convection(w);
  s.b = disc.divergence;
  s.f = disc.mass * to_free(w) * 80.0;
  s.g = Eigen::VectorXd::Zero(disc.num_pressure());
  s.constraints = disc.constraints;
  return s;
}

Discretization disc_on(const MeshPtr& mesh, int k) {
  return build_discretization(build_velocity_space(mesh, k), build_pressure_space(mesh, k - 1));
}

}  // namespace

TEST_CASE("zero data gives zero solution") {
  const Discretization disc = disc_on(build_structured_mesh(2), 4);
  SaddleSystem s = stokes_system(disc, 1);
  s.f.setZero();
  const auto sol = solve(s);
  CHECK(sol.u.norm() == 0.0);
  CHECK(sol.p.norm() == 0.0);
}

TEST_CASE("missing pressure constraints are reported as singular") {
  const Discretization disc = disc_on(alfeld_split(build_structured_mesh(2)), 2);
  SaddleSystem s = stokes_system(disc, 2);
  s.constraints = Eigen::MatrixXd(disc.num_pressure(), 0);
  for (auto backend : {SolverBackend::Direct, SolverBackend::Iterative}) {
    SolverOptions o;
    o.backend = backend;
    try {
      solve(s, o);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularSystem);
    }
  }
}

TEST_CASE("sparse solve matches the dense oracle") {
  for (const auto& [mesh, k] : std::vector<std::pair<MeshPtr, int>>{{build_structured_mesh(1), 4},
                                                                   {build_structured_mesh(2), 4},
                                                                   {alfeld_split(build_structured_mesh(1)), 2},
                                                                   {alfeld_split(build_structured_mesh(2)), 2}}) {
    const Discretization disc = disc_on(mesh, k);
    for (const SaddleSystem& s : {stokes_system(disc, 3), step_system(disc, 4)}) {
      const auto dense = oracle::dense_solve(s);
      const auto sparse = solve(s);
      CHECK((sparse.u - dense.u).norm() <= 1e-11 * dense.u.norm());
      CHECK((sparse.p - dense.p).norm() <= 1e-11 * std::max(dense.p.norm(), 1.0));
    }
  }
}

TEST_CASE("solution quality: residual, mean and discrete divergence") {
  const Problem p = build_problem(4, 2);
  for (auto backend : {SolverBackend::Direct, SolverBackend::Iterative}) {
    SolverOptions o;
    o.backend = backend;
    const SaddleSystem s = step_system(p.disc, 6);
    const auto sol = solve(s, o);
    CHECK(sol.report.relative_residual <= 1e-10);
    CHECK(std::abs(p.disc.pressure->mean_vector().dot(sol.p)) <= 1e-10);
    CHECK((p.disc.divergence * sol.u).norm() <= 1e-10 * sol.u.norm());
  }
}

TEST_CASE("direct and iterative backends agree") {
  for (const auto& [n, k] : std::vector<std::pair<int, int>>{{4, 2}, {2, 4}, {4, 3}}) {
    const Problem p = build_problem(n, k);
    for (const SaddleSystem& s : {stokes_system(p.disc, 7), step_system(p.disc, 8)}) {
      SolverOptions it;
      it.backend = SolverBackend::Iterative;
      const auto a = solve(s);
      const auto b = solve(s, it);
      CHECK((a.u - b.u).norm() <= 1e-8 * a.u.norm());
      CHECK((a.p - b.p).norm() <= 1e-8 * std::max(a.p.norm(), 1e-300));
    }
  }
}

TEST_CASE("factorisation is reused across right-hand sides") {
  const Problem p = build_problem(4, 2);
  const SaddleSystem s = stokes_system(p.disc, 9);
  SaddleSolver solver;
  solver.factorize(s.a, s.b, s.constraints);
  for (unsigned seed = 10; seed < 13; ++seed) {
    const Eigen::VectorXd f = random_vector(p.disc.num_free(), seed);
    const auto a = solver.solve(f, s.g);
    SaddleSystem t = s;
    t.f = f;
    CHECK((a.u - solve(t).u).norm() <= 1e-12 * a.u.norm());
  }
}

TEST_CASE("iterative backend reports non-convergence with its history") {
  const Problem p = build_problem(4, 2);
  SolverOptions o;
  o.backend = SolverBackend::Iterative;
  o.max_iterations = 2;
  o.restart = 2;
  o.tolerance = 1e-15;
  try {
    solve(step_system(p.disc, 14), o);
    FAIL("no error");
  } catch (const ConvergenceError& e) {
    CHECK(e.kind() == ErrorKind::ConvergenceFailure);
    CHECK_FALSE(e.residual_history().empty());
  }
}

TEST_CASE("manufactured Stokes problem converges at high order") {
  // psi = X(x) Y(y), X = x^2 (1-x)^2; u = (psi_y, -psi_x), p = x - 1/2
  auto X = [](double s) { return s * s * (1 - s) * (1 - s); };
  auto X1 = [](double s) { return 2 * s * (1 - s) * (1 - 2 * s); };
  auto X2 = [](double s) { return 2 - 12 * s + 12 * s * s; };
  auto X3 = [](double s) { return -12 + 24 * s; };
  const VectorField u = [&](const Point& x) {
    return Eigen::Vector2d(X(x.x()) * X1(x.y()), -X1(x.x()) * X(x.y()));
  };
  const VectorField f = [&](const Point& x) {
    const double a = x.x(), b = x.y();
    const double lap1 = X2(a) * X1(b) + X(a) * X3(b);
    const double lap2 = -(X3(a) * X(b) + X1(a) * X2(b));
    return Eigen::Vector2d(-lap1 + 1.0, -lap2);
  };
  std::vector<std::pair<double, double>> errors;
  for (int n : {2, 4}) {
    const Problem p = build_problem(n, 4);
    const auto& v = p.disc.velocity;
    const Eigen::VectorXd load = assemble_load(*v, f, quadrature(16));
    Eigen::VectorXd rhs(v->num_free_dofs());
    for (int i = 0; i < rhs.size(); ++i) rhs[i] = load[v->free_dofs()[i]];
    SaddleSystem s;
    s.a = p.disc.stiffness;
    s.b = p.disc.divergence;
    s.f = rhs;
    s.g = Eigen::VectorXd::Zero(p.disc.num_pressure());
    s.constraints = p.disc.constraints;
    const auto sol = solve(s);
    errors.emplace_back(1.0 / n, l2_error(from_free(v, sol.u), u, quadrature(16)));
  }
  const double rate = last_interval_rate(errors);
  CHECK_MESSAGE(rate >= 4.5, "rate " << rate);
}

TEST_CASE("inf-sup constant on small meshes against the dense oracle") {
  for (const auto& [mesh, k] : std::vector<std::pair<MeshPtr, int>>{{build_structured_mesh(1), 4},
                                                                   {build_structured_mesh(2), 4},
                                                                   {alfeld_split(build_structured_mesh(1)), 2},
                                                                   {alfeld_split(build_structured_mesh(2)), 2}}) {
    const Discretization disc = disc_on(mesh, k);
    const InfSupResult r = infsup_constant(disc);
    int kernel = 0;
    const double beta = oracle::infsup_dense(*disc.velocity, &kernel);
    CHECK(r.beta > 0.05);
    CHECK(std::abs(r.beta - beta) <= 1e-8 * beta);
    CHECK(r.kernel_dimension == kernel);
    CHECK(r.kernel_dimension == disc.constraints.cols());
    CHECK(std::abs(r.lambda_min_full) <= 1e-10);
  }
}

TEST_CASE("dense and iterative inf-sup agree on n=2") {
  for (int k : {2, 4}) {
    const Problem p = build_problem(2, k);
    const double dense = infsup_constant(p.disc).beta;
    const InfSupResult it = infsup_constant_iterative(p.disc);
    CHECK_FALSE(it.dense);
    CHECK(std::abs(dense - it.beta) <= 1e-8 * dense);
  }
}

TEST_CASE("backend names") {
  CHECK(parse_backend("direct") == SolverBackend::Direct);
  CHECK(parse_backend("iterative") == SolverBackend::Iterative);
  CHECK(to_string(SolverBackend::Iterative) == "iterative");
  CHECK_THROWS_AS(parse_backend("cholesky"), Error);
}
