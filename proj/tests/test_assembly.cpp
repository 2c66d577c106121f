#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/SparseLU>

#include "nscrit/assembly.hpp"
#include "nscrit/error.hpp"
#include "nscrit/examples.hpp"
#include "nscrit/property_suite.hpp"
#include "nscrit/study.hpp"
#include "oracle.hpp"

using namespace nscrit;

namespace {

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

Eigen::VectorXd random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

Eigen::VectorXd constant_pressure(const FESpace& q) {
  return q.mean_vector().cwiseQuotient(q.mass_diagonal());
}

struct Case {
  MeshPtr mesh;
  int k;
};

std::vector<Case> small_cases() {
  return {{build_structured_mesh(1), 4}, {build_structured_mesh(2), 4},
          {alfeld_split(build_structured_mesh(1)), 2}, {alfeld_split(build_structured_mesh(2)), 2},
          {alfeld_split(build_structured_mesh(2)), 3}};
}

}  // namespace

TEST_CASE("P1 reference mass and stiffness") {
  const auto& rule = quadrature(4);
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero(), k = Eigen::Matrix3d::Zero();
  for (int q = 0; q < rule.size(); ++q) {
    const auto v = lagrange_eval(1, rule.points[q]);
    m += rule.weights[q] * v.values * v.values.transpose();
    k += rule.weights[q] * v.gradients * v.gradients.transpose();
  }
  Eigen::Matrix3d m_exact, k_exact;
  m_exact << 2, 1, 1, 1, 2, 1, 1, 1, 2;
  m_exact *= 0.5 / 12;
  k_exact << 2, -1, -1, -1, 1, 0, -1, 0, 1;
  k_exact *= 0.5;
  CHECK((m - m_exact).norm() < 1e-15);
  CHECK((k - k_exact).norm() < 1e-14);
}

TEST_CASE("sparse forms agree with the dense oracle") {
  for (const auto& c : small_cases()) {
    CAPTURE(c.k);
    CAPTURE(c.mesh->num_cells());
    const auto v = build_velocity_space(c.mesh, c.k);
    const auto q = build_pressure_space(c.mesh, c.k - 1);
    CHECK(rel(Eigen::MatrixXd(assemble_mass(*v)), oracle::mass(*v)) < 1e-11);
    CHECK(rel(Eigen::MatrixXd(assemble_stiffness(*v)), oracle::stiffness(*v)) < 1e-11);
    const FEFunction w(v, random_vector(v->num_dofs(), 9));
    CHECK(rel(Eigen::MatrixXd(assemble_convection(*v, w)), oracle::convection(*v, w.coefficients)) < 1e-11);
    const Eigen::MatrixXd b(assemble_divergence(*v, *q));
    const Eigen::MatrixXd gram = b.transpose() * q->mass_diagonal().cwiseInverse().asDiagonal() * b;
    CHECK(rel(gram, oracle::divergence_gram(*v)) < 1e-11);
  }
}

TEST_CASE("mass examples") {
  const auto v = build_velocity_space(build_structured_mesh(3), 4);
  const CsrMatrix m = assemble_mass(*v);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(v->num_dofs());
  CHECK(std::abs(one.dot(m * one) - 2.0) < 1e-13);
  CHECK((Eigen::MatrixXd(m) - Eigen::MatrixXd(m.transpose())).cwiseAbs().maxCoeff() == 0.0);
  const Discretization disc = build_discretization(v, build_pressure_space(v->mesh(), 3));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(disc.mass)};
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("stiffness rows sum to zero before elimination") {
  const auto v = build_velocity_space(alfeld_split(build_structured_mesh(3)), 3);
  const CsrMatrix k = assemble_stiffness(*v);
  CHECK((k * Eigen::VectorXd::Ones(v->num_dofs())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Eigen::MatrixXd(k) - Eigen::MatrixXd(k.transpose())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Dirichlet Laplace solve converges at order k+1") {
  const double pi = M_PI;
  const VectorField exact = [&](const Point& x) {
    return Eigen::Vector2d(std::sin(pi * x.x()) * std::sin(pi * x.y()), 0.0);
  };
  const VectorField rhs = [&](const Point& x) {
    return Eigen::Vector2d(2 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y()), 0.0);
  };
  for (int k : {2, 3, 4}) {
    std::vector<std::pair<double, double>> errors;
    for (int n : {4, 8}) {
      const Problem p = build_problem(n, k);
      const auto& v = p.disc.velocity;
      const Eigen::VectorXd load = assemble_load(*v, rhs, quadrature(std::min(3 * k + 4, 20)));
      Eigen::VectorXd free_load(v->num_free_dofs());
      for (int i = 0; i < v->num_free_dofs(); ++i) free_load[i] = load[v->free_dofs()[i]];
      Eigen::SparseMatrix<double> a = p.disc.stiffness;
      Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(a);
      const FEFunction u = from_free(v, lu.solve(free_load));
      errors.emplace_back(1.0 / n, l2_error(u, exact, quadrature(2 * k + 4)));
    }
    const double rate = fit_rate(errors);
    CHECK_MESSAGE(rate >= (k + 1) - 0.2, "k=" << k << " rate " << rate);
  }
}

TEST_CASE("divergence examples") {
  for (const auto& c : small_cases()) {
    const auto v = build_velocity_space(c.mesh, c.k);
    const auto q = build_pressure_space(c.mesh, c.k - 1);
    const CsrMatrix b = assemble_divergence(*v, *q);
    const auto ones = interpolate(v, [](const Point&) { return Eigen::Vector2d(1, 1); });
    CHECK((b * ones.coefficients).norm() < 1e-13);
    const auto hyper = interpolate(v, [](const Point& x) { return Eigen::Vector2d(x.x(), -x.y()); });
    CHECK((b * hyper.coefficients).cwiseAbs().maxCoeff() < 1e-13);
    const Discretization disc = build_discretization(v, q);
    const Eigen::VectorXd bt1 = Eigen::MatrixXd(disc.divergence).transpose() * constant_pressure(*q);
    CHECK(bt1.cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("convection examples") {
  const auto v = build_velocity_space(build_structured_mesh(2), 4);
  const FEFunction zero(v);
  CHECK(assemble_convection(*v, zero).cwiseAbs().sum() == 0.0);

  const auto w = interpolate(v, [](const Point&) { return Eigen::Vector2d(1, 0); });
  const auto u = interpolate(v, [](const Point& x) { return Eigen::Vector2d(x.y(), 0); });
  CHECK((assemble_convection(*v, w) * u.coefficients).cwiseAbs().maxCoeff() < 1e-13);

  // the pattern never depends on w
  const CsrMatrix n = assemble_convection(*v, zero);
  const CsrMatrix m = assemble_mass(*v);
  CHECK(n.nonZeros() == m.nonZeros());
}

TEST_CASE("convection is skew for divergence-free transport") {
  for (int k : {2, 4}) {
    const Problem p = build_problem(4, k);
    const auto fields = random_divfree_fields(p.disc, 3, 77);
    for (const auto& w : fields) {
      const CsrMatrix n = p.disc.convection(w);
      for (unsigned s = 0; s < 3; ++s) {
        const Eigen::VectorXd x = random_vector(p.disc.num_free(), 100 + s);
        CHECK(std::abs(x.dot(n * x)) <= 1e-11 * x.squaredNorm() * std::max(1.0, l2_norm(w)));
      }
    }
  }
}

TEST_CASE("load examples") {
  const auto v = build_velocity_space(alfeld_split(build_structured_mesh(3)), 2);
  const auto& rule = quadrature(8);
  CHECK(assemble_load(*v, [](const Point&) { return Eigen::Vector2d::Zero(); }, rule).norm() == 0.0);
  const Eigen::VectorXd b = assemble_load(*v, [](const Point&) { return Eigen::Vector2d(1, 1); }, rule);
  const Eigen::VectorXd mb = assemble_mass(*v) * Eigen::VectorXd::Ones(v->num_dofs());
  CHECK((b - mb).cwiseAbs().maxCoeff() < 1e-14);

  const Eigen::VectorXd w = assemble_load(*v, initial_data_example2(0.01), quadrature(20));
  CHECK(w.allFinite());

  try {
    assemble_load(*v, [](const Point&) { return Eigen::Vector2d(std::numeric_limits<double>::quiet_NaN(), 0); },
                  rule);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NumericData);
  }
}

TEST_CASE("gradient load reproduces the stiffness action") {
  const auto v = build_velocity_space(build_structured_mesh(2), 4);
  const auto u = interpolate(v, [](const Point& x) { return Eigen::Vector2d(x.x() * x.y(), x.x() * x.x()); });
  const Eigen::VectorXd b = assemble_gradient_load(
      *v, [](const Point& x) {
        Eigen::Matrix2d g;
        g << x.y(), x.x(), 2 * x.x(), 0;
        return g;
      },
      quadrature(8));
  CHECK((b - assemble_stiffness(*v) * u.coefficients).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("assembly is deterministic") {
  const auto v = build_velocity_space(alfeld_split(build_structured_mesh(3)), 3);
  const FEFunction w(v, random_vector(v->num_dofs(), 4));
  const CsrMatrix a = assemble_convection(*v, w), b = assemble_convection(*v, w);
  REQUIRE(a.nonZeros() == b.nonZeros());
  CHECK(std::equal(a.valuePtr(), a.valuePtr() + a.nonZeros(), b.valuePtr()));
  CHECK(std::equal(a.innerIndexPtr(), a.innerIndexPtr() + a.nonZeros(), b.innerIndexPtr()));
}

TEST_CASE("CSR rows are sorted and unique") {
  const auto v = build_velocity_space(build_structured_mesh(3), 4);
  const CsrMatrix m = assemble_mass(*v);
  for (int r = 0; r < m.outerSize(); ++r)
    for (int i = m.outerIndexPtr()[r] + 1; i < m.outerIndexPtr()[r + 1]; ++i)
      CHECK(m.innerIndexPtr()[i - 1] < m.innerIndexPtr()[i]);
}
