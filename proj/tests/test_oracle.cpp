#include "doctest.h"

#include <cmath>
#include <random>

#include "nscrit/assembly.hpp"
#include "nscrit/error.hpp"
#include "nscrit/saddle_solver.hpp"
#include "oracle.hpp"

using oracle::Poly;

TEST_CASE("monomial integrals match the factorial formula") {
  auto f = oracle::monomial_integral(0, 0);
  CHECK(f.num == 1);
  CHECK(f.den == 2);
  f = oracle::monomial_integral(2, 1);
  CHECK(f.num == 1);
  CHECK(f.den == 60);
  f = oracle::monomial_integral(1, 0);
  CHECK(f.num == 1);
  CHECK(f.den == 6);
  // 20! 20! / 42! computed in floating point
  const double expect = std::exp(2 * std::lgamma(21.0) - std::lgamma(43.0));
  CHECK(oracle::monomial_integral(20, 20).value() == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("monomial integral rejects out-of-range exponents") {
  CHECK_THROWS_AS(oracle::monomial_integral(-1, 0), nscrit::Error);
  CHECK_THROWS_AS(oracle::monomial_integral(30, 11), nscrit::Error);
  try {
    oracle::monomial_integral(41, 0);
  } catch (const nscrit::Error& e) {
    CHECK(e.kind() == nscrit::ErrorKind::InvalidArgument);
  }
}

TEST_CASE("polynomial arithmetic") {
  const Poly x = Poly::x(), y = Poly::y();
  const Poly p = x * x * y + Poly::constant(2.0);
  CHECK(p.eval(0.5, 0.25) == doctest::Approx(2.0625));
  CHECK(p.dx().eval(0.5, 0.25) == doctest::Approx(0.25));
  CHECK(p.dy().eval(0.5, 0.25) == doctest::Approx(0.25));
  CHECK(p.integrate_reference() == doctest::Approx(1.0 / 60 + 1.0));
  // p(o + J xi) evaluated two ways
  const Eigen::Vector2d o(0.3, -0.2);
  Eigen::Matrix2d j;
  j << 1.5, 0.25, -0.5, 2.0;
  const Poly q = p.compose_affine(o, j);
  const Eigen::Vector2d xi(0.2, 0.7);
  const Eigen::Vector2d x_phys = o + j * xi;
  CHECK(q.eval(xi.x(), xi.y()) == doctest::Approx(p.eval(x_phys.x(), x_phys.y())).epsilon(1e-13));
}

TEST_CASE("Vandermonde Lagrange basis is nodal") {
  for (int k = 1; k <= 4; ++k) {
    const auto b = oracle::lagrange_reference(k);
    REQUIRE(b.functions.size() == static_cast<std::size_t>((k + 1) * (k + 2) / 2));
    double worst = 0.0;
    for (std::size_t i = 0; i < b.functions.size(); ++i)
      for (std::size_t n = 0; n < b.nodes.size(); ++n)
        worst = std::max(worst, static_cast<double>(std::abs(b.functions[i].eval(b.nodes[n].x(), b.nodes[n].y()) - (i == n ? 1.0L : 0.0L))));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("dense solve with identity block and no constraints returns f") {
  nscrit::SaddleSystem s;
  s.a.resize(5, 5);
  s.a.setIdentity();
  s.b.resize(0, 5);
  s.f = Eigen::VectorXd::LinSpaced(5, -1.0, 3.0);
  s.g = Eigen::VectorXd(0);
  s.constraints = Eigen::MatrixXd(0, 0);
  const auto sol = oracle::dense_solve(s);
  CHECK((sol.u - s.f).norm() < 1e-15);
}

TEST_CASE("dense solve refuses a singular system") {
  nscrit::SaddleSystem s;
  s.a.resize(2, 2);
  s.a.insert(0, 0) = 1.0;
  s.b.resize(0, 2);
  s.f = Eigen::VectorXd::Ones(2);
  s.g = Eigen::VectorXd(0);
  s.constraints = Eigen::MatrixXd(0, 0);
  CHECK_THROWS_AS(oracle::dense_solve(s), nscrit::Error);
}

TEST_CASE("oracle mass integrates the constant field to twice the area") {
  const auto mesh = nscrit::build_structured_mesh(2);
  const auto v = nscrit::build_velocity_space(mesh, 4);
  const Eigen::MatrixXd m = oracle::mass(*v);
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(m.rows());
  CHECK(std::abs(one.dot(m * one) - 2.0) < 1e-12);
}

TEST_CASE("oracle stiffness has constants in its kernel") {
  const auto mesh = nscrit::alfeld_split(nscrit::build_structured_mesh(1));
  const auto v = nscrit::build_velocity_space(mesh, 2);
  const Eigen::MatrixXd k = oracle::stiffness(*v);
  CHECK((k * Eigen::VectorXd::Ones(k.rows())).norm() < 1e-12);
}
