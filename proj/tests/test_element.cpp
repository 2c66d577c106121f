#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "nscrit/element.hpp"
#include "nscrit/error.hpp"
#include "oracle.hpp"

using namespace nscrit;

namespace {

double apply(const QuadratureRule& r, int a, int b) {
  double s = 0.0;
  for (int i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i].x(), a) * std::pow(r.points[i].y(), b);
  return s;
}

}  // namespace

TEST_CASE("quadrature exactness audit against exact monomial integrals") {
  for (int d = 1; d <= 20; ++d) {
    const QuadratureRule& r = quadrature(d);
    CHECK(r.exactness_degree >= d);
    double worst = 0.0;
    for (int a = 0; a <= d; ++a)
      for (int b = 0; a + b <= d; ++b) {
        const double exact = oracle::monomial_integral(a, b).value();
        worst = std::max(worst, std::abs(apply(r, a, b) - exact) / exact);
      }
    CHECK_MESSAGE(worst < 1e-13, "degree " << d << " worst " << worst);
    for (int i = 0; i < r.size(); ++i) {
      CHECK(r.weights[i] > 0.0);
      CHECK(r.points[i].x() > 0.0);
      CHECK(r.points[i].y() > 0.0);
      CHECK(r.points[i].x() + r.points[i].y() < 1.0);
    }
  }
}

TEST_CASE("quadrature examples") {
  const auto& r1 = quadrature(1);
  CHECK(std::accumulate(r1.weights.begin(), r1.weights.end(), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
  for (int d = 3; d <= 20; ++d) CHECK(std::abs(apply(quadrature(d), 2, 1) - 1.0 / 60) < 1e-14);
  CHECK(&quadrature(7) == &quadrature(7));
}

TEST_CASE("random degree-12 polynomial integrates to the symbolic value") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  oracle::Poly p(12);
  for (int a = 0; a <= 12; ++a)
    for (int b = 0; a + b <= 12; ++b) p(a, b) = n(rng);
  const auto& rule = quadrature(12);
  double q = 0.0;
  for (int i = 0; i < rule.size(); ++i) q += rule.weights[i] * p.eval(rule.points[i].x(), rule.points[i].y());
  const double exact = p.integrate_reference();
  CHECK(std::abs(q - exact) <= 1e-12 * std::abs(exact));
}

TEST_CASE("quadrature degree out of range") {
  for (int d : {0, 21, -3}) {
    try {
      quadrature(d);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidArgument);
    }
  }
}

TEST_CASE("P1 values at the centroid") {
  const auto v = lagrange_eval(1, Eigen::Vector2d(1.0 / 3, 1.0 / 3));
  CHECK((v.values - Eigen::Vector3d::Constant(1.0 / 3)).norm() < 1e-15);
}

TEST_CASE("partition of unity and nodal property for every degree") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 1; k <= 4; ++k) {
    LagrangeBasis basis(k);
    REQUIRE(basis.size() == lagrange_dimension(k));
    for (int t = 0; t < 20; ++t) {
      double x = u(rng), y = u(rng);
      if (x + y > 1) {
        x = 1 - x;
        y = 1 - y;
      }
      const auto v = lagrange_eval(k, Eigen::Vector2d(x, y));
      CHECK(std::abs(v.values.sum() - 1.0) < 1e-12);
      CHECK(v.gradients.colwise().sum().norm() < 1e-12);
    }
    Eigen::MatrixXd nodal(basis.size(), basis.size());
    for (int j = 0; j < basis.size(); ++j) nodal.row(j) = lagrange_eval(k, basis.node_point(j)).values.transpose();
    CHECK((nodal - Eigen::MatrixXd::Identity(basis.size(), basis.size())).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Lagrange basis agrees with the Vandermonde oracle") {
  for (int k = 1; k <= 4; ++k) {
    LagrangeBasis basis(k);
    const auto ref = oracle::lagrange_reference(k);
    // match oracle nodes to library nodes by position
    std::vector<int> to_lib(ref.nodes.size(), -1);
    for (std::size_t i = 0; i < ref.nodes.size(); ++i)
      for (int j = 0; j < basis.size(); ++j)
        if ((basis.node_point(j) - ref.nodes[i]).norm() < 1e-13) to_lib[i] = j;
    for (int i : to_lib) REQUIRE(i >= 0);
    const Eigen::Vector2d x(0.21, 0.37);
    const auto v = lagrange_eval(k, x);
    for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
      CHECK(std::abs(v.values[to_lib[i]] - ref.functions[i].eval(x.x(), x.y())) < 1e-12);
      CHECK(std::abs(v.gradients(to_lib[i], 0) - ref.functions[i].dx().eval(x.x(), x.y())) < 1e-11);
      CHECK(std::abs(v.gradients(to_lib[i], 1) - ref.functions[i].dy().eval(x.x(), x.y())) < 1e-11);
    }
  }
}

TEST_CASE("Lagrange degree out of range") {
  CHECK_THROWS_AS(LagrangeBasis(0), Error);
  CHECK_THROWS_AS(lagrange_eval(5, Eigen::Vector2d(0.1, 0.1)), Error);
}

TEST_CASE("pressure basis is orthonormal with one nonzero mean") {
  for (int d = 0; d <= 3; ++d) {
    PressureBasis p(d);
    CHECK(p.size() == (d + 1) * (d + 2) / 2);
    const auto& rule = quadrature(2 * d + 1);
    const Eigen::MatrixXd t = p.tabulate(rule.points);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p.size(), p.size());
    for (int q = 0; q < rule.size(); ++q) gram += rule.weights[q] * t.row(q).transpose() * t.row(q);
    CHECK((gram - Eigen::MatrixXd::Identity(p.size(), p.size())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(p.reference_means()[0]) > 0.1);
    for (int i = 1; i < p.size(); ++i) CHECK(std::abs(p.reference_means()[i]) < 1e-13);
  }
}
