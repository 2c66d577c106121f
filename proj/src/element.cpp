#include "nscrit/element.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

constexpr int kMaxExactness = 20;

/// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre(int m, std::vector<double>& x, std::vector<double>& w) {
  x.resize(m);
  w.resize(m);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= m; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    double p0 = 1.0, p1 = z;
    for (int j = 2; j <= m; ++j) {
      const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
      p0 = p1;
      p1 = p2;
    }
    dp = m * (z * p1 - p0) / (z * z - 1.0);
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/((1-z^2)p'^2) scaled to [0,1]
  }
}

QuadratureRule collapsed_rule(int exactness) {
  // the Duffy factor (1-u) adds one degree in u
  const int m = (exactness + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(m, x, w);
  QuadratureRule rule;
  rule.exactness_degree = exactness;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double u = x[i], v = x[j];
      rule.points.emplace_back(u, v * (1.0 - u));
      rule.weights.push_back(w[i] * w[j] * (1.0 - u));
    }
  }
  return rule;
}

/// Closed-form integral of x^a y^b over the reference triangle.
double reference_monomial_integral(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

}  // namespace

const QuadratureRule& quadrature(int exactness_degree) {
  if (exactness_degree < 1 || exactness_degree > kMaxExactness)
    throw Error(ErrorKind::InvalidArgument,
                "quadrature exactness must be in [1, 20], got " + std::to_string(exactness_degree));
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> all(kMaxExactness + 1);
    for (int d = 1; d <= kMaxExactness; ++d) all[d] = collapsed_rule(d);
    return all;
  }();
  return rules[exactness_degree];
}

LagrangeBasis::LagrangeBasis(int degree) : degree_(degree) {
  if (degree < 1 || degree > 4)
    throw Error(ErrorKind::InvalidArgument,
                "Lagrange degree must be in [1, 4], got " + std::to_string(degree));
  const int k = degree;
  for (int v = 0; v < 3; ++v) {
    std::array<int, 3> a{0, 0, 0};
    a[v] = k;
    nodes_.push_back(a);
  }
  for (int e = 0; e < 3; ++e) {
    const int from = (e + 1) % 3, to = (e + 2) % 3;
    for (int j = 1; j < k; ++j) {
      std::array<int, 3> a{0, 0, 0};
      a[from] = k - j;
      a[to] = j;
      nodes_.push_back(a);
    }
  }
  for (int a2 = 1; a2 < k; ++a2)
    for (int a1 = 1; a1 + a2 < k; ++a1) nodes_.push_back({k - a1 - a2, a1, a2});
}

Eigen::Vector2d LagrangeBasis::node_point(int i) const {
  return {static_cast<double>(nodes_[i][1]) / degree_, static_cast<double>(nodes_[i][2]) / degree_};
}

void LagrangeBasis::eval(const Eigen::Vector2d& x, Eigen::Ref<Eigen::VectorXd> values,
                         Eigen::Ref<Eigen::VectorXd> dx, Eigen::Ref<Eigen::VectorXd> dy) const {
  const int k = degree_;
  const double lambda[3] = {1.0 - x.x() - x.y(), x.x(), x.y()};
  const double dlx[3] = {-1.0, 1.0, 0.0};
  const double dly[3] = {-1.0, 0.0, 1.0};
  // P_m(l) = prod_{i<m} (k l - i)/(i+1) and its derivative, per barycentric
  double p[3][5], dp[3][5];
  for (int a = 0; a < 3; ++a) {
    p[a][0] = 1.0;
    dp[a][0] = 0.0;
    for (int m = 1; m <= k; ++m) {
      const double factor = (k * lambda[a] - (m - 1)) / m;
      p[a][m] = p[a][m - 1] * factor;
      dp[a][m] = dp[a][m - 1] * factor + p[a][m - 1] * static_cast<double>(k) / m;
    }
  }
  for (int i = 0; i < size(); ++i) {
    const auto& n = nodes_[i];
    const double f0 = p[0][n[0]], f1 = p[1][n[1]], f2 = p[2][n[2]];
    const double g0 = dp[0][n[0]], g1 = dp[1][n[1]], g2 = dp[2][n[2]];
    values[i] = f0 * f1 * f2;
    dx[i] = g0 * dlx[0] * f1 * f2 + f0 * g1 * dlx[1] * f2 + f0 * f1 * g2 * dlx[2];
    dy[i] = g0 * dly[0] * f1 * f2 + f0 * g1 * dly[1] * f2 + f0 * f1 * g2 * dly[2];
  }
}

Tabulation LagrangeBasis::tabulate(const std::vector<Eigen::Vector2d>& points) const {
  const int nq = static_cast<int>(points.size());
  Tabulation tab{Eigen::MatrixXd(nq, size()), Eigen::MatrixXd(nq, size()),
                 Eigen::MatrixXd(nq, size())};
  Eigen::VectorXd v(size()), gx(size()), gy(size());
  for (int q = 0; q < nq; ++q) {
    eval(points[q], v, gx, gy);
    tab.values.row(q) = v.transpose();
    tab.dx.row(q) = gx.transpose();
    tab.dy.row(q) = gy.transpose();
  }
  return tab;
}

LagrangeValues lagrange_eval(int k, const Eigen::Vector2d& x) {
  constexpr double tol = 1e-12;
  if (x.x() < -tol || x.y() < -tol || x.x() + x.y() > 1.0 + tol)
    throw Error(ErrorKind::InvalidArgument, "point outside the reference triangle");
  const LagrangeBasis basis(k);
  LagrangeValues out{Eigen::VectorXd(basis.size()),
                     Eigen::Matrix<double, Eigen::Dynamic, 2>(basis.size(), 2)};
  Eigen::VectorXd gx(basis.size()), gy(basis.size());
  basis.eval(x, out.values, gx, gy);
  out.gradients.col(0) = gx;
  out.gradients.col(1) = gy;
  return out;
}

PressureBasis::PressureBasis(int degree) : degree_(degree) {
  if (degree < 0 || degree > 3)
    throw Error(ErrorKind::InvalidArgument,
                "pressure degree must be in [0, 3], got " + std::to_string(degree));
  for (int total = 0; total <= degree; ++total)
    for (int b = 0; b <= total; ++b) exponents_.push_back({total - b, b});
  const int n = size();
  Eigen::MatrixXd gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      gram(i, j) = reference_monomial_integral(exponents_[i][0] + exponents_[j][0],
                                               exponents_[i][1] + exponents_[j][1]);
  // gram = L L^T, rows of L^{-1} are orthonormal combinations
  const Eigen::MatrixXd lower = gram.llt().matrixL();
  coefficients_ = lower.inverse();
  means_.resize(n);
  for (int i = 0; i < n; ++i) {
    double m = 0.0;
    for (int j = 0; j < n; ++j)
      m += coefficients_(i, j) * reference_monomial_integral(exponents_[j][0], exponents_[j][1]);
    means_[i] = m;
  }
}

void PressureBasis::eval(const Eigen::Vector2d& x, Eigen::Ref<Eigen::VectorXd> values) const {
  const int n = size();
  Eigen::VectorXd mono(n);
  for (int j = 0; j < n; ++j)
    mono[j] = std::pow(x.x(), exponents_[j][0]) * std::pow(x.y(), exponents_[j][1]);
  values = coefficients_ * mono;
}

Eigen::MatrixXd PressureBasis::tabulate(const std::vector<Eigen::Vector2d>& points) const {
  Eigen::MatrixXd out(points.size(), size());
  Eigen::VectorXd v(size());
  for (std::size_t q = 0; q < points.size(); ++q) {
    eval(points[q], v);
    out.row(static_cast<Eigen::Index>(q)) = v.transpose();
  }
  return out;
}

}  // namespace nscrit
