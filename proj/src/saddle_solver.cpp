#include "nscrit/saddle_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#ifdef NSCRIT_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#else
#include <Eigen/SparseLU>
#endif
#include <Eigen/SparseCholesky>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kSingularConditionLimit = 1e13;

/// Sparse LU that keeps its symbolic analysis while the pattern is unchanged.
class SparseLu {
 public:
  void compute(const ColMatrix& m) {
    const bool same_pattern =
        analyzed_ && m.rows() == rows_ && m.nonZeros() == static_cast<Eigen::Index>(inner_.size()) &&
        std::equal(outer_.begin(), outer_.end(), m.outerIndexPtr()) &&
        std::equal(inner_.begin(), inner_.end(), m.innerIndexPtr());
    if (!same_pattern) {
      lu_.analyzePattern(m);
      rows_ = m.rows();
      outer_.assign(m.outerIndexPtr(), m.outerIndexPtr() + m.outerSize() + 1);
      inner_.assign(m.innerIndexPtr(), m.innerIndexPtr() + m.nonZeros());
      analyzed_ = true;
    }
    lu_.factorize(m);
    if (lu_.info() != Eigen::Success) {
      analyzed_ = false;
      throw Error(ErrorKind::SingularSystem, "sparse LU factorisation failed");
    }
    probe_singularity(m);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return lu_.solve(rhs); }

 private:
  /// One inverse-iteration step on the equilibrated matrix estimates its
  /// condition number; exact zero pivots are rare in floating point.
  void probe_singularity(const ColMatrix& m) {
    const Eigen::Index n = m.rows();
    Eigen::VectorXd row_max = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < m.outerSize(); ++c)
      for (ColMatrix::InnerIterator it(m, c); it; ++it)
        row_max[it.row()] = std::max(row_max[it.row()], std::abs(it.value()));
    if ((row_max.array() == 0.0).any())
      throw Error(ErrorKind::SingularSystem, "matrix has an empty row");
    const Eigen::VectorXd s = row_max.cwiseSqrt().cwiseInverse();
    // infinity norm of S M S
    Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < m.outerSize(); ++c)
      for (ColMatrix::InnerIterator it(m, c); it; ++it)
        row_sum[it.row()] += std::abs(it.value()) * s[it.row()] * s[c];
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = dist(rng);
    // (S M S)^{-1} r = S^{-1} M^{-1} S^{-1} r
    const Eigen::VectorXd x = solve(r.cwiseQuotient(s)).cwiseQuotient(s);
    if (!x.allFinite()) throw Error(ErrorKind::SingularSystem, "non-finite solution of probe system");
    const double estimate = row_sum.maxCoeff() * x.lpNorm<Eigen::Infinity>() / r.lpNorm<Eigen::Infinity>();
    condition_estimate_ = estimate;
    if (estimate > kSingularConditionLimit)
      throw Error(ErrorKind::SingularSystem,
                  "augmented matrix is numerically singular (condition estimate " +
                      std::to_string(estimate) + ")");
  }

#ifdef NSCRIT_HAVE_UMFPACK
  Eigen::UmfPackLU<ColMatrix> lu_;
#else
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu_;
#endif
  bool analyzed_ = false;
  Eigen::Index rows_ = 0;
  std::vector<int> outer_, inner_;
  double condition_estimate_ = 0.0;
};

/// Column-major augmented matrix [[A, B^T, 0], [B, 0, C], [0, C^T, 0]].
ColMatrix augmented_matrix(const CsrMatrix& a, const CsrMatrix& b, const Eigen::MatrixXd& c) {
  const int nu = static_cast<int>(a.rows());
  const int np = static_cast<int>(b.rows());
  const int nc = static_cast<int>(c.cols());
  Triplets t;
  t.reserve(a.nonZeros() + 2 * b.nonZeros() + 2 * static_cast<std::size_t>(np));
  for (int r = 0; r < a.outerSize(); ++r)
    for (CsrMatrix::InnerIterator it(a, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  for (int r = 0; r < b.outerSize(); ++r)
    for (CsrMatrix::InnerIterator it(b, r); it; ++it) {
      t.emplace_back(nu + r, it.col(), it.value());
      t.emplace_back(it.col(), nu + r, it.value());
    }
  for (int k = 0; k < nc; ++k)
    for (int i = 0; i < np; ++i)
      if (c(i, k) != 0.0) {
        t.emplace_back(nu + i, nu + np + k, c(i, k));
        t.emplace_back(nu + np + k, nu + i, c(i, k));
      }
  ColMatrix m(nu + np + nc, nu + np + nc);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

/// Column-major [[S, C], [C^T, 0]].
ColMatrix bordered_matrix(const CsrMatrix& s, const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(s.rows());
  const int nc = static_cast<int>(c.cols());
  Triplets t;
  t.reserve(s.nonZeros() + 2 * static_cast<std::size_t>(n));
  for (int r = 0; r < s.outerSize(); ++r)
    for (CsrMatrix::InnerIterator it(s, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  for (int k = 0; k < nc; ++k)
    for (int i = 0; i < n; ++i)
      if (c(i, k) != 0.0) {
        t.emplace_back(i, n + k, c(i, k));
        t.emplace_back(n + k, i, c(i, k));
      }
  ColMatrix m(n + nc, n + nc);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

}  // namespace

SolverBackend parse_backend(const std::string& name) {
  if (name == "direct") return SolverBackend::Direct;
  if (name == "iterative") return SolverBackend::Iterative;
  throw Error(ErrorKind::InvalidArgument, "unknown solver backend '" + name + "'");
}

std::string to_string(SolverBackend backend) {
  return backend == SolverBackend::Direct ? "direct" : "iterative";
}

struct SaddleSolver::Impl {
  int nu = 0, np = 0, nc = 0;
  /// The system as posed; used for residuals and GMRES products.
  ColMatrix augmented;
  Eigen::MatrixXd constraints;

  // Direct backend. A dense first constraint column (the pressure mean)
  // wrecks fill-reducing orderings, so the factorised matrix pins one
  // pressure DOF instead and the kernel correction below restores the
  // constraints as posed.
  SparseLu lu;
  Eigen::MatrixXd pinned;        // constraint columns of the factorised matrix
  Eigen::MatrixXd kernel;        // basis of ker B^T with pinned^T kernel = I
  Eigen::MatrixXd kernel_c;      // kernel^T constraints (for the multipliers)
  Eigen::MatrixXd constraint_k;  // constraints^T kernel (for the pressure)

  // Iterative backend: block-diagonal preconditioner.
  SparseLu velocity_lu;
  SparseLu pressure_lu;

  Eigen::VectorXd apply_preconditioner(const Eigen::VectorXd& v) const {
    Eigen::VectorXd z(v.size());
    z.head(nu) = velocity_lu.solve(v.head(nu));
    z.tail(np + nc) = pressure_lu.solve(v.tail(np + nc));
    return z;
  }

  /// Exact solve of the posed system through the pinned factorisation.
  Eigen::VectorXd direct_solve(const Eigen::VectorXd& rhs) const {
    if (nc == 0) return lu.solve(rhs);
    const Eigen::VectorXd g = rhs.segment(nu, np);
    const Eigen::VectorXd c_rhs = rhs.tail(nc);
    // multipliers make the pressure equation compatible with ker B^T
    const Eigen::VectorXd lambda = kernel_c.partialPivLu().solve(kernel.transpose() * g);
    Eigen::VectorXd inner = Eigen::VectorXd::Zero(rhs.size());
    inner.head(nu) = rhs.head(nu);
    inner.segment(nu, np) = g - constraints * lambda;
    Eigen::VectorXd x = lu.solve(inner);
    Eigen::VectorXd p = x.segment(nu, np);
    p += kernel * constraint_k.partialPivLu().solve(c_rhs - constraints.transpose() * p);
    x.segment(nu, np) = p;
    x.tail(nc) = lambda;
    return x;
  }

  Eigen::VectorXd gmres(const Eigen::VectorXd& rhs, const SolverOptions& options,
                        ResidualReport& report) const {
    const Eigen::Index n = rhs.size();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return x;
    const int m = std::max(1, options.restart);
    int total = 0;
    while (total < options.max_iterations) {
      Eigen::VectorXd r = rhs - augmented * x;
      double beta = r.norm();
      report.history.push_back(beta / rhs_norm);
      if (beta / rhs_norm <= options.tolerance) break;
      Eigen::MatrixXd v(n, m + 1), h = Eigen::MatrixXd::Zero(m + 1, m);
      Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m + 1);
      e[0] = beta;
      v.col(0) = r / beta;
      int j = 0;
      for (; j < m && total < options.max_iterations; ++j, ++total) {
        Eigen::VectorXd w = augmented * apply_preconditioner(v.col(j));
        for (int i = 0; i <= j; ++i) {
          h(i, j) = w.dot(v.col(i));
          w -= h(i, j) * v.col(i);
        }
        h(j + 1, j) = w.norm();
        if (h(j + 1, j) > 0.0) v.col(j + 1) = w / h(j + 1, j);
        for (int i = 0; i < j; ++i) {
          const double tmp = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
          h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
          h(i, j) = tmp;
        }
        const double denom = std::hypot(h(j, j), h(j + 1, j));
        cs[j] = h(j, j) / denom;
        sn[j] = h(j + 1, j) / denom;
        h(j, j) = denom;
        h(j + 1, j) = 0.0;
        e[j + 1] = -sn[j] * e[j];
        e[j] = cs[j] * e[j];
        report.history.push_back(std::abs(e[j + 1]) / rhs_norm);
        if (std::abs(e[j + 1]) / rhs_norm <= options.tolerance * 0.5) {
          ++j;
          ++total;
          break;
        }
      }
      const Eigen::VectorXd y =
          h.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(e.head(j));
      x += apply_preconditioner(v.leftCols(j) * y);
    }
    report.iterations = total;
    const double final = (rhs - augmented * x).norm() / rhs_norm;
    if (final > options.tolerance)
      throw ConvergenceError("GMRES stopped at relative residual " + std::to_string(final),
                             report.history);
    return x;
  }
};

SaddleSolver::SaddleSolver(SolverOptions options)
    : options_(options), impl_(std::make_unique<Impl>()) {}
SaddleSolver::~SaddleSolver() = default;
SaddleSolver::SaddleSolver(SaddleSolver&&) noexcept = default;
SaddleSolver& SaddleSolver::operator=(SaddleSolver&&) noexcept = default;

void SaddleSolver::factorize(const CsrMatrix& a, const CsrMatrix& b,
                             const Eigen::MatrixXd& constraints) {
  if (a.rows() != a.cols() || b.cols() != a.rows() ||
      (constraints.size() > 0 && constraints.rows() != b.rows()))
    throw Error(ErrorKind::InvalidArgument, "inconsistent saddle system dimensions");
  Impl& s = *impl_;
  s.nu = static_cast<int>(a.rows());
  s.np = static_cast<int>(b.rows());
  s.nc = static_cast<int>(constraints.cols());
  s.constraints = constraints;
  s.augmented = augmented_matrix(a, b, constraints);

  s.pinned = constraints;
  if (s.nc > 0) {
    // pin the row where column 0 is largest, preferring rows no other
    // constraint touches; tiny meshes may have none
    int pin = -1;
    for (bool any_row : {false, true}) {
      double best = 0.0;
      for (int i = 0; i < s.np; ++i) {
        const bool free_row =
            any_row || s.nc == 1 || constraints.row(i).tail(s.nc - 1).cwiseAbs().maxCoeff() == 0.0;
        if (free_row && std::abs(constraints(i, 0)) > best) best = std::abs(constraints(i, 0)), pin = i;
      }
      if (pin >= 0) break;
    }
    if (pin < 0) throw Error(ErrorKind::InvalidArgument, "first constraint column is empty");
    s.pinned.col(0).setZero();
    s.pinned(pin, 0) = 1.0;
  }

  if (options_.backend == SolverBackend::Iterative) {
    s.velocity_lu.compute(ColMatrix(a));
    // pressure block: bordered B diag(A)^{-1} B^T
    const Eigen::VectorXd inv_diag = a.diagonal().cwiseAbs().cwiseInverse();
    const CsrMatrix schur = b * inv_diag.asDiagonal() * CsrMatrix(b.transpose());
    s.pressure_lu.compute(bordered_matrix(schur, s.pinned));
    return;
  }

  s.lu.compute(augmented_matrix(a, b, s.pinned));
  if (s.nc > 0) {
    // ker B^T from the pinned system: u = 0, B^T p = 0, pinned^T p = e_j
    const int n = s.nu + s.np + s.nc;
    s.kernel.resize(s.np, s.nc);
    for (int j = 0; j < s.nc; ++j) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[s.nu + s.np + j] = 1.0;
      s.kernel.col(j) = s.lu.solve(e).segment(s.nu, s.np);
    }
    s.kernel_c = s.kernel.transpose() * constraints;
    s.constraint_k = constraints.transpose() * s.kernel;
    const double cond = s.constraint_k.jacobiSvd().singularValues().minCoeff();
    if (!(cond > 1e-12 * std::max(1.0, s.constraint_k.norm())))
      throw Error(ErrorKind::SingularSystem, "constraints do not fix the pressure kernel");
  }
}

SaddleSolution SaddleSolver::solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
  const Impl& s = *impl_;
  if (f.size() != s.nu || g.size() != s.np)
    throw Error(ErrorKind::InvalidArgument, "right-hand side does not match the factorised system");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s.nu + s.np + s.nc);
  rhs.head(s.nu) = f;
  rhs.segment(s.nu, s.np) = g;
  const double rhs_norm = rhs.norm();

  SaddleSolution out;
  Eigen::VectorXd x;
  if (options_.backend == SolverBackend::Direct) {
    x = s.direct_solve(rhs);
    // a few rounds of iterative refinement
    for (int round = 0; round < 3; ++round) {
      const Eigen::VectorXd r = rhs - s.augmented * x;
      out.report.history.push_back(rhs_norm > 0 ? r.norm() / rhs_norm : r.norm());
      if (r.norm() <= 1e-14 * std::max(rhs_norm, 1e-300)) break;
      x += s.direct_solve(r);
    }
  } else {
    x = s.gmres(rhs, options_, out.report);
  }
  if (!x.allFinite()) throw Error(ErrorKind::SingularSystem, "solution is not finite");
  const double residual = (rhs - s.augmented * x).norm();
  out.report.relative_residual = rhs_norm > 0 ? residual / rhs_norm : residual;
  out.u = x.head(s.nu);
  out.p = x.segment(s.nu, s.np);
  out.multipliers = x.tail(s.nc);
  if (s.nc > 0) out.report.pressure_mean = s.constraints.col(0).dot(out.p);
  return out;
}

SaddleSolution solve(const SaddleSystem& system, const SolverOptions& options) {
  SaddleSolver solver(options);
  solver.factorize(system.a, system.b, system.constraints);
  return solver.solve(system.f, system.g);
}

InfSupResult infsup_constant(const Discretization& disc, int dense_limit,
                             const SolverOptions& options) {
  const int np = disc.num_pressure();
  if (np > dense_limit) return infsup_constant_iterative(disc, options);

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(disc.stiffness);
  if (chol.info() != Eigen::Success)
    throw Error(ErrorKind::SingularSystem, "stiffness matrix is not positive definite");
  const Eigen::MatrixXd bt = Eigen::MatrixXd(disc.divergence.transpose());
  const Eigen::MatrixXd kinv_bt = chol.solve(bt);
  Eigen::MatrixXd schur = Eigen::MatrixXd(disc.divergence) * kinv_bt;
  schur = 0.5 * (schur + schur.transpose()).eval();
  // M_Q is diagonal: similarity transform to a standard symmetric problem
  const Eigen::VectorXd scale = disc.pressure->mass_diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd scaled = scale.asDiagonal() * schur * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scaled, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success)
    throw Error(ErrorKind::ConvergenceFailure, "dense eigen-solve failed");
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  InfSupResult result;
  result.dense = true;
  result.kernel_dimension = static_cast<int>(disc.constraints.cols());
  result.lambda_min_full = lambda[0];
  for (int i = 0; i < std::min<int>(8, np); ++i) result.smallest_eigenvalues.push_back(lambda[i]);
  result.beta = std::sqrt(std::max(0.0, lambda[result.kernel_dimension]));
  return result;
}

InfSupResult infsup_constant_iterative(const Discretization& disc, const SolverOptions& options,
                                       unsigned seed) {
  const int np = disc.num_pressure();
  const int block = std::min(6, np - static_cast<int>(disc.constraints.cols()));
  SaddleSolver solver(options);
  solver.factorize(disc.stiffness, disc.divergence, disc.constraints);
  const Eigen::VectorXd& mq = disc.pressure->mass_diagonal();

  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(np, block);
  for (int j = 0; j < block; ++j)
    for (int i = 0; i < np; ++i) x(i, j) = normal(rng);

  const Eigen::VectorXd zero_f = Eigen::VectorXd::Zero(disc.num_free());
  Eigen::VectorXd ritz = Eigen::VectorXd::Zero(block);
  double previous = -1.0;
  for (int iter = 0; iter < 1000; ++iter) {
    // Z = S^+ M X on the deflated space: solve with f = 0, g = -M x
    Eigen::MatrixXd z(np, block);
    for (int j = 0; j < block; ++j) {
      const SaddleSolution sol = solver.solve(zero_f, -(mq.asDiagonal() * x.col(j)).eval());
      z.col(j) = sol.p;
    }
    // Rayleigh-Ritz: Z^T S Z = Z^T M X because C^T Z = 0
    Eigen::MatrixXd sz = z.transpose() * mq.asDiagonal() * x;
    sz = 0.5 * (sz + sz.transpose()).eval();
    Eigen::MatrixXd mz = z.transpose() * mq.asDiagonal() * z;
    mz = 0.5 * (mz + mz.transpose()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(sz, mz);
    ritz = ge.eigenvalues();
    x = z * ge.eigenvectors();
    // M-normalise the columns
    for (int j = 0; j < block; ++j) x.col(j) /= std::sqrt(x.col(j).dot(mq.asDiagonal() * x.col(j)));
    if (previous > 0 && std::abs(ritz[0] - previous) <= 1e-13 * ritz[0]) break;
    previous = ritz[0];
  }
  InfSupResult result;
  result.dense = false;
  result.kernel_dimension = static_cast<int>(disc.constraints.cols());
  result.lambda_min_full = 0.0;
  for (int i = 0; i < block; ++i) result.smallest_eigenvalues.push_back(ritz[i]);
  result.beta = std::sqrt(std::max(0.0, ritz[0]));
  return result;
}

}  // namespace nscrit
