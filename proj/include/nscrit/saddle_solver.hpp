#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nscrit/assembly.hpp"

namespace nscrit {

enum class SolverBackend { Direct, Iterative };

SolverBackend parse_backend(const std::string& name);
std::string to_string(SolverBackend backend);

struct SolverOptions {
  SolverBackend backend = SolverBackend::Direct;
  /// Relative residual target of the augmented system.
  double tolerance = 1e-10;
  int max_iterations = 5000;
  int restart = 200;
};

/**
 * The linear system
 *
 *   [ A   B^T  0 ] [u]   [f]
 *   [ B   0    C ] [p] = [g]
 *   [ 0   C^T  0 ] [l]   [0]
 *
 * where the columns of C (mean vector, singular-corner functionals) pin the
 * pressure to the orthogonal complement of ker B^T. An empty C is allowed and
 * leaves the constant pressure mode free, which makes the matrix singular.
 */
struct SaddleSystem {
  CsrMatrix a;
  CsrMatrix b;
  Eigen::VectorXd f;
  Eigen::VectorXd g;
  Eigen::MatrixXd constraints;
};

struct ResidualReport {
  double relative_residual = 0.0;
  double pressure_mean = 0.0;
  int iterations = 0;
  std::vector<double> history;
};

struct SaddleSolution {
  Eigen::VectorXd u;
  Eigen::VectorXd p;
  Eigen::VectorXd multipliers;
  ResidualReport report;
};

/// Factor once, solve for many right-hand sides. Not thread-safe; use one
/// solver per thread.
class SaddleSolver {
 public:
  explicit SaddleSolver(SolverOptions options = {});
  ~SaddleSolver();
  SaddleSolver(SaddleSolver&&) noexcept;
  SaddleSolver& operator=(SaddleSolver&&) noexcept;

  const SolverOptions& options() const { return options_; }

  /// Throws singular-system when the augmented matrix is (numerically) singular.
  void factorize(const CsrMatrix& a, const CsrMatrix& b, const Eigen::MatrixXd& constraints);
  SaddleSolution solve(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;

 private:
  struct Impl;
  SolverOptions options_;
  std::unique_ptr<Impl> impl_;
};

SaddleSolution solve(const SaddleSystem& system, const SolverOptions& options = {});

struct InfSupResult {
  double beta = 0.0;
  /// Smallest eigenvalue with constants included (expected zero).
  double lambda_min_full = 0.0;
  /// Dimension of the pressure kernel that was deflated.
  int kernel_dimension = 0;
  std::vector<double> smallest_eigenvalues;
  bool dense = true;
};

/**
 * Discrete inf-sup constant: sqrt of the smallest nonzero eigenvalue of
 * B K^{-1} B^T q = lambda M_Q q on the complement of ker B^T. Dense
 * eigen-solve up to `dense_limit` pressure DOFs, block inverse iteration
 * through the saddle solver otherwise.
 */
InfSupResult infsup_constant(const Discretization& disc, int dense_limit = 3000,
                             const SolverOptions& options = {});
InfSupResult infsup_constant_iterative(const Discretization& disc, const SolverOptions& options = {},
                                       unsigned seed = 7);

}  // namespace nscrit
