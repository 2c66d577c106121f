#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nscrit/config.hpp"
#include "nscrit/projections.hpp"
#include "nscrit/timestepper.hpp"

namespace nscrit {

/// Quadrature-exact L2 norm and H1 seminorm of a velocity (rule exactness 2k).
double l2_norm(const FEFunction& f);
double h1_seminorm(const FEFunction& f);

double l2_error(const FEFunction& f, const VectorField& exact, const QuadratureRule& rule);
double h1_error(const FEFunction& f, const GradientField& exact, const QuadratureRule& rule);

/// (integral of |grad f|_F^4)^(1/4) with a rule of exactness min(4k, 20).
double gradient_l4_norm(const FEFunction& f);

/// max |div f| over the points of `rule` mapped into every cell.
double max_pointwise_divergence(const FEFunction& f, const QuadratureRule& rule);

/**
 * ||a - b||_{L2} for velocities on two meshes of the unit square, integrated
 * exactly over the common refinement of the two triangulations. Throws
 * incompatible-mesh when the meshes do not cover the same domain.
 */
double l2_error_cross(const FEFunction& a, const FEFunction& b);

/// Least-squares slope of log(error) against log(resolution).
double fit_rate(const std::vector<std::pair<double, double>>& pairs);
/// Slope over the last two pairs only.
double last_interval_rate(const std::vector<std::pair<double, double>>& pairs);

/// Structured mesh for k = 4, its Alfeld split for k < 4.
MeshPtr family_mesh(int n, int k);
std::string family_name(int k);

struct Problem {
  MeshPtr mesh;
  Discretization disc;
};

Problem build_problem(int n, int k);

/// u_h^0 = P_{X_h} of the configured example data, integrated with the fixed
/// interior rule of exactness `data_exactness`.
FEFunction initial_velocity(const RunConfig& config, const Discretization& disc);

struct DiagnosticRow {
  int step = 0;
  double t = 0.0;
  double dissipation = 0.0;        // S(m)
  double weighted_gradient = 0.0;  // t^{1/2} ||grad u||
  double weighted_rate = 0.0;      // t ||delta u / tau||
  double weighted_error = -1.0;    // t ||e||, negative when no error series was given
};

struct Diagnostics {
  std::vector<DiagnosticRow> rows;
  /// ||u_h^0||^2 / (2 mu); S(N) never exceeds it.
  double dissipation_bound = 0.0;
  bool dissipation_monotone = true;
  double max_weighted_rate = 0.0;
};

Diagnostics diagnostics(const EnergyLedger& ledger, const GradedGrid& grid,
                        const std::vector<double>& errors = {});

enum class StudyKind { Time, Space };

struct StudyRow {
  std::string label;
  double resolution = 0.0;
  double error = 0.0;
};

struct StudyReport {
  StudyKind kind = StudyKind::Time;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<StudyRow> rows;  // coarsest first
  double rate_ls = 0.0;
  double rate_last = 0.0;
  /// One per row, then the reference run.
  std::vector<EnergyLedger> ledgers;
  std::vector<Diagnostics> diagnostics;
};

/// Fixed mesh `config.h`; stepsizes `config.taus` against `config.tau_ref`.
StudyReport run_time_study(const RunConfig& config);
/// Fixed stepsize `config.tau`; meshes `config.hs` against `config.h_ref`.
StudyReport run_space_study(const RunConfig& config);

void write_report_csv(std::ostream& out, const StudyReport& report);

/// Runs `count` independent tasks on up to `jobs` threads.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

}  // namespace nscrit
