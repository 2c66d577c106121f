#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nscrit/config.hpp"
#include "nscrit/study.hpp"

namespace nscrit {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Everything a single run has to satisfy, measured on one configuration.
struct RunAudit {
  EnergyLedger ledger;
  double initial_l2_squared = 0.0;
  /// max_n tau_n |energy residual| / ||u_h^0||^2
  double max_residual_ratio = 0.0;
  bool monotone = true;
  /// 2 mu sum tau_n ||grad u^n||^2
  double dissipation = 0.0;
  /// max over sampled steps of max_x |div u^n(x)| / ||grad u^n||
  double max_divergence_ratio = 0.0;
  std::vector<int> sampled_steps;
  double final_l2 = 0.0;
};

/// Runs config.example from t = 0 to config.T with maximal step `tau`,
/// sampling pointwise divergence on `samples` evenly spread steps.
RunAudit audit_run(const RunConfig& config, const Discretization& disc, double tau, int samples = 5);

/// Random elements of X_h: random nodal values near a random centre, pushed
/// through the L2 projection onto the divergence-free subspace.
std::vector<FEFunction> random_divfree_fields(const Discretization& disc, int count, std::uint64_t seed,
                                              const SolverOptions& options = {});

/// ||grad phi||_{L4} / (||grad phi||^{1/2} ||A_h phi||^{1/2}) for each field.
std::vector<double> w14_ratios(const Discretization& disc, const std::vector<FEFunction>& fields,
                               const SolverOptions& options = {});

struct SuiteCase {
  int k = 2;
  int n = 4;
};

/// Named invariant checks on each case; fails nothing silently.
std::vector<PropertyResult> run_property_suite(const std::vector<SuiteCase>& cases, const RunConfig& config);

}  // namespace nscrit
