#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nscrit/saddle_solver.hpp"

namespace nscrit {

/// Exact positive rational, used for stepsize and mesh-size labels.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  bool operator==(const Rational&) const = default;
};

/// Accepts "a/b", integers and finite decimals ("0.025"); result is reduced.
Rational parse_rational(const std::string& text);
std::vector<Rational> parse_rational_list(const std::string& text);

enum class Example { Example1, Example2, Manufactured };

Example parse_example(const std::string& name);
std::string to_string(Example example);

struct RunConfig {
  Example example = Example::Example1;
  double T = 0.1;
  double mu = 0.05;
  double alpha = 0.55;
  int k = 4;
  double eps = 0.01;

  Rational h{1, 64};
  Rational tau{1, 160};
  std::vector<Rational> taus{{1, 40}, {1, 80}, {1, 160}};
  Rational tau_ref{1, 1280};
  std::vector<Rational> hs{{1, 8}, {1, 16}, {1, 32}};
  Rational h_ref{1, 128};

  /// Exactness of the fixed interior rule used for the initial data.
  int data_exactness = 20;

  SolverOptions solver;
  int jobs = 1;
  std::uint64_t seed = 20240607;

  std::string output;      // report or ledger CSV; empty means stdout
  std::string checkpoint;  // checkpoint file of the final state; empty means none

  /// Throws invalid-argument on out-of-range values.
  void validate() const;
};

/// Shortest text that reads back to exactly v ("0.1", not "0.10000000000000001").
std::string format_number(double v);

/// Subdivisions per side for a mesh size label 1/n.
int mesh_subdivisions(const Rational& h);

/// Sets one key; keys use underscores or dashes interchangeably.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Flat `key = value` lines; `#` starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
RunConfig load_config_file(const std::string& path, RunConfig base = {});

/// Every setting in the file format, so the output can be fed back in.
void print_config(std::ostream& out, const RunConfig& config);

}  // namespace nscrit
