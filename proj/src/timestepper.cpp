#include "nscrit/timestepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace nscrit {

namespace {

std::vector<double> shifted_power_times(double T, double gamma, int N, int shift) {
  const double base = std::pow(static_cast<double>(shift), gamma);
  const double span = std::pow(static_cast<double>(N + shift), gamma) - base;
  std::vector<double> t(N + 1);
  for (int n = 0; n <= N; ++n) t[n] = T * (std::pow(static_cast<double>(n + shift), gamma) - base) / span;
  t[0] = 0.0;
  t[N] = T;
  return t;
}

double max_step(const std::vector<double>& t) {
  double m = 0.0;
  for (std::size_t n = 1; n < t.size(); ++n) m = std::max(m, t[n] - t[n - 1]);
  return m;
}

double max_neighbour_ratio(const std::vector<double>& t) {
  double m = 1.0;
  for (std::size_t n = 2; n < t.size(); ++n) {
    const double r = (t[n] - t[n - 1]) / (t[n - 1] - t[n - 2]);
    m = std::max({m, r, 1.0 / r});
  }
  return m;
}

}  // namespace

GradedGrid build_graded_grid(double T, double tau, double alpha) {
  if (!(alpha > 0.5 && alpha < 1.0))
    throw Error(ErrorKind::InvalidArgument, "grading exponent alpha must lie in (1/2, 1)");
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidArgument, "final time must be positive");
  if (!(tau > 0.0) || tau > T * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "maximal stepsize must lie in (0, T]");

  GradedGrid grid;
  grid.T = T;
  grid.tau = tau;
  grid.alpha = alpha;
  grid.gamma = 1.0 / (1.0 - alpha);
  const double raw = grid.gamma * T / tau;
  const int base_n = static_cast<int>(std::ceil(raw * (1.0 - 1e-12)));

  for (int shift = 0; shift <= 64; ++shift) {
    int N = std::max(1, base_n - shift);
    std::vector<double> t = shifted_power_times(T, grid.gamma, N, shift);
    while (max_step(t) > tau * (1.0 + 1e-9)) t = shifted_power_times(T, grid.gamma, ++N, shift);
    if (max_neighbour_ratio(t) <= 4.0) {
      grid.shift = shift;
      grid.N = N;
      grid.times = std::move(t);
      break;
    }
  }
  if (grid.N == 0) throw Error(ErrorKind::InvalidArgument, "no graded grid satisfies the step-ratio bound");

  grid.steps.resize(grid.N);
  for (int n = 1; n <= grid.N; ++n) grid.steps[n - 1] = grid.times[n] - grid.times[n - 1];
  return grid;
}

std::vector<std::string> grid_violations(const GradedGrid& g) {
  std::vector<std::string> out;
  auto fail = [&out](const std::string& what) { out.push_back(what); };
  if (g.N < 1 || static_cast<int>(g.times.size()) != g.N + 1 || static_cast<int>(g.steps.size()) != g.N) {
    fail("inconsistent sizes");
    return out;
  }
  if (g.times.front() != 0.0) fail("t_0 != 0");
  if (g.times.back() != g.T) fail("t_N != T");
  for (int n = 1; n <= g.N; ++n)
    if (!(g.times[n] > g.times[n - 1])) fail("times not strictly increasing at n=" + std::to_string(n));
  for (int n = 2; n <= g.N; ++n) {
    const double r = g.step(n) / g.step(n - 1);
    if (r < 0.25 || r > 4.0) fail("neighbour ratio " + std::to_string(r) + " at n=" + std::to_string(n));
    const double grading = g.step(n) / (std::pow(g.times[n - 1] / g.T, g.alpha) * g.tau);
    if (grading < 0.125 || grading > 8.0)
      fail("grading ratio " + std::to_string(grading) + " at n=" + std::to_string(n));
  }
  const double largest = *std::max_element(g.steps.begin(), g.steps.end());
  if (largest > g.tau * (1.0 + 1e-9)) fail("step exceeds tau");
  if (largest < g.tau / 4.0) fail("largest step below tau/4");
  const double bound = std::ceil(2.0 * g.T / ((1.0 - g.alpha) * g.tau));
  if (g.N > bound) fail("too many steps: " + std::to_string(g.N));
  return out;
}

double EnergyLedger::max_relative_residual() const {
  double m = 0.0;
  for (const auto& r : rows) m = std::max(m, r.residual);
  return initial_l2_squared > 0.0 ? m / initial_l2_squared : m;
}

bool EnergyLedger::monotone() const {
  double prev = initial_l2_squared;
  for (const auto& r : rows) {
    if (r.l2_squared > prev * (1.0 + 1e-12) + 1e-300) return false;
    prev = r.l2_squared;
  }
  return true;
}

void write_ledger_csv(std::ostream& out, const EnergyLedger& ledger) {
  std::ostringstream s;
  s.precision(17);
  s << "step,t,tau,l2_norm,l2_sq,h1_sq,increment_sq,residual,weighted_rate,weighted_gradient,"
       "dissipation,divergence\n";
  s << "0,0,0," << std::sqrt(ledger.initial_l2_squared) << ',' << ledger.initial_l2_squared
    << ",,,,,,0,\n";
  for (const auto& r : ledger.rows)
    s << r.step << ',' << r.t << ',' << r.tau << ',' << std::sqrt(r.l2_squared) << ',' << r.l2_squared
      << ',' << r.h1_squared << ',' << r.increment_squared << ',' << r.residual << ','
      << r.weighted_rate << ',' << r.weighted_gradient << ',' << r.dissipation << ',' << r.divergence
      << '\n';
  out << s.str();
}

StepResult euler_step(const Eigen::VectorXd& u_prev, double tau, double mu,
                      const Discretization& disc, SaddleSolver& solver,
                      const StepOptions& step_options) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "stepsize must be positive");
  if (u_prev.size() != disc.num_free())
    throw Error(ErrorKind::InvalidArgument, "previous velocity has the wrong size");
  const double grad_prev = std::sqrt(std::max(disc.h1_squared(u_prev), 0.0));
  if (disc.divergence_norm(u_prev) > 1e-9 * grad_prev)
    throw Error(ErrorKind::InvalidState, "previous velocity is not divergence-free");

  CsrMatrix a = disc.mass / tau + mu * disc.stiffness;
  if (!step_options.zero_convection) a += disc.convection(from_free(disc.velocity, u_prev));
  const Eigen::VectorXd f = disc.mass * u_prev / tau;

  solver.factorize(a, disc.divergence, disc.constraints);
  SaddleSolution sol = solver.solve(f, Eigen::VectorXd::Zero(disc.num_pressure()));

  StepResult out;
  out.u = std::move(sol.u);
  out.p = -sol.p;
  out.report = std::move(sol.report);
  const Eigen::VectorXd delta = out.u - u_prev;
  out.energy_residual = (disc.l2_squared(out.u) - disc.l2_squared(u_prev)) / (2.0 * tau) +
                        disc.l2_squared(delta) / (2.0 * tau) + mu * disc.h1_squared(out.u);
  return out;
}

namespace {

constexpr char kMagic[8] = {'N', 'S', 'C', 'R', 'I', 'T', 'C', '1'};

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorKind::Io, "truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::int32_t>(out, c.mesh_n);
  put<std::int32_t>(out, c.degree);
  put<std::int32_t>(out, c.step);
  put<double>(out, c.t);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(c.coefficients.size()));
  out.write(reinterpret_cast<const char*>(c.coefficients.data()),
            static_cast<std::streamsize>(sizeof(double) * c.coefficients.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error(ErrorKind::Io, "not a checkpoint file: " + path);
  Checkpoint c;
  c.mesh_n = get<std::int32_t>(in);
  c.degree = get<std::int32_t>(in);
  c.step = get<std::int32_t>(in);
  c.t = get<double>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > (std::uint64_t{1} << 34)) throw Error(ErrorKind::Io, "implausible checkpoint size");
  c.coefficients.resize(static_cast<Eigen::Index>(count));
  in.read(reinterpret_cast<char*>(c.coefficients.data()), static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw Error(ErrorKind::Io, "truncated checkpoint");
  return c;
}

RunResult run(const FEFunction& initial, const GradedGrid& grid, double mu,
              const Discretization& disc, const RunOptions& options) {
  if (initial.space != disc.velocity)
    throw Error(ErrorKind::InvalidArgument, "initial velocity does not belong to the velocity space");
  if (grid.N < 1) throw Error(ErrorKind::InvalidArgument, "empty time grid");

  RunResult result;
  result.initial = initial;
  EnergyLedger& ledger = result.ledger;
  ledger.mu = mu;
  Eigen::VectorXd u = to_free(initial);
  ledger.initial_l2_squared = disc.l2_squared(u);

  SaddleSolver solver(options.solver);
  double dissipation = 0.0;
  for (int n = 1; n <= grid.N; ++n) {
    const double tau = grid.step(n);
    StepResult s;
    try {
      s = euler_step(u, tau, mu, disc, solver);
    } catch (const Error& e) {
      throw RunAborted(Error(e.kind(), "run aborted at step " + std::to_string(n) + " (" + e.what() + ")"), ledger);
    }
    LedgerRow row;
    row.step = n;
    row.t = grid.times[n];
    row.tau = tau;
    row.l2_squared = disc.l2_squared(s.u);
    row.h1_squared = disc.h1_squared(s.u);
    row.increment_squared = disc.l2_squared(s.u - u);
    row.residual = tau * std::abs(s.energy_residual);
    row.weighted_rate = row.t * std::sqrt(row.increment_squared) / tau;
    row.weighted_gradient = std::sqrt(row.t * row.h1_squared);
    dissipation += tau * row.h1_squared;
    row.dissipation = dissipation;
    row.divergence = disc.divergence_norm(s.u);
    ledger.rows.push_back(row);
    u = std::move(s.u);

    const bool wanted = std::find(options.checkpoints.begin(), options.checkpoints.end(), n) !=
                        options.checkpoints.end();
    if (wanted || options.observer) {
      FEFunction current = from_free(disc.velocity, u);
      if (wanted)
        result.checkpoints.push_back({disc.velocity->mesh()->structured_n(), disc.velocity->degree(), n,
                                      grid.times[n], current.coefficients});
      if (options.observer) options.observer(n, grid.times[n], current);
    }
  }
  result.final = from_free(disc.velocity, u);
  return result;
}

}  // namespace nscrit
