#include "nscrit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nscrit/error.hpp"

namespace nscrit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw Error(ErrorKind::InvalidArgument, "bad " + what + ": '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& key) {
  // a rational label is fine wherever a number is expected
  if (s.find('/') != std::string::npos) return parse_rational(s).value();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v))
    throw Error(ErrorKind::InvalidArgument, "bad number for " + key + ": '" + s + "'");
  return v;
}

std::string canonical_key(std::string key) {
  key = trim(key);
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string join(const std::vector<Rational>& list) {
  std::string out;
  for (std::size_t i = 0; i < list.size(); ++i) out += (i ? "," : "") + list[i].str();
  return out;
}

std::string number(double v) { return format_number(v); }

/// Mesh sizes are 1/n; a bare integer n >= 2 is read as 1/n.
Rational parse_mesh_size(const std::string& text) {
  Rational r = parse_rational(text);
  if (r.den == 1 && r.num >= 2) r = Rational{1, r.num};
  return r;
}

std::vector<Rational> parse_mesh_sizes(const std::string& text) {
  std::vector<Rational> out = parse_rational_list(text);
  for (Rational& r : out)
    if (r.den == 1 && r.num >= 2) r = Rational{1, r.num};
  return out;
}

}  // namespace

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational parse_rational(const std::string& raw) {
  const std::string text = trim(raw);
  Rational r;
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    r.num = parse_int(trim(text.substr(0, slash)), "rational");
    r.den = parse_int(trim(text.substr(slash + 1)), "rational");
  } else {
    const auto dot = text.find('.');
    if (dot == std::string::npos) {
      r.num = parse_int(text, "rational");
    } else {
      const std::string frac = text.substr(dot + 1);
      if (frac.size() > 15) throw Error(ErrorKind::InvalidArgument, "too many decimals: '" + text + "'");
      const std::string whole = text.substr(0, dot);
      r.den = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
      r.num = parse_int((whole.empty() ? "0" : whole) + frac, "rational");
    }
  }
  if (r.den <= 0 || r.num <= 0) throw Error(ErrorKind::InvalidArgument, "rational must be positive: '" + text + "'");
  const std::int64_t g = std::gcd(r.num, r.den);
  r.num /= g;
  r.den /= g;
  return r;
}

std::vector<Rational> parse_rational_list(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) out.push_back(parse_rational(item));
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "empty list");
  return out;
}

Example parse_example(const std::string& name) {
  if (name == "example1") return Example::Example1;
  if (name == "example2") return Example::Example2;
  if (name == "manufactured") return Example::Manufactured;
  throw Error(ErrorKind::InvalidArgument, "unknown example '" + name + "'");
}

std::string to_string(Example example) {
  switch (example) {
    case Example::Example1: return "example1";
    case Example::Example2: return "example2";
    case Example::Manufactured: return "manufactured";
  }
  return "example1";
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

int mesh_subdivisions(const Rational& h) {
  if (h.num != 1) throw Error(ErrorKind::InvalidArgument, "mesh size must be 1/n, got " + h.str());
  return static_cast<int>(h.den);
}

void RunConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::InvalidArgument, what);
  };
  require(T > 0.0, "T must be positive");
  require(mu > 0.0, "mu must be positive");
  require(alpha > 0.5 && alpha <= 0.8, "alpha must lie in (0.5, 0.8]");
  require(k >= 2 && k <= 4, "k must be 2, 3 or 4");
  require(eps > 0.0 && eps < 0.5, "eps must lie in (0, 0.5)");
  require(data_exactness >= 1 && data_exactness <= 20, "data_exactness must lie in [1, 20]");
  require(jobs >= 1, "jobs must be positive");
  require(solver.tolerance > 0.0, "tolerance must be positive");
  require(solver.max_iterations > 0 && solver.restart > 0, "iteration limits must be positive");
  for (const Rational& t : taus) require(t.value() <= T, "study stepsize exceeds T");
  require(tau.value() <= T && tau_ref.value() <= T, "stepsize exceeds T");
  mesh_subdivisions(h);
  mesh_subdivisions(h_ref);
  for (const Rational& x : hs) mesh_subdivisions(x);
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = canonical_key(raw_key);
  const std::string value = trim(raw_value);
  if (key == "example") c.example = parse_example(value);
  else if (key == "T") c.T = parse_double(value, key);
  else if (key == "mu") c.mu = parse_double(value, key);
  else if (key == "alpha") c.alpha = parse_double(value, key);
  else if (key == "k") c.k = static_cast<int>(parse_int(value, key));
  else if (key == "eps") c.eps = parse_double(value, key);
  else if (key == "h") c.h = parse_mesh_size(value);
  else if (key == "n") c.h = Rational{1, parse_int(value, key)};
  else if (key == "tau") c.tau = parse_rational(value);
  else if (key == "taus") c.taus = parse_rational_list(value);
  else if (key == "tau_ref") c.tau_ref = parse_rational(value);
  else if (key == "hs") c.hs = parse_mesh_sizes(value);
  else if (key == "h_ref") c.h_ref = parse_mesh_size(value);
  else if (key == "data_exactness") c.data_exactness = static_cast<int>(parse_int(value, key));
  else if (key == "backend") c.solver.backend = parse_backend(value);
  else if (key == "tolerance") c.solver.tolerance = parse_double(value, key);
  else if (key == "max_iterations") c.solver.max_iterations = static_cast<int>(parse_int(value, key));
  else if (key == "restart") c.solver.restart = static_cast<int>(parse_int(value, key));
  else if (key == "jobs") c.jobs = static_cast<int>(parse_int(value, key));
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key));
  else if (key == "output") c.output = value;
  else if (key == "checkpoint") c.checkpoint = value;
  else throw Error(ErrorKind::Usage, "unknown configuration key '" + raw_key + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::Usage, "line " + std::to_string(lineno) + ": expected key = value");
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out[canonical_key(line.substr(0, eq))] = value;
  }
  return out;
}

RunConfig load_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read configuration file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  for (const auto& [key, value] : parse_config_text(buffer.str())) apply_setting(base, key, value);
  return base;
}

void print_config(std::ostream& out, const RunConfig& c) {
  out << "# domain = (0,1)^2\n"
      << "example = " << to_string(c.example) << '\n'
      << "T = " << number(c.T) << '\n'
      << "mu = " << number(c.mu) << '\n'
      << "alpha = " << number(c.alpha) << '\n'
      << "k = " << c.k << '\n'
      << "eps = " << number(c.eps) << '\n'
      << "h = " << c.h.str() << '\n'
      << "tau = " << c.tau.str() << '\n'
      << "taus = " << join(c.taus) << '\n'
      << "tau_ref = " << c.tau_ref.str() << '\n'
      << "hs = " << join(c.hs) << '\n'
      << "h_ref = " << c.h_ref.str() << '\n'
      << "data_exactness = " << c.data_exactness << '\n'
      << "backend = " << to_string(c.solver.backend) << '\n'
      << "tolerance = " << number(c.solver.tolerance) << '\n'
      << "max_iterations = " << c.solver.max_iterations << '\n'
      << "restart = " << c.solver.restart << '\n'
      << "jobs = " << c.jobs << '\n'
      << "seed = " << c.seed << '\n';
  if (!c.output.empty()) out << "output = \"" << c.output << "\"\n";
  if (!c.checkpoint.empty()) out << "checkpoint = \"" << c.checkpoint << "\"\n";
}

}  // namespace nscrit
