#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/log.hpp"
#include "stackre/montecarlo.hpp"
#include "stackre/reinsurer/market.hpp"

// Flat key-value market files:
//
//   contract  = proportional | xl | capped_xl
//   epsilon   = 0.1
//   objective = wealth | utility
//   m         = 0.5                      (utility only)
//   horizon   = 1
//   insurer.1.gamma    = 0.5
//   insurer.1.lambda   = 2
//   insurer.1.severity = exponential | gamma | tabulated
//   insurer.1.shape    = 1.5             (gamma)
//   insurer.1.scale    = 1               (exponential, gamma)
//   insurer.1.table    = 0:0.4 1:0.3 ... (tabulated, z:density pairs)
//   insurer.1.theta    = 0.2
//   insurer.1.pi       = 0.5
//   insurer.1.limit    = 1               (capped_xl)
//   insurer.1.x0       = 0               (simulation)
//   sim.replications, sim.seed, sim.threads, sim.antithetic, sim.y0
//   quadrature.abs_tol, quadrature.rel_tol, solver.tolerance, solver.max_iterations,
//   solver.damping, solver.fd_step
//
// '#' starts a comment. Insurers are numbered from 1 without gaps.
namespace stackre::io {

using reinsurer::MarketSpec;

struct Config {
  MarketSpec market;
  montecarlo::SimConfig sim;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  std::string value;
  int line;
};

class Table {
 public:
  void put(const std::string& key, std::string value, int line) {
    if (entries_.count(key)) {
      throw ParseError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
    entries_[key] = {std::move(value), line};
  }

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ValidationError("missing required field '" + key + "'");
    used_[key] = true;
    return it->second;
  }

  std::string text(const std::string& key) const { return entry(key).value; }
  std::string text(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
  }

  double number(const std::string& key) const {
    const auto& e = entry(key);
    return parse_number(e.value, key, e.line);
  }
  double number(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
  }

  static double parse_number(const std::string& s, const std::string& key, int line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
      throw ParseError("line " + std::to_string(line) + ": field '" + key +
                       "' is not a number: '" + s + "'");
    }
    return v;
  }

  void reject_unused() const {
    for (const auto& [key, e] : entries_) {
      if (!used_.count(key)) {
        throw ParseError("line " + std::to_string(e.line) + ": unknown field '" + key + "'");
      }
    }
  }

 private:
  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, bool> used_;
};

inline Table tokenize(std::istream& in) {
  Table table;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ParseError("line " + std::to_string(line) + ": empty key or value");
    }
    table.put(key, value, line);
  }
  return table;
}

inline measures::SeverityModel parse_severity(const Table& t, const std::string& prefix) {
  const std::string kind = t.text(prefix + "severity");
  if (kind == "exponential") return measures::SeverityModel::exponential(t.number(prefix + "scale"));
  if (kind == "gamma") {
    return measures::SeverityModel::gamma(t.number(prefix + "shape"), t.number(prefix + "scale"));
  }
  if (kind == "tabulated") {
    const auto& e = t.entry(prefix + "table");
    std::istringstream ss(e.value);
    std::string pair;
    std::vector<double> z, f;
    while (ss >> pair) {
      const auto colon = pair.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(e.line) + ": table entries are z:density");
      }
      z.push_back(Table::parse_number(pair.substr(0, colon), prefix + "table", e.line));
      f.push_back(Table::parse_number(pair.substr(colon + 1), prefix + "table", e.line));
    }
    return measures::SeverityModel::tabulated(std::move(z), std::move(f));
  }
  throw ParseError("line " + std::to_string(t.entry(prefix + "severity").line) +
                   ": unknown severity '" + kind + "'");
}

}  // namespace detail

inline contracts::ContractKind parse_contract_kind(const std::string& s) {
  if (s == "proportional") return contracts::ContractKind::proportional;
  if (s == "xl") return contracts::ContractKind::excess_of_loss;
  if (s == "capped_xl") return contracts::ContractKind::capped_excess_of_loss;
  throw ParseError("unknown contract '" + s + "' (proportional, xl, capped_xl)");
}

inline Config parse_config(std::istream& in) {
  const auto t = detail::tokenize(in);
  Config cfg;
  auto& mk = cfg.market;

  mk.contract = parse_contract_kind(t.text("contract"));
  mk.ambiguity = t.number("epsilon");
  const std::string objective = t.text("objective", "wealth");
  if (objective == "wealth") {
    mk.objective = reinsurer::Objective::wealth;
  } else if (objective == "utility") {
    mk.objective = reinsurer::Objective::utility;
    mk.utility_risk_aversion = t.number("m");
  } else {
    throw ParseError("line " + std::to_string(t.entry("objective").line) +
                     ": objective is wealth or utility");
  }
  mk.horizon = t.number("horizon", 1.0);

  for (int k = 1; t.has("insurer." + std::to_string(k) + ".gamma") ||
                  t.has("insurer." + std::to_string(k) + ".lambda");
       ++k) {
    const std::string p = "insurer." + std::to_string(k) + ".";
    measures::InsurerSpec ins;
    ins.risk_aversion = t.number(p + "gamma");
    ins.claim_intensity = t.number(p + "lambda");
    ins.severity = detail::parse_severity(t, p);
    ins.loading = t.number(p + "theta", 0.0);
    ins.weight = t.number(p + "pi");
    mk.insurers.push_back(ins);
    if (mk.contract == contracts::ContractKind::capped_excess_of_loss) {
      mk.limits.push_back(t.number(p + "limit"));
    }
    cfg.sim.insurer_wealth.push_back(t.number(p + "x0", 0.0));
  }
  if (mk.insurers.empty()) throw ValidationError("n >= 1 insurers (insurer.1.* missing)");

  auto& q = mk.quadrature;
  q.abs_tol = t.number("quadrature.abs_tol", q.abs_tol);
  q.rel_tol = t.number("quadrature.rel_tol", q.rel_tol);
  auto& s = mk.solver;
  s.tolerance = t.number("solver.tolerance", s.tolerance);
  s.max_iterations = static_cast<int>(t.number("solver.max_iterations", s.max_iterations));
  s.damping = t.number("solver.damping", s.damping);
  s.fd_step = t.number("solver.fd_step", s.fd_step);

  auto& sim = cfg.sim;
  sim.horizon = mk.horizon;
  sim.replications = static_cast<std::int64_t>(t.number("sim.replications", 10000));
  if (t.has("sim.seed")) {
    const auto& e = t.entry("sim.seed");
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), seed);
    if (ec != std::errc() || ptr != e.value.data() + e.value.size()) {
      throw ParseError("line " + std::to_string(e.line) + ": sim.seed is not an unsigned integer");
    }
    sim.seed = seed;
  }
  sim.threads = static_cast<unsigned>(t.number("sim.threads", 1));
  sim.antithetic = t.number("sim.antithetic", 0.0) != 0.0;
  sim.reinsurer_wealth = t.number("sim.y0", 0.0);
  t.reject_unused();

  double pi_sum = 0.0;
  for (const auto& ins : mk.insurers) {
    if (!(ins.weight >= 0.0)) throw ValidationError("pi_k >= 0");
    pi_sum += ins.weight;
  }
  if (!(pi_sum > 0.0)) throw ValidationError("sum of pi_k > 0");
  if (std::abs(pi_sum - 1.0) > 1e-12) {
    for (auto& ins : mk.insurers) ins.weight /= pi_sum;
    cfg.warnings.push_back("weights summed to " + detail::format_double(pi_sum) +
                           "; normalized to 1");
  }
  auto more = mk.validate();
  cfg.warnings.insert(cfg.warnings.end(), more.begin(), more.end());
  for (const auto& w : cfg.warnings) log_warning(w);
  return cfg;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return parse_config(in);
}

inline MarketSpec parse_market_spec(const std::string& path) {
  return parse_config_file(path).market;
}

/// Inverse of parse_config: every field at full precision.
inline std::string write_config(const MarketSpec& mk, const montecarlo::SimConfig& sim = {}) {
  using detail::format_double;
  std::ostringstream out;
  out << "contract = " << contracts::to_string(mk.contract) << '\n';
  out << "epsilon = " << format_double(mk.ambiguity) << '\n';
  if (mk.objective == reinsurer::Objective::utility) {
    out << "objective = utility\n";
    out << "m = " << format_double(mk.utility_risk_aversion) << '\n';
  } else {
    out << "objective = wealth\n";
  }
  out << "horizon = " << format_double(mk.horizon) << '\n';
  for (std::size_t k = 0; k < mk.size(); ++k) {
    const auto& ins = mk.insurers[k];
    const std::string p = "insurer." + std::to_string(k + 1) + ".";
    out << p << "gamma = " << format_double(ins.risk_aversion) << '\n';
    out << p << "lambda = " << format_double(ins.claim_intensity) << '\n';
    const auto& sev = ins.severity;
    if (sev.is_exponential()) {
      out << p << "severity = exponential\n" << p << "scale = " << format_double(sev.scale())
          << '\n';
    } else if (sev.is_gamma()) {
      out << p << "severity = gamma\n"
          << p << "shape = " << format_double(sev.shape()) << '\n'
          << p << "scale = " << format_double(sev.scale()) << '\n';
    } else {
      const auto& tab = std::get<measures::Tabulated>(sev.params());
      out << p << "severity = tabulated\n" << p << "table =";
      for (std::size_t i = 0; i < tab.z.size(); ++i) {
        out << ' ' << format_double(tab.z[i]) << ':' << format_double(tab.density[i]);
      }
      out << '\n';
    }
    out << p << "theta = " << format_double(ins.loading) << '\n';
    out << p << "pi = " << format_double(ins.weight) << '\n';
    if (mk.contract == contracts::ContractKind::capped_excess_of_loss) {
      out << p << "limit = " << format_double(mk.limits.at(k)) << '\n';
    }
    if (k < sim.insurer_wealth.size()) {
      out << p << "x0 = " << format_double(sim.insurer_wealth[k]) << '\n';
    }
  }
  out << "quadrature.abs_tol = " << format_double(mk.quadrature.abs_tol) << '\n';
  out << "quadrature.rel_tol = " << format_double(mk.quadrature.rel_tol) << '\n';
  out << "solver.tolerance = " << format_double(mk.solver.tolerance) << '\n';
  out << "solver.max_iterations = " << mk.solver.max_iterations << '\n';
  out << "solver.damping = " << format_double(mk.solver.damping) << '\n';
  out << "solver.fd_step = " << format_double(mk.solver.fd_step) << '\n';
  out << "sim.replications = " << sim.replications << '\n';
  out << "sim.seed = " << sim.seed << '\n';
  out << "sim.threads = " << sim.threads << '\n';
  out << "sim.antithetic = " << (sim.antithetic ? 1 : 0) << '\n';
  out << "sim.y0 = " << format_double(sim.reinsurer_wealth) << '\n';
  return out.str();
}

}  // namespace stackre::io
