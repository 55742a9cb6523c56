#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/io/config.hpp"
#include "stackre/montecarlo.hpp"
#include "stackre/reinsurer/equilibrium.hpp"

namespace stackre::io {

using reinsurer::EquilibriumResult;
using reinsurer::MarketSpec;

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"compensators", "total-intensity",
                                            "loadings-vs-weight", "xl-compensators",
                                            "xl-loadings",   "capped-sweep",
                                            "utility-sweep"};
  return ids;
}

struct FigureTable {
  std::string id;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row) {
    if (row.size() != columns.size()) throw ValidationError("row width differs from header");
    for (double v : row) {
      if (!std::isfinite(v)) throw NonFinite("table '" + id + "' received a non-finite value");
    }
    rows.push_back(std::move(row));
  }

  std::size_t column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j] == name) return j;
    }
    throw ValidationError("table '" + id + "' has no column '" + name + "'");
  }

  /// 12 significant digits, '.' decimal separator, '\n' line ends.
  std::string to_csv() const {
    std::string out;
    for (std::size_t j = 0; j < columns.size(); ++j) out += (j ? "," : "") + columns[j];
    out += '\n';
    char buf[40];
    for (const auto& row : rows) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        std::snprintf(buf, sizeof buf, "%.12g", row[j] == 0.0 ? 0.0 : row[j]);
        if (j) out += ',';
        out += buf;
      }
      out += '\n';
    }
    return out;
  }

  void write_csv(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path.string() + "'");
    f << to_csv();
  }
};

inline nlohmann::json to_json(const EquilibriumResult& r) {
  nlohmann::json j;
  j["alpha"] = r.alpha;
  j["eta"] = r.eta;
  j["premiums"] = r.premiums;
  j["total_intensity"] = r.total_intensity;
  const auto& d = r.diagnostics;
  nlohmann::json diag;
  diag["residual_norm"] = d.residual_norm;
  diag["iterations"] = d.iterations;
  diag["residual_evaluations"] = d.residual_evaluations;
  diag["newton_steps"] = d.newton_steps;
  diag["second_order_ok"] = d.second_order_ok;
  diag["integrable"] = d.integrable;
  diag["warnings"] = d.warnings;
  nlohmann::json land = nlohmann::json::array();
  for (const auto& p : d.landscape) {
    land.push_back({{"insurer", p.insurer + 1},
                    {"eta", p.loading},
                    {"residual_norm",
                     std::isfinite(p.residual_norm) ? nlohmann::json(p.residual_norm)
                                                    : nlohmann::json(nullptr)}});
  }
  diag["residual_landscape"] = land;
  j["diagnostics"] = diag;
  return j;
}

enum class SweepParam { eps, pi2, limit, m };

inline SweepParam parse_sweep_param(const std::string& s) {
  if (s == "eps") return SweepParam::eps;
  if (s == "pi2") return SweepParam::pi2;
  if (s == "limit") return SweepParam::limit;
  if (s == "m") return SweepParam::m;
  throw ValidationError("sweep parameter is one of eps, pi2, limit, m");
}

inline const char* to_string(SweepParam p) {
  switch (p) {
    case SweepParam::eps: return "eps";
    case SweepParam::pi2: return "pi2";
    case SweepParam::limit: return "limit";
    case SweepParam::m: return "m";
  }
  return "?";
}

/// Market with the swept parameter set to v.
inline MarketSpec with_parameter(MarketSpec mk, SweepParam p, double v) {
  switch (p) {
    case SweepParam::eps:
      mk.ambiguity = v;
      break;
    case SweepParam::pi2:
      if (mk.size() != 2) throw ValidationError("pi2 sweeps need exactly two insurers");
      mk.insurers[0].weight = 1.0 - v;
      mk.insurers[1].weight = v;
      break;
    case SweepParam::limit:
      mk.contract = contracts::ContractKind::capped_excess_of_loss;
      mk.limits.assign(mk.size(), v);
      break;
    case SweepParam::m:
      mk.objective = reinsurer::Objective::utility;
      mk.utility_risk_aversion = v;
      break;
  }
  return mk;
}

/// Equilibria along an evenly spaced grid. Each point starts from the previous
/// point's loadings; a utility (m) sweep starts from the wealth equilibrium.
inline FigureTable run_sweep(const MarketSpec& base, SweepParam p, double from, double to,
                             int steps, const std::string& id = "") {
  if (steps < 1) throw ValidationError("steps >= 1");
  const std::size_t n = base.size();
  FigureTable table;
  table.id = id.empty() ? std::string("sweep-") + to_string(p) : id;
  table.columns.push_back(to_string(p));
  for (const char* name : {"alpha", "eta", "premium"}) {
    for (std::size_t k = 0; k < n; ++k) table.columns.push_back(name + std::to_string(k + 1));
  }
  table.columns.push_back("Lambda");

  std::optional<std::vector<double>> warm;
  std::optional<EquilibriumResult> uncapped;
  if (p == SweepParam::limit && base.contract == contracts::ContractKind::excess_of_loss) {
    uncapped = reinsurer::solve_equilibrium(base);
    for (std::size_t k = 0; k < n; ++k) table.columns.push_back("premium_uncapped" + std::to_string(k + 1));
  }
  if (p == SweepParam::m) {
    if (base.contract != contracts::ContractKind::capped_excess_of_loss) {
      throw NonIntegrable("utility sweeps need a capped XL contract");
    }
    MarketSpec wealth = base;
    wealth.objective = reinsurer::Objective::wealth;
    warm = reinsurer::solve_equilibrium(wealth).eta;
  }
  for (int i = 0; i < steps; ++i) {
    const double v = steps == 1 ? from : from + (to - from) * i / (steps - 1);
    const MarketSpec mk = with_parameter(base, p, v);
    reinsurer::SolveOptions opts;
    opts.initial_loadings = warm;
    const auto r = reinsurer::solve_equilibrium(mk, opts);
    warm = r.eta;
    std::vector<double> row{v};
    row.insert(row.end(), r.alpha.begin(), r.alpha.end());
    row.insert(row.end(), r.eta.begin(), r.eta.end());
    row.insert(row.end(), r.premiums.begin(), r.premiums.end());
    row.push_back(r.total_intensity);
    if (uncapped) row.insert(row.end(), uncapped->premiums.begin(), uncapped->premiums.end());
    table.add(std::move(row));
  }
  return table;
}

/// Insurer compensators, both barycentres and the equilibrium compensator on a z-grid.
inline FigureTable compensator_profile(const MarketSpec& mk, const std::string& id,
                                       double z_max = 10.0, int points = 201) {
  const auto r = reinsurer::solve_equilibrium(mk);
  const auto va = measures::barycentre_density(mk.insurers, measures::BarycentreKind::arithmetic);
  const auto vg = measures::barycentre_density(mk.insurers, measures::BarycentreKind::geometric);
  FigureTable table;
  table.id = id;
  table.columns.push_back("z");
  for (std::size_t k = 0; k < mk.size(); ++k) table.columns.push_back("v" + std::to_string(k + 1));
  table.columns.insert(table.columns.end(), {"v_arith", "v_geom", "sigma_star"});
  for (int i = 0; i < points; ++i) {
    const double z = z_max * i / (points - 1);
    std::vector<double> row{z};
    for (const auto& ins : mk.insurers) row.push_back(ins.compensator(z));
    row.push_back(va(z));
    row.push_back(vg(z));
    row.push_back(r.compensator(z));
    // Gamma densities with shape < 1 are unbounded at the origin.
    for (double& x : row) {
      if (!std::isfinite(x)) x = 0.0;
    }
    table.add(std::move(row));
  }
  return table;
}

inline FigureTable run_figure(const MarketSpec& mk, const std::string& id) {
  if (id == "compensators") return compensator_profile(mk, id);
  if (id == "total-intensity") return run_sweep(mk, SweepParam::eps, 0.0, 0.3, 31, id);
  if (id == "loadings-vs-weight") return run_sweep(mk, SweepParam::pi2, 0.0, 1.0, 21, id);
  if (id == "xl-compensators" || id == "xl-loadings") {
    MarketSpec xl = mk;
    xl.contract = contracts::ContractKind::excess_of_loss;
    xl.limits.clear();
    if (id == "xl-compensators") return compensator_profile(xl, id);
    return run_sweep(xl, SweepParam::eps, 0.0, 0.3, 31, id);
  }
  if (id == "capped-sweep") {
    MarketSpec xl = mk;
    xl.contract = contracts::ContractKind::excess_of_loss;
    xl.limits.clear();
    xl.objective = reinsurer::Objective::wealth;
    return run_sweep(xl, SweepParam::limit, 0.25, 6.0, 24, id);
  }
  if (id == "utility-sweep") return run_sweep(mk, SweepParam::m, 0.1, 1.0, 10, id);
  throw ValidationError("unknown figure id '" + id + "'");
}

/// Insurer utilities at alpha* and alpha* +- 0.2 (paired against alpha*), and
/// the reinsurer objective under sigma* and under v^g.
struct SimulationReport {
  FigureTable insurers;
  FigureTable reinsurer;
};

inline SimulationReport run_simulation(const MarketSpec& mk, const montecarlo::SimConfig& sim) {
  const auto eq = reinsurer::solve_equilibrium(mk);
  SimulationReport rep;
  rep.insurers.id = "simulate";
  rep.insurers.columns = {"insurer", "offset", "control", "utility", "utility_se",
                          "gap_vs_optimum", "gap_se"};
  for (std::size_t k = 0; k < mk.size(); ++k) {
    const auto contract = mk.contract_of(k);
    std::vector<double> offsets{0.0, -0.2, 0.2};
    std::vector<double> controls;
    std::vector<double> used;
    for (double o : offsets) {
      double a = eq.alpha[k] + o;
      if (contract.is_proportional() && (a <= 0.0 || a > 1.0)) continue;
      if (a < 0.0) continue;
      controls.push_back(a);
      used.push_back(o);
    }
    montecarlo::SimConfig s = sim;
    s.insurer_wealth = {k < sim.insurer_wealth.size() ? sim.insurer_wealth[k] : 0.0};
    const auto est =
        montecarlo::estimate_insurer_grid(mk.insurers[k], contract, controls, eq.eta[k], s, 0);
    for (std::size_t j = 0; j < controls.size(); ++j) {
      rep.insurers.add({static_cast<double>(k + 1), used[j], controls[j], est.utility[j].mean,
                        est.utility[j].std_error, est.difference[j].mean,
                        est.difference[j].std_error});
    }
  }
  rep.reinsurer.id = "simulate-reinsurer";
  rep.reinsurer.columns = {"measure", "objective", "objective_se"};
  const auto at_star = montecarlo::estimate_reinsurer_objective(mk, eq.eta, eq.compensator, sim);
  rep.reinsurer.add({0.0, at_star.mean, at_star.std_error});
  const auto vg = measures::barycentre_density(mk.insurers, measures::BarycentreKind::geometric);
  const auto at_vg = montecarlo::estimate_reinsurer_objective(mk, eq.eta, vg, sim);
  rep.reinsurer.add({1.0, at_vg.mean, at_vg.std_error});
  return rep;
}

}  // namespace stackre::io
