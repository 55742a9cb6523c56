#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "stackre/io/commands.hpp"

namespace fs = std::filesystem;
using namespace stackre;

namespace {

constexpr int kValidation = 2;
constexpr int kSolver = 3;

fs::path prepare(const std::string& dir) {
  fs::path out(dir);
  fs::create_directories(out);
  return out;
}

void report(const io::FigureTable& t) { std::cout << t.to_csv(); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stackelberg reinsurance equilibria, oracles and simulation"};
  app.require_subcommand(1);

  std::string spec_path, out_dir = ".";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", spec_path, "market config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* eq = app.add_subcommand("equilibrium", "solve one market, write equilibrium.json");
  add_common(eq);

  std::string param;
  double from = 0.0, to = 1.0;
  int steps = 11;
  auto* sweep = app.add_subcommand("sweep", "equilibria over a parameter grid");
  add_common(sweep);
  sweep->add_option("--param", param, "eps | pi2 | limit | m")
      ->required()
      ->check(CLI::IsMember({"eps", "pi2", "limit", "m"}));
  sweep->add_option("--from", from)->required();
  sweep->add_option("--to", to)->required();
  sweep->add_option("--steps", steps)->required()->check(CLI::PositiveNumber);

  std::int64_t reps = -1;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned threads = 0;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the equilibrium");
  add_common(sim);
  sim->add_option("--reps", reps, "replications (overrides sim.replications)");
  sim->add_option("--seed", seed, "master seed (overrides sim.seed)")
      ->each([&](const std::string&) { seed_given = true; });
  sim->add_option("--threads", threads, "worker threads (overrides sim.threads)");

  std::string figure_id;
  auto* fig = app.add_subcommand("figure", "regenerate the data behind a figure");
  add_common(fig);
  fig->add_option("--id", figure_id)->required()->check(CLI::IsMember(io::figure_ids()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  try {
    auto cfg = io::parse_config_file(spec_path);
    const fs::path out = prepare(out_dir);
    if (*eq) {
      reinsurer::SolveOptions opts;
      opts.residual_landscape = true;
      const auto r = reinsurer::solve_equilibrium(cfg.market, opts);
      std::ofstream(out / "equilibrium.json") << io::to_json(r).dump(2) << '\n';
      io::FigureTable t{"equilibrium", {"insurer", "alpha", "eta", "premium"}, {}};
      for (std::size_t k = 0; k < r.alpha.size(); ++k) {
        t.add({static_cast<double>(k + 1), r.alpha[k], r.eta[k], r.premiums[k]});
      }
      report(t);
    } else if (*sweep) {
      const auto t = io::run_sweep(cfg.market, io::parse_sweep_param(param), from, to, steps);
      t.write_csv(out / ("figure_" + t.id + ".csv"));
      report(t);
    } else if (*sim) {
      if (reps > 0) cfg.sim.replications = reps;
      if (seed_given) cfg.sim.seed = seed;
      if (threads > 0) cfg.sim.threads = threads;
      const auto r = io::run_simulation(cfg.market, cfg.sim);
      r.insurers.write_csv(out / "figure_simulate.csv");
      r.reinsurer.write_csv(out / "figure_simulate-reinsurer.csv");
      report(r.insurers);
      report(r.reinsurer);
    } else if (*fig) {
      const auto t = io::run_figure(cfg.market, figure_id);
      t.write_csv(out / ("figure_" + figure_id + ".csv"));
      report(t);
    }
  } catch (const ValidationError& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << e.what() << '\n';
    return kValidation;
  } catch (const error& e) {
    std::cerr << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kSolver;
  }
  return 0;
}
