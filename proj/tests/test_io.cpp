#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "markets.hpp"
#include "stackre/io/commands.hpp"
#include "stackre/io/config.hpp"

using namespace stackre;
using namespace stackre::io;
using markets::ContractKind;

namespace {

Config parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

const char* kGamma = R"(# gamma baseline
contract = proportional
epsilon = 0.1
insurer.1.gamma = 0.5
insurer.1.lambda = 2
insurer.1.severity = gamma
insurer.1.shape = 1.5
insurer.1.scale = 1
insurer.1.pi = 0.5
insurer.2.gamma = 0.5
insurer.2.lambda = 2.5
insurer.2.severity = gamma
insurer.2.shape = 2
insurer.2.scale = 1.25
insurer.2.pi = 0.5
)";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STACKRE_CLI) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST(Config, ParsesGammaBaseline) {
  const auto c = parse(kGamma);
  ASSERT_EQ(c.market.size(), 2u);
  EXPECT_EQ(c.market.contract, ContractKind::proportional);
  EXPECT_EQ(c.market.ambiguity, 0.1);
  EXPECT_EQ(c.market.insurers[1].severity.shape(), 2.0);
  EXPECT_TRUE(c.warnings.empty());
}

TEST(Config, RoundTripIsExact) {
  auto mk = markets::exponential_pair(ContractKind::capped_excess_of_loss, 0.1);
  mk.insurers[0].loading = 0.1 + 0.2;
  mk.limits = {1.0 / 3.0, 0.7};
  mk.objective = reinsurer::Objective::utility;
  mk.utility_risk_aversion = 0.3;
  montecarlo::SimConfig sim;
  sim.seed = 18446744073709551557ull;
  sim.insurer_wealth = {0.0, 0.0};
  const auto text = write_config(mk, sim);
  const auto back = parse(text);
  EXPECT_EQ(write_config(back.market, back.sim), text);
  EXPECT_EQ(back.market.limits[0], 1.0 / 3.0);
  EXPECT_EQ(back.market.insurers[0].loading, 0.1 + 0.2);
  EXPECT_EQ(back.sim.seed, 18446744073709551557ull);
}

TEST(Config, TabulatedRoundTrip) {
  auto mk = markets::single_xl(0.5, 1.0, 0.0);
  mk.insurers[0].severity = measures::SeverityModel::tabulated({0, 0.5, 1, 2}, {0.6, 0.8, 0.4, 0.1});
  const auto text = write_config(mk);
  EXPECT_EQ(write_config(parse(text).market), text);
}

TEST(Config, MissingEpsilon) {
  std::string text = kGamma;
  text.erase(text.find("epsilon"), std::string("epsilon = 0.1\n").size());
  try {
    parse(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("epsilon"), std::string::npos);
  }
}

TEST(Config, WeightsNormalizedWithWarning) {
  std::string text = kGamma;
  text.replace(text.find("insurer.2.pi = 0.5"), 18, "insurer.2.pi = 1.5");
  const auto c = parse(text);
  EXPECT_NEAR(c.market.insurers[0].weight, 0.25, 1e-15);
  EXPECT_NEAR(c.market.insurers[1].weight, 0.75, 1e-15);
  ASSERT_FALSE(c.warnings.empty());
  EXPECT_NE(c.warnings[0].find("normalized"), std::string::npos);
}

TEST(Config, ParseErrorsCarryLineNumbers) {
  for (const auto& [text, line] : std::vector<std::pair<std::string, std::string>>{
           {std::string(kGamma) + "colour = red\n", "line 16"},
           {std::string(kGamma) + "epsilon = 0.2\n", "line 16"},
           {"contract = proportional\nepsilon = abc\n", "line 2"},
           {"contract = proportional\nepsilon\n", "line 2"}}) {
    try {
      parse(text);
      FAIL() << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(line), std::string::npos) << e.what();
    }
  }
}

TEST(Config, HardValidation) {
  std::string text = kGamma;
  text.replace(text.find("epsilon = 0.1"), 13, "epsilon = -1");
  EXPECT_THROW(parse(text), ValidationError);
  std::string cap = "contract = capped_xl\nepsilon = 0\ninsurer.1.gamma = 0.5\n"
                    "insurer.1.lambda = 2\ninsurer.1.severity = exponential\n"
                    "insurer.1.scale = 1\ninsurer.1.pi = 1\n";
  EXPECT_THROW(parse(cap), ValidationError);  // limit missing
  EXPECT_THROW(parse(cap + "insurer.1.limit = 0\n"), ValidationError);
  EXPECT_NO_THROW(parse(cap + "insurer.1.limit = 1\n"));
}

TEST(Figures, CsvIsDeterministic) {
  const auto mk = markets::gamma_pair(0.5, 0.1);
  const auto a = run_figure(mk, "total-intensity").to_csv();
  const auto b = run_figure(mk, "total-intensity").to_csv();
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), "eps,alpha1,alpha2,eta1,eta2,premium1,premium2,Lambda");
  EXPECT_EQ(a.find('\r'), std::string::npos);
}

TEST(Figures, UnknownId) {
  EXPECT_THROW(run_figure(markets::gamma_pair(0.5), "nope"), ValidationError);
}

TEST(Json, EquilibriumFields) {
  const auto r = reinsurer::solve_equilibrium(markets::gamma_pair(0.5, 0.1));
  const auto j = to_json(r);
  EXPECT_EQ(j["alpha"].size(), 2u);
  EXPECT_EQ(j["eta"][0].get<double>(), r.eta[0]);
  EXPECT_TRUE(j["diagnostics"]["integrable"].get<bool>());
}

TEST(Cli, ExitCodes) {
  const auto dir = std::filesystem::temp_directory_path() / "stackre_cli_test";
  std::filesystem::create_directories(dir);
  const auto good = dir / "good.cfg";
  std::ofstream(good) << kGamma;
  const auto bad = dir / "bad.cfg";
  std::ofstream(bad) << "contract = proportional\n";
  const auto nonint = dir / "nonint.cfg";
  {
    std::string t = kGamma;
    t.replace(t.find("epsilon = 0.1"), 13, "epsilon = 0.9");
    std::ofstream(nonint) << t;
  }
  const std::string out = " --out " + dir.string();
  EXPECT_EQ(run_cli("equilibrium --spec " + good.string() + out), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "equilibrium.json"));
  EXPECT_EQ(run_cli("equilibrium --spec " + bad.string() + out), 2);
  EXPECT_EQ(run_cli("equilibrium --spec " + (dir / "missing.cfg").string() + out), 2);
  EXPECT_EQ(run_cli("equilibrium --spec " + nonint.string() + out), 3);
  EXPECT_EQ(run_cli("figure --id nope --spec " + good.string() + out), 2);
  EXPECT_EQ(run_cli("bogus"), 2);
}
