#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rdsid/experiments.hpp"
#include "rdsid/io.hpp"

namespace rdsid {
namespace {

Scenario small_scenario() {
  Scenario s;
  s.name = "small";
  s.seed = 2024;
  s.population.size = 2000;
  s.population.degrees = DegreeDistribution::power_law(2.0, 20);
  s.population.outcome = OutcomeModel(LogisticInDegree{-2.0, 0.2});
  s.design = BernoulliDegree{FSpec::power(1.0), 1.0};
  s.estimators = {EstimatorSpec::naive(), EstimatorSpec::vh(),
                  EstimatorSpec::generalized(FSpec::power(0.5))};
  s.sample_sizes = {50, 200};
  s.replicates = 40;
  return s;
}

TEST(RunReplicate, CensusReturnsTruthForCorrectlySpecifiedEstimators) {
  auto s = small_scenario();
  s.design = BernoulliDegree{FSpec::constant(), 1.0};
  s.estimators = {EstimatorSpec::naive(), EstimatorSpec::generalized(FSpec::constant())};
  s.sample_sizes = {s.population.size};
  const auto r = run_replicate(s, s.population.size, 0);
  EXPECT_EQ(r.n_realized, s.population.size);
  for (const auto& e : r.estimates) EXPECT_NEAR(*e, r.truth, 1e-12);
}

TEST(RunReplicate, CensusOfEqualDegreesMakesEveryEstimatorExact) {
  auto s = small_scenario();
  s.population.degrees = DegreeDistribution::uniform(1);
  s.design = BernoulliDegree{FSpec::constant(), 1.0};
  s.sample_sizes = {s.population.size};
  const auto r = run_replicate(s, s.population.size, 3);
  for (const auto& e : r.estimates) EXPECT_NEAR(*e, r.truth, 1e-12);
}

TEST(RunReplicate, DeterministicAndBounded) {
  const auto s = small_scenario();
  for (std::size_t rep = 0; rep < 10; ++rep) {
    const auto a = run_replicate(s, 200, rep);
    const auto b = run_replicate(s, 200, rep);
    EXPECT_EQ(a.estimates, b.estimates);
    EXPECT_EQ(a.truth, b.truth);
    for (const auto& e : a.estimates) {
      ASSERT_TRUE(e.has_value());
      EXPECT_GE(*e, 0.0);
      EXPECT_LE(*e, 1.0);
    }
  }
}

TEST(RunStudy, ThreadCountDoesNotChangeTheReport) {
  const auto s = small_scenario();
  const auto serial = run_study(s, 1);
  EXPECT_EQ(serial, run_study(s, 1));
  EXPECT_EQ(serial, run_study(s, 4));
  std::ostringstream a, b;
  emit_report(serial, ReportFormat::structured, a);
  emit_report(run_study(s, 8), ReportFormat::structured, b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunStudy, ReportInvariants) {
  auto s = small_scenario();
  s.mode = PopulationMode::fixed;
  const auto report = run_study(s, 2);
  ASSERT_EQ(report.cells.size(), s.estimators.size() * s.sample_sizes.size());
  for (const auto& c : report.cells) {
    EXPECT_EQ(c.replicates_used, s.replicates);
    EXPECT_NEAR(c.rmse * c.rmse, c.bias * c.bias + c.sd * c.sd, 1e-14);
    EXPECT_NEAR(c.mc_se, c.sd / std::sqrt(static_cast<double>(s.replicates)), 1e-15);
    ASSERT_TRUE(c.plim.has_value());
  }
  EXPECT_EQ(report.cells[2].estimator, "vh");
  EXPECT_NEAR(*report.cells[2].plim, report.truth, 1e-12);
}

TEST(RunStudy, MonteCarloErrorShrinksWithReplicates) {
  auto s = small_scenario();
  s.estimators = {EstimatorSpec::vh()};
  s.sample_sizes = {100};
  s.replicates = 200;
  const double se_small = run_study(s).cells[0].mc_se;
  s.replicates = 800;
  const double se_large = run_study(s).cells[0].mc_se;
  const double ratio = se_small / se_large;
  EXPECT_GE(ratio, 1.6);
  EXPECT_LE(ratio, 2.4);
}

TEST(RunStudy, EmpiricalMeansTrackPlimAcrossGridCells) {
  auto base = small_scenario();
  base.mode = PopulationMode::fixed;
  base.population.size = 10000;
  base.design = NonIgnorableTilt{FSpec::power(1.0), 1.0, 0.0};
  base.sample_sizes = {200};
  base.replicates = 150;
  const std::vector<GridAxis> axes{
      {"design.gamma", {-1.0, 0.0, 0.5, 1.0, 2.0}},
      {"design.f", {"power:1", "constant", "power:0.5"}},
  };
  const auto cells = scenario_grid(base, axes);
  ASSERT_EQ(cells.size(), 15u);
  std::size_t checked = 0;
  std::size_t within = 0;
  for (const auto& cell : cells) {
    for (const auto& c : run_study(cell).cells) {
      ASSERT_TRUE(c.plim.has_value());
      ++checked;
      within += std::abs(c.mean_estimate - *c.plim) <= 3 * c.mc_se ? 1 : 0;
    }
  }
  EXPECT_GE(static_cast<double>(within), 0.95 * static_cast<double>(checked))
      << within << " of " << checked;
}

TEST(RunStudy, WalkScenarioReportsNetworkFlags) {
  auto s = small_scenario();
  s.population.size = 300;
  s.network = NetworkOptions{};
  s.design = RandomWalk{.steps = 1, .seeds = 1, .placement = {}, .with_replacement = false};
  s.sample_sizes = {100};
  s.replicates = 5;
  const auto report = run_study(s);
  ASSERT_TRUE(report.network.has_value());
  EXPECT_EQ(report.network->realizations, 5u);
  EXPECT_GE(report.network->min_components, 1u);
  for (const auto& c : report.cells) EXPECT_FALSE(c.plim.has_value());
}

TEST(ScenarioGrid, Expansion) {
  const auto base = small_scenario();
  const auto same = scenario_grid(base, {});
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0], base);

  auto tilt = base;
  tilt.design = NonIgnorableTilt{FSpec::power(1.0), 1.0, 0.0};
  const std::vector<GridAxis> axes{{"design.gamma", {0.0, 1.0}},
                                   {"sample_sizes", {nlohmann::json{10}, nlohmann::json{10, 20},
                                                     nlohmann::json{30, 60, 90}}}};
  const auto cells = scenario_grid(tilt, axes);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(std::get<NonIgnorableTilt>(cells[0].design).gamma, 0.0);
  EXPECT_EQ(std::get<NonIgnorableTilt>(cells[5].design).gamma, 1.0);
  EXPECT_EQ(cells[4].sample_sizes, (std::vector<std::size_t>{10, 20}));
  EXPECT_NE(cells[0].seed, cells[1].seed);
  EXPECT_EQ(cells, scenario_grid(tilt, axes));
}

TEST(ScenarioGrid, HomophilyCellsDifferOnlyInNetwork) {
  auto base = small_scenario();
  base.population.groups = std::vector<double>{0.5, 0.5};
  base.network = NetworkOptions{};
  const auto cells = scenario_grid(base, {{"network.homophily", {0.0, 0.9}}});
  ASSERT_EQ(cells.size(), 2u);
  auto a = scenario_to_json(cells[0]);
  auto b = scenario_to_json(cells[1]);
  EXPECT_EQ(a["network"]["homophily"], 0.0);
  EXPECT_EQ(b["network"]["homophily"], 0.9);
  for (auto* j : {&a, &b}) {
    j->erase("name");
    j->erase("seed");
    j->erase("network");
  }
  EXPECT_EQ(a, b);
}

TEST(ScenarioGrid, UnknownAxisIsAnError) {
  EXPECT_THROW(scenario_grid(small_scenario(), {{"design.colour", {1}}}), ValidationError);
  EXPECT_THROW(scenario_grid(small_scenario(), {{"design.gamma", {}}}), ValidationError);
}

}  // namespace
}  // namespace rdsid
