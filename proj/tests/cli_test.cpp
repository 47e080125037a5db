#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "polygame/cli.hpp"

using namespace polygame;
using json = nlohmann::json;

namespace {

std::string data(const std::string& name) { return std::string(POLYGAME_TEST_DATA) + "/" + name; }

struct Result {
  int code;
  std::string out, err;
  json parsed() const { return json::parse(out); }
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class SeedEnv : public testing::Test {
 protected:
  void SetUp() override { unsetenv("POLYGAME_SEED"); }
  void TearDown() override { unsetenv("POLYGAME_SEED"); }
};

}  // namespace

TEST(CliReproduce, EveryTargetPasses) {
  for (std::string t : {"triangle", "k4", "cycle:3", "cycle:4", "cycle:5", "queueing"}) {
    auto r = run({"reproduce", t});
    EXPECT_EQ(r.code, cli::ok) << t << "\n" << r.err;
    auto j = r.parsed();
    EXPECT_TRUE(j.at("check").at("passed").get<bool>()) << t;
    EXPECT_EQ(j.at("schema_version"), io::kSchemaVersion);
  }
}

TEST(CliReproduce, TriangleReportsTwoAggregates) {
  auto j = run({"reproduce", "triangle"}).parsed();
  const auto& check = j.at("check");
  EXPECT_EQ(check.at("distinct_equilibria"), 2);
  EXPECT_TRUE(check.at("all_direct").at("report").at("is_equilibrium").get<bool>());
  EXPECT_TRUE(check.at("all_indirect").at("report").at("is_equilibrium").get<bool>());
  EXPECT_EQ(check.at("probe").at("distinct_aggregate"), 2);
}

TEST(CliReproduce, BadTargetsAreInputErrors) {
  EXPECT_EQ(run({"reproduce", "square"}).code, cli::input_error);
  EXPECT_EQ(run({"reproduce", "cycle:x"}).code, cli::input_error);
  EXPECT_EQ(run({"reproduce", "cycle:2"}).code, cli::input_error);
  EXPECT_EQ(run({"reproduce", "cycle:4z"}).code, cli::input_error);
}

TEST(CliVerify, EquilibriumAndViolation) {
  auto ok = run({"verify", data("triangle_game.json"), data("triangle_direct.json")});
  EXPECT_EQ(ok.code, cli::ok) << ok.err;
  EXPECT_TRUE(ok.parsed().at("is_equilibrium").get<bool>());

  auto bad = run({"verify", data("triangle_game.json"), data("triangle_half.json")});
  EXPECT_EQ(bad.code, cli::negative);
  auto j = bad.parsed();
  EXPECT_FALSE(j.at("is_equilibrium").get<bool>());
  EXPECT_EQ(j.at("worst").at("player"), "2");
  EXPECT_NEAR(j.at("worst_violation").get<double>(), 6.125, 1e-9);
}

TEST(CliVerify, InfeasibleProfileIsInputError) {
  auto profile = json::parse(std::ifstream(data("triangle_direct.json")));
  profile["players"][0]["distribution"]["e"] = 0.5;
  auto path = testing::TempDir() + "polygame_infeasible.json";
  std::ofstream(path) << profile.dump();
  auto r = run({"verify", data("triangle_game.json"), path});
  EXPECT_EQ(r.code, cli::input_error);
  EXPECT_FALSE(r.parsed().at("feasible").get<bool>());
  EXPECT_NE(r.err.find("infeasible"), std::string::npos);
}

TEST_F(SeedEnv, SolveIsDeterministic) {
  auto a = run({"solve", data("queueing_game.json"), "--starts", "3"});
  auto b = run({"solve", data("queueing_game.json"), "--starts", "3"});
  EXPECT_EQ(a.code, cli::ok) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.parsed().at("seed"), cli::kDefaultSeed);
}

TEST_F(SeedEnv, EnvironmentOverridesSeedFlag) {
  setenv("POLYGAME_SEED", "7", 1);
  auto r = run({"solve", data("queueing_game.json"), "--seed", "3"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.parsed().at("seed"), 7);
  setenv("POLYGAME_SEED", "seven", 1);
  EXPECT_EQ(run({"solve", data("queueing_game.json")}).code, cli::input_error);
}

TEST_F(SeedEnv, ProbeFindsUniqueQueueingEquilibrium) {
  auto r = run({"probe", data("queueing_game.json"), "--starts", "6", "--jobs", "2"});
  EXPECT_EQ(r.code, cli::ok) << r.err;
  auto j = r.parsed();
  EXPECT_EQ(j.at("distinct_equilibria"), 1);
  EXPECT_EQ(j.at("equilibria")[0].at("starts").size(), 6u);
}

TEST_F(SeedEnv, ProbeTriangleFromSeededStarts) {
  auto r = run({"probe", data("triangle_game.json"), "--starts", "4"});
  EXPECT_EQ(r.code, cli::ok) << r.err;
  EXPECT_GE(r.parsed().at("distinct_equilibria").get<int>(), 1);
}

TEST_F(SeedEnv, NonConvergenceExitCode) {
  auto r = run({"probe", data("queueing_game.json"), "--starts", "2", "--max-sweeps", "1", "--max-iters", "1",
                "--tol", "1e-300"});
  EXPECT_EQ(r.code, cli::no_convergence);
}

TEST(CliMatroid, CheckReportsOrderability) {
  auto k4 = run({"matroid", "check", data("k4_matroid.json")});
  EXPECT_EQ(k4.code, cli::ok) << k4.err;
  auto j = k4.parsed();
  EXPECT_TRUE(j.at("axioms_hold").get<bool>());
  EXPECT_EQ(j.at("rank"), 3);
  EXPECT_FALSE(j.at("base_order").at("base_orderable").get<bool>());
  EXPECT_EQ(j.at("base_order").at("base_count"), 16);

  auto u = run({"matroid", "check", data("uniform_matroid.json")}).parsed();
  EXPECT_TRUE(u.at("base_order").at("base_orderable").get<bool>());
  EXPECT_EQ(u.at("base_order").at("base_count"), 6);

  EXPECT_EQ(run({"matroid", "check", data("non_matroid.json")}).code, cli::input_error);
}

TEST(CliExchange, K4PairConflicts) {
  auto dot = testing::TempDir() + "polygame_k4.dot";
  auto r = run({"exchange", data("k4_oracle.json"), data("k4_x.json"), data("k4_y.json"), "--dot", dot});
  EXPECT_EQ(r.code, cli::negative) << r.err;
  auto j = r.parsed();
  EXPECT_EQ(j.at("bidirectional").at("verdict"), "conflicting strategies");
  EXPECT_EQ(j.at("bidirectional").at("certificate").at("supply_nodes"), (json{"1", "6"}));
  EXPECT_EQ(j.at("bidirectional").at("certificate").at("demand_nodes"), (json{"4"}));
  EXPECT_LE(j.at("directed_flow").at("exchanges").get<int>(), 9);
  std::stringstream text;
  text << std::ifstream(dot).rdbuf();
  EXPECT_NE(text.str().find("digraph"), std::string::npos);
}

TEST(CliExchange, SingleVectorGivesDirectedGraph) {
  auto r = run({"exchange", data("k4_oracle.json"), data("k4_x.json")});
  EXPECT_EQ(r.code, cli::ok) << r.err;
  auto arcs = r.parsed().at("directed_graph").at("arcs");
  EXPECT_FALSE(arcs.empty());
}

TEST(CliExchange, OutsidePolytopeIsInputError) {
  auto r = run({"exchange", data("k4_oracle.json"), data("k4_outside.json")});
  EXPECT_EQ(r.code, cli::input_error);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(SeedEnv, PropertyBidir) {
  auto k4 = run({"property", "bidir", data("k4_oracle.json"), "--samples", "20"});
  EXPECT_EQ(k4.code, cli::negative) << k4.err;
  EXPECT_FALSE(k4.parsed().at("bidirectional").get<bool>());
  auto u = run({"property", "bidir", data("uniform_oracle.json"), "--samples", "20", "--jobs", "2"});
  EXPECT_EQ(u.code, cli::ok) << u.err;
  EXPECT_TRUE(u.parsed().at("bidirectional").get<bool>());
}

TEST(CliProperty, GraphUniqueness) {
  auto cycle = run({"property", "graph", data("cycle4_graph.json")});
  EXPECT_EQ(cycle.code, cli::negative);
  EXPECT_FALSE(cycle.parsed().at("uniqueness_property").get<bool>());
  auto tree = run({"property", "graph", data("parallel_tree_graph.json")});
  EXPECT_EQ(tree.code, cli::ok);
  EXPECT_TRUE(tree.parsed().at("uniqueness_property").get<bool>());
}

TEST(CliErrors, UsageAndMalformedInput) {
  EXPECT_EQ(run({}).code, cli::input_error);
  EXPECT_EQ(run({"frobnicate"}).code, cli::input_error);
  EXPECT_EQ(run({"verify", data("missing.json"), data("triangle_direct.json")}).code, cli::input_error);
  EXPECT_EQ(run({"solve", data("malformed.json")}).code, cli::input_error);
  EXPECT_EQ(run({"solve", data("triangle_game.json"), "--damping", "1.5"}).code, cli::input_error);
  EXPECT_EQ(run({"verify", data("triangle_direct.json"), data("triangle_direct.json")}).code, cli::input_error);
  EXPECT_EQ(run({"--help"}).code, cli::ok);
}
