#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "attkgcn/sweep.hpp"

using namespace attkgcn;

namespace {

RunConfig toy_config() {
  const std::string dir = std::string(ATTKGCN_TEST_DATA) + "/toy20/";
  RunConfig c = parse_config({}, {{"kg", dir + "kg.tsv"},
                                  {"ratings", dir + "ratings.tsv"},
                                  {"item-map", dir + "item_map.tsv"},
                                  {"dim", "4"},
                                  {"epochs", "2"},
                                  {"batch", "4"}});
  return c;
}

}  // namespace

TEST(Sweep, CsvAndAxisNames) {
  EXPECT_EQ(split_csv("2, 4,8"), (std::vector<std::string>{"2", "4", "8"}));
  EXPECT_EQ(sweep_axis_key("d"), "dim");
  EXPECT_EQ(sweep_axis_key("h"), "depth");
  EXPECT_THROW(sweep_axis_key("lr"), ConfigError);
}

TEST(Sweep, SummaryUsesSampleStandardDeviation) {
  auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(summarize({0.7}).sd, 0.0);
  EXPECT_EQ(summarize({}).n, 0u);
}

TEST(Sweep, RowsFollowValueOrderAndThreadsDoNotChangeResults) {
  RunConfig c = toy_config();
  Dataset ds = load_dataset(c);
  std::vector<std::string> values{"3", "1", "2"};
  auto serial = run_sweep("k", values, c, ds, 2, 1);
  auto parallel = run_sweep("k", values, c, ds, 2, 3);
  ASSERT_EQ(serial.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(serial.rows[i].value, values[i]);
    EXPECT_EQ(serial.rows[i].failures, 0u);
    EXPECT_EQ(serial.rows[i].test_auc.n, 2u);
  }
  std::ostringstream a, b;
  write_sweep_table(a, serial);
  write_sweep_table(b, parallel);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')),
            "k\tseeds\tval_auc_mean\tval_auc_sd\ttest_auc_mean\ttest_auc_sd\ttest_f1_mean\ttest_f1_sd\tfailures");
}

TEST(Sweep, CellMatchesStandaloneRun) {
  RunConfig c = toy_config();
  Dataset ds = load_dataset(c);
  auto t = run_sweep("dim", {"6"}, c, ds, 1);
  HyperParams hp = c.hp;
  hp.dim = 6;
  auto r = train(hp, ds.graph, ds.data);
  EXPECT_EQ(t.runs[0].test_auc, r.report.final.test_auc);
  EXPECT_EQ(t.runs[0].val_auc, r.report.best_val_auc());
}

TEST(Sweep, InvalidValuesRejectedUpFront) {
  RunConfig c = toy_config();
  Dataset ds = load_dataset(c);
  EXPECT_THROW(run_sweep("k", {"4", "0"}, c, ds, 1), ConfigError);
  EXPECT_THROW(run_sweep("aggregator", {"maxpool"}, c, ds, 1), ConfigError);
  EXPECT_THROW(run_sweep("k", {}, c, ds, 1), ConfigError);
  EXPECT_THROW(run_sweep("k", {"4"}, c, ds, 0), ConfigError);
}

TEST(Sweep, MissingPathsAreConfigErrors) {
  EXPECT_THROW(load_dataset(parse_config({})), ConfigError);
}
