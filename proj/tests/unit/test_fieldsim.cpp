#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "lts/errors.hpp"
#include "lts/fieldsim.hpp"
#include "lts/oracle.hpp"
#include "test_util.hpp"

using namespace lts;

namespace {

std::vector<int> out_degrees(const SampleNetwork& s) {
  std::vector<int> out(s.size(), 0);
  for (int r : s.recruiter)
    if (r >= 0) ++out[r];
  return out;
}

const GeneratedPopulation& p90_scale() {
  static const GeneratedPopulation pop = [] {
    SyntheticPopSpec spec;
    spec.node_count = 5492;
    spec.attributes = {{"flag", 0.3, 0.5}};
    return gen_population(spec, 90);
  }();
  return pop;
}

bool same_sample(const SampleNetwork& a, const SampleNetwork& b) {
  return a.labels == b.labels && a.population_index == b.population_index && a.recruiter == b.recruiter &&
         a.recruit_day == b.recruit_day && a.degree == b.degree && a.plus_edges == b.plus_edges && a.y == b.y;
}

}  // namespace

TEST_CASE("single coupon produces chains") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto g = testing::random_graph(120, 0.05, seed);
    DesignConfig cfg;
    cfg.target_n = 40;
    cfg.seed_fraction = 0.1;
    cfg.coupon_max = 1;
    const auto s = run_survey(g, AttributeTable(g.node_count(), {}), cfg, seed);
    check_sample(s, 1, &g);
    for (int d : out_degrees(s)) CHECK(d <= 1);
    CHECK(s.size() == 40);
  }
}

TEST_CASE("census design samples every node as a seed") {
  const auto g = testing::graph_from(6, testing::to_edges(testing::cycle_edges(6)));
  DesignConfig cfg;
  cfg.target_n = 6;
  cfg.seed_fraction = 1.0;
  const auto s = run_survey(g, AttributeTable(6, {}), cfg, 3);
  CHECK(s.size() == 6);
  CHECK(s.seed_count() == 6);
  std::set<NodeId> members(s.population_index.begin(), s.population_index.end());
  CHECK(members.size() == 6);
}

TEST_CASE("RDS design on a population of survey scale") {
  const auto& pop = p90_scale();
  DesignConfig cfg;  // n = 1200, 240 seeds, 3 coupons
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto s = run_survey(pop.graph, pop.attrs, cfg, seed);
    check_sample(s, 3, &pop.graph);
    CHECK(s.size() == 1200);
    CHECK(s.seed_count() >= 240);
    const auto out = out_degrees(s);
    CHECK(*std::max_element(out.begin(), out.end()) <= 3);
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(s.degree[i] == static_cast<double>(pop.graph.degree(s.population_index[i])));
      CHECK(s.y[0][i] == pop.attrs.column("flag")[s.population_index[i]]);
      if (!s.is_seed(static_cast<int>(i))) {
        // Recruits arrive after their recruiter and within the coupon lifetime.
        const int r = s.recruiter[i];
        CHECK(s.recruit_day[i] > s.recruit_day[r]);
        CHECK(s.recruit_day[i] - s.recruit_day[r] <= cfg.coupon_expiry_days);
      }
    }
  }
}

TEST_CASE("survey is deterministic in its seed") {
  const auto& pop = p90_scale();
  DesignConfig cfg;
  cfg.target_n = 300;
  cfg.seed_fraction = 0.1;
  cfg.coupon_max = 15;
  const auto a = run_survey(pop.graph, pop.attrs, cfg, 77);
  const auto b = run_survey(pop.graph, pop.attrs, cfg, 77);
  const auto c = run_survey(pop.graph, pop.attrs, cfg, 78);
  CHECK(same_sample(a, b));
  CHECK_FALSE(same_sample(a, c));
}

TEST_CASE("configuration errors") {
  const auto g = testing::graph_from(3, {{0, 1}, {1, 2}});
  DesignConfig cfg;
  cfg.target_n = 4;
  CHECK_THROWS_AS(run_survey(g, AttributeTable(3, {}), cfg, 1), ConfigError);
  cfg.target_n = 2;
  cfg.coupon_max = 0;
  CHECK_THROWS_AS(run_survey(g, AttributeTable(3, {}), cfg, 1), ConfigError);
  cfg.coupon_max = 1;
  cfg.seed_fraction = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("explicit initial seeds are used") {
  const auto g = testing::graph_from(10, testing::to_edges(testing::path_edges(10)));
  DesignConfig cfg;
  cfg.target_n = 4;
  cfg.seed_fraction = 0.25;
  const std::vector<NodeId> seeds{9};
  const auto s = run_survey(g, AttributeTable(10, {}), cfg, 5, seeds);
  CHECK(s.population_index[0] == 9);
  CHECK(s.is_seed(0));
}

TEST_CASE("augment_plus") {
  SUBCASE("triangle recruited along 1-2-3 reveals the link 1-3") {
    const auto g = testing::graph_from(3, {{0, 1}, {1, 2}, {0, 2}});
    auto s = testing::sample_from_forest({-1, 0, 1});
    s.population_index = {0, 1, 2};
    const auto plus = augment_plus(s, g);
    REQUIRE(plus.plus_edges.size() == 1);
    CHECK(plus.plus_edges[0] == std::pair<int, int>{0, 2});
    CHECK(augment_plus(plus, g).plus_edges == plus.plus_edges);
  }
  SUBCASE("path recruited in order reveals nothing") {
    const auto g = testing::graph_from(4, testing::to_edges(testing::path_edges(4)));
    auto s = testing::sample_from_forest({-1, 0, 1, 2});
    s.population_index = {0, 1, 2, 3};
    CHECK(augment_plus(s, g).plus_edges.empty());
  }
  SUBCASE("census sample recovers the full edge set") {
    const auto g = testing::random_graph(25, 0.2, 9);
    DesignConfig cfg;
    cfg.target_n = 25;
    cfg.seed_fraction = 0.2;
    cfg.coupon_max = 15;
    const auto s = augment_plus(run_survey(g, AttributeTable(25, {}), cfg, 4), g);
    const auto traced = s.traceable_edges();
    CHECK(traced.size() == g.edge_count());
    for (auto [a, b] : traced) CHECK(g.has_edge(s.population_index[a], s.population_index[b]));
  }
  SUBCASE("plus sample edges are exactly the induced subgraph") {
    const auto& pop = p90_scale();
    DesignConfig cfg;
    cfg.target_n = 400;
    cfg.seed_fraction = 0.1;
    const auto s = augment_plus(run_survey(pop.graph, pop.attrs, cfg, 12), pop.graph);
    check_sample(s, 3, &pop.graph);
    std::size_t induced = 0;
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = i + 1; j < s.size(); ++j)
        induced += pop.graph.has_edge(s.population_index[i], s.population_index[j]);
    CHECK(s.traceable_edges().size() == induced);
  }
}

TEST_CASE("sample files round trip") {
  const auto& pop = p90_scale();
  DesignConfig cfg;
  cfg.target_n = 150;
  cfg.seed_fraction = 0.1;
  const auto s = augment_plus(run_survey(pop.graph, pop.attrs, cfg, 31), pop.graph);
  const auto dir = testing::temp_dir("sample_rt");
  write_sample(s, dir);
  const auto back = read_sample(dir);
  CHECK(back.labels == s.labels);
  CHECK(back.recruiter == s.recruiter);
  CHECK(back.recruit_day == s.recruit_day);
  CHECK(back.degree == s.degree);
  CHECK(back.traceable_edges() == s.traceable_edges());
  CHECK(back.y_names == s.y_names);
  CHECK(back.y == s.y);
}

TEST_CASE("check_sample rejects broken structures") {
  auto cyc = testing::sample_from_forest({1, 0});
  CHECK_THROWS_AS(check_sample(cyc, 3), InvariantViolation);
  auto wide = testing::sample_from_forest({-1, 0, 0});
  CHECK_THROWS_AS(check_sample(wide, 1), InvariantViolation);
  CHECK_NOTHROW(check_sample(wide, 2));
}
