#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lts/errors.hpp"
#include "lts/harness.hpp"
#include "lts/oracle.hpp"
#include "test_util.hpp"

using namespace lts;
using doctest::Approx;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const GeneratedPopulation& micro_population() {
  static const GeneratedPopulation pop = [] {
    SyntheticPopSpec spec;
    spec.node_count = 300;
    spec.attributes = {{"flag", 0.3, 0.4}};
    return gen_population(spec, 17);
  }();
  return pop;
}

StudyConfig micro_config() {
  StudyConfig cfg;
  cfg.designs = {DesignKind::rds, DesignKind::sb_plus};
  cfg.replications = 6;
  cfg.design.target_n = 60;
  cfg.design.seed_fraction = 0.2;
  cfg.resample.iterations = 2000;
  cfg.resample.target_m = 20;
  cfg.variables = {"degree", "flag"};
  cfg.seed = 99;
  return cfg;
}

const char* kMicroFiles[] = {"rds_metrics.csv",         "rds_coverage.csv",         "rds_parabola_points.csv",
                             "sb_plus_metrics.csv",     "sb_plus_coverage.csv",     "sb_plus_parabola_points.csv",
                             "parabola.csv",            "diagnostics.csv"};

}  // namespace

TEST_CASE("census sample: sample mean is exact") {
  const auto g = testing::graph_from(10, testing::to_edges(testing::cycle_edges(10)));
  AttributeTable attrs(10, {});
  attrs.add_column("flag", {1, 0, 0, 1, 1, 0, 0, 0, 1, 0});
  StudyConfig cfg;
  cfg.designs = {DesignKind::rds};
  cfg.replications = 1;
  cfg.design.target_n = 10;
  cfg.design.seed_fraction = 1.0;
  cfg.resample.iterations = 1000;
  cfg.resample.target_m = 5;
  cfg.variables = {"flag"};
  const auto rep = run_study(g, attrs, cfg);
  const auto& row = rep.row(DesignKind::rds, EstimatorId::sample_mean, "flag");
  CHECK(row.actual == Approx(0.4).epsilon(1e-15));
  CHECK(row.e_est == Approx(row.actual).epsilon(1e-15));
  CHECK(row.bias == Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(row.mse == Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("metrics identities on a micro-study") {
  const auto& pop = micro_population();
  const auto cfg = micro_config();
  const auto rep = run_study(pop.graph, pop.attrs, cfg);
  const double R = static_cast<double>(cfg.replications);
  REQUIRE(rep.rows.size() == 2 * 3 * 2);
  for (const auto& row : rep.rows) {
    CHECK(row.mse == Approx(row.bias * row.bias + row.sd * row.sd * (R - 1) / R).epsilon(1e-9));
    if (row.estimator == EstimatorId::adherent) {
      CHECK(row.eff == 1.0);
      CHECK(row.rbias == 1.0);
    } else {
      const auto& base = rep.row(row.design, EstimatorId::adherent, row.variable);
      CHECK(row.eff == Approx(row.mse / base.mse).epsilon(1e-12));
    }
    CHECK(row.coverage >= 0.0);
    CHECK(row.coverage <= 1.0);
    CHECK(row.binary == (row.variable == "flag"));
  }
  std::size_t rds_reps = 0;
  for (const auto& d : rep.diagnostics) {
    CHECK(d.sample_size == 60);
    if (d.design == DesignKind::rds) {
      ++rds_reps;
      CHECK(d.plus_edges == 0);
    }
    CHECK(d.seed == replication_seed(cfg.seed, d.design, d.replication));
  }
  CHECK(rds_reps == cfg.replications);
  for (const auto& e : rep.estimates)
    CHECK(e.result.half_width == Approx(normal_quantile(0.975) * std::sqrt(e.result.variance)).epsilon(1e-12));
}

TEST_CASE("replication seeds do not depend on the other designs") {
  const auto& pop = micro_population();
  auto cfg = micro_config();
  cfg.replications = 3;
  const auto both = run_study(pop.graph, pop.attrs, cfg);
  cfg.designs = {DesignKind::sb_plus};
  const auto one = run_study(pop.graph, pop.attrs, cfg);
  const auto& a = both.row(DesignKind::sb_plus, EstimatorId::adherent, "degree");
  const auto& b = one.row(DesignKind::sb_plus, EstimatorId::adherent, "degree");
  CHECK(a.e_est == b.e_est);
  CHECK(a.mse == b.mse);
}

TEST_CASE("failed replications name their seed") {
  const auto& pop = micro_population();
  auto cfg = micro_config();
  cfg.resample.target_m = 500;  // larger than the field sample
  try {
    run_study(pop.graph, pop.attrs, cfg);
    FAIL("expected ReplicationError");
  } catch (const ReplicationError& e) {
    CHECK(e.design == DesignKind::rds);
    CHECK(e.replication == 0);
    CHECK(e.seed == replication_seed(cfg.seed, DesignKind::rds, 0));
  }
}

TEST_CASE("study configuration errors") {
  const auto& pop = micro_population();
  auto cfg = micro_config();
  cfg.variables.clear();
  CHECK_THROWS_AS(run_study(pop.graph, pop.attrs, cfg), ConfigError);
  cfg = micro_config();
  cfg.variables = {"missing"};
  CHECK_THROWS_AS(run_study(pop.graph, pop.attrs, cfg), ConfigError);
  cfg = micro_config();
  cfg.replications = 0;
  CHECK_THROWS_AS(run_study(pop.graph, pop.attrs, cfg), ConfigError);
  CHECK_THROWS_AS(parse_design("bogus"), ConfigError);
  for (auto d : {DesignKind::rds, DesignKind::rds_plus, DesignKind::sb, DesignKind::sb_plus})
    CHECK(parse_design(to_string(d)) == d);
  CHECK(micro_config().design_for(DesignKind::sb_plus).coupon_max == 15);
  CHECK(micro_config().design_for(DesignKind::sb_plus).plus_links);
  CHECK(micro_config().design_for(DesignKind::rds).coupon_max == 3);
}

TEST_CASE("complements") {
  const std::vector<ParabolaPoint> pts{{0.24, 0.003, true}, {0.5, 0.001, true}};
  const auto out = expand_complements(std::span<const ParabolaPoint>(pts));
  REQUIRE(out.size() == 4);
  CHECK(out[2].p == Approx(0.76).epsilon(1e-15));
  CHECK(out[2].mse == 0.003);
  CHECK_FALSE(out[2].original);
  CHECK(out[3].p == 0.5);
  CHECK(out[3].mse == 0.001);
  CHECK(expand_complements(std::span<const ParabolaPoint>()).empty());

  MetricsRow binary{DesignKind::rds, "flag", EstimatorId::adherent};
  binary.binary = true;
  binary.actual = 0.1;
  binary.mse = 0.0004;
  MetricsRow numeric{DesignKind::rds, "degree", EstimatorId::adherent};
  const std::vector<MetricsRow> ok{binary};
  CHECK(expand_complements(std::span<const MetricsRow>(ok))[1].p == Approx(0.9).epsilon(1e-15));
  const std::vector<MetricsRow> bad{binary, numeric};
  CHECK_THROWS_AS(expand_complements(std::span<const MetricsRow>(bad)), std::invalid_argument);
}

TEST_CASE("parabola fit") {
  SUBCASE("exact recovery") {
    std::vector<ParabolaPoint> pts;
    for (double p : {0.05, 0.1, 0.24, 0.5, 0.7, 0.93}) pts.push_back({p, 0.004 * p * (1 - p), true});
    for (auto scheme : {ParabolaWeights::unit, ParabolaWeights::inverse_pq_squared}) {
      const auto fit = fit_parabola(pts, parabola_weights(pts, scheme));
      CHECK(fit.a == Approx(0.004).epsilon(1e-12));
      CHECK(fit.residual_sum == Approx(0.0).scale(1.0).epsilon(1e-20));
    }
  }
  SUBCASE("one point") {
    const std::vector<ParabolaPoint> pts{{0.5, 0.001, true}};
    CHECK(fit_parabola(pts, std::vector<double>{1.0}).a == Approx(0.004).epsilon(1e-14));
  }
  SUBCASE("unequal weights match the normal equation") {
    // u = p(1-p) = 0.16, 0.25, 0.09; a = sum(w mse u) / sum(w u^2)
    //   = (0.000112 + 0.00055 + 0.0000135) / (0.0256 + 0.125 + 0.00405).
    const std::vector<ParabolaPoint> pts{{0.2, 0.0007, true}, {0.5, 0.0011, true}, {0.9, 0.0003, true}};
    const auto fit = fit_parabola(pts, std::vector<double>{1.0, 2.0, 0.5});
    CHECK(fit.a == Approx(0.0006755 / 0.15465).epsilon(1e-12));
  }
  SUBCASE("complements do not change the fit") {
    const std::vector<ParabolaPoint> pts{{0.2, 0.0007, true}, {0.35, 0.0009, true}};
    const auto expanded = expand_complements(std::span<const ParabolaPoint>(pts));
    CHECK(fit_parabola(expanded, parabola_weights(expanded, ParabolaWeights::unit)).a ==
          fit_parabola(pts, parabola_weights(pts, ParabolaWeights::unit)).a);
  }
  SUBCASE("no interior point") {
    const std::vector<ParabolaPoint> pts{{0.0, 0.001, true}, {1.0, 0.002, true}};
    CHECK_THROWS_AS(fit_parabola(pts, std::vector<double>{1.0, 1.0}), std::invalid_argument);
  }
}

TEST_CASE("emitted tables") {
  SUBCASE("no variables gives header-only files") {
    StudyReport rep;
    rep.diagnostics.push_back({DesignKind::rds, 0, 1});
    const auto dir = testing::temp_dir("empty_tables");
    emit_tables(rep, dir);
    CHECK(slurp(dir / "rds_metrics.csv") == "estimator,name,actual,E.est,bias,sd,mse,eff,rbias\n");
    CHECK(slurp(dir / "rds_coverage.csv") == "name,actual,halfwidth,coverage\n");
  }
  SUBCASE("micro-study matches the frozen golden files") {
    const auto& pop = micro_population();
    const auto rep = run_study(pop.graph, pop.attrs, micro_config());
    const auto dir = testing::temp_dir("golden_micro");
    emit_tables(rep, dir);
    const std::filesystem::path golden = std::filesystem::path(LTS_TEST_DATA) / "golden_micro";
    if (std::getenv("LTS_REGEN_GOLDEN")) {
      std::filesystem::create_directories(golden);
      for (auto name : kMicroFiles) std::filesystem::copy_file(dir / name, golden / name,
                                                               std::filesystem::copy_options::overwrite_existing);
    }
    for (auto name : kMicroFiles) {
      INFO(name);
      CHECK(slurp(dir / name) == slurp(golden / name));
    }
  }
  SUBCASE("thread count does not change the tables") {
    const auto& pop = micro_population();
    auto cfg = micro_config();
    cfg.threads = 1;
    const auto a = testing::temp_dir("threads_1");
    emit_tables(run_study(pop.graph, pop.attrs, cfg), a);
    cfg.threads = 4;
    const auto b = testing::temp_dir("threads_4");
    emit_tables(run_study(pop.graph, pop.attrs, cfg), b);
    for (auto name : kMicroFiles) CHECK(slurp(a / name) == slurp(b / name));
  }
  SUBCASE("unwritable directory") {
    const auto dir = testing::temp_dir("blocked");
    std::ofstream(dir / "file") << "x";
    CHECK_THROWS_AS(emit_tables(StudyReport{}, dir / "file" / "sub"), DataError);
  }
}
