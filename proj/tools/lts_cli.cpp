// lts: link-tracing survey simulation, resampling and estimation.
#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "lts/config.hpp"
#include "lts/csv.hpp"
#include "lts/errors.hpp"
#include "lts/estimators.hpp"
#include "lts/fieldsim.hpp"
#include "lts/harness.hpp"
#include "lts/netpop.hpp"
#include "lts/oracle.hpp"
#include "lts/resampler.hpp"
#include "lts/rng.hpp"

namespace {

using namespace lts;

// Options named after config keys; flags given on the command line override
// values from --config.
class KeyOptions {
 public:
  void add(CLI::App* app, const std::vector<ConfigKey>& keys) {
    for (const auto& k : keys) {
      if (values_.contains(k.name)) continue;
      opts_[k.name] = app->add_option("--" + k.name, values_[k.name], k.help);
    }
  }
  KeyValues resolve(const std::string& config_path) const {
    KeyValues kv;
    if (!config_path.empty()) kv = read_key_values(config_path);
    check_known_keys(kv);
    for (const auto& [name, opt] : opts_)
      if (opt->count() > 0) kv[name] = values_.at(name);
    return kv;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, CLI::Option*> opts_;
};

const std::vector<ConfigKey> kSeedThreads{{"seed", "master random seed"},
                                          {"threads", "worker threads (0 = all); results do not depend on it"}};

KeyValues only(const KeyValues& kv, const std::string& key) {
  KeyValues one;
  if (kv.contains(key)) one[key] = kv.at(key);
  return one;
}

std::uint64_t seed_of(const KeyValues& kv) {
  StudyConfig c;
  apply_study(only(kv, "seed"), c);
  return c.seed;
}

int threads_of(const KeyValues& kv) {
  StudyConfig c;
  apply_study(only(kv, "threads"), c);
  return c.threads;
}

struct PopulationSource {
  std::string edges, attrs;
};

Population load_or_generate(const PopulationSource& src, const KeyValues& kv, std::uint64_t seed) {
  std::string edges = src.edges.empty() && kv.contains("edges") ? kv.at("edges") : src.edges;
  std::string attrs = src.attrs.empty() && kv.contains("attrs") ? kv.at("attrs") : src.attrs;
  if (!edges.empty()) {
    if (!attrs.empty()) return load_population(edges, attrs);
    auto g = load_edges(std::filesystem::path(edges));
    const auto n = g.graph.node_count();
    return {std::move(g.graph), AttributeTable(n, {}), g.report};
  }
  auto gen = gen_population(population_spec_from(kv), derive_seed(seed, 0x706f70));
  return {std::move(gen.graph), std::move(gen.attrs), {}};
}

void report_load(const Population& p) {
  std::cerr << "population: " << p.graph.node_count() << " nodes, " << p.graph.edge_count() << " links";
  if (p.report.duplicate_edges || p.report.self_loops)
    std::cerr << " (dropped " << p.report.duplicate_edges << " duplicate edges, " << p.report.self_loops
              << " self-loops)";
  std::cerr << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Link-tracing survey simulation and design-adherent estimation"};
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "key=value defaults file");

  // gen-population
  auto* gen = app.add_subcommand("gen-population", "generate a synthetic population");
  KeyOptions gen_keys;
  gen_keys.add(gen, population_keys());
  gen_keys.add(gen, kSeedThreads);
  std::string out_edges, out_attrs;
  gen->add_option("--out-edges", out_edges, "edge list to write")->required();
  gen->add_option("--out-attrs", out_attrs, "attribute CSV to write")->required();

  // survey
  auto* survey = app.add_subcommand("survey", "draw one field sample");
  KeyOptions survey_keys;
  survey_keys.add(survey, design_keys());
  survey_keys.add(survey, population_keys());
  survey_keys.add(survey, kSeedThreads);
  PopulationSource survey_pop;
  std::string design_name = "rds", survey_out;
  survey->add_option("--edges", survey_pop.edges, "population edge list");
  survey->add_option("--attrs", survey_pop.attrs, "population attribute CSV");
  survey->add_option("--design", design_name, "rds | rds_plus | sb | sb_plus (sets coupon_max and plus_links)");
  survey->add_option("--out", survey_out, "output directory")->required();

  // resample
  auto* res = app.add_subcommand("resample", "inclusion frequencies for a sample");
  KeyOptions res_keys;
  res_keys.add(res, resample_keys());
  res_keys.add(res, kSeedThreads);
  std::string res_sample, res_out, res_pairs;
  res->add_option("--sample", res_sample, "sample directory from `survey`")->required();
  res->add_option("--out", res_out, "frequency CSV to write")->required();
  res->add_option("--pairs-out", res_pairs, "joint frequency CSV over sample edges");

  // estimate
  auto* est = app.add_subcommand("estimate", "point and variance estimates from a sample and frequencies");
  KeyOptions est_keys;
  est_keys.add(est, {{"variables", "comma list of variables"},
                     {"alpha", "confidence level is 1 - alpha"},
                     {"adherent_variance", "variance estimator for the adherent mean"}});
  std::string est_sample, est_freqs, est_pairs, est_out, ratio_x;
  est->add_option("--sample", est_sample, "sample directory")->required();
  est->add_option("--freqs", est_freqs, "frequency CSV from `resample`")->required();
  est->add_option("--pairs", est_pairs, "joint frequency CSV (for taylor_edges)");
  est->add_option("--ratio-x", ratio_x, "also estimate ratios of each variable to this one");
  est->add_option("--out", est_out, "estimates CSV (default stdout)");

  // study
  auto* study = app.add_subcommand("study", "full replication study");
  KeyOptions study_keys_opt;
  study_keys_opt.add(study, study_keys());
  study_keys_opt.add(study, design_keys());
  study_keys_opt.add(study, resample_keys());
  study_keys_opt.add(study, population_keys());
  std::string study_out;
  study->add_option("--out", study_out, "output directory for tables")->required();

  // oracle
  auto* oracle = app.add_subcommand("oracle", "exact stationary marginals or Monte Carlo inclusion probabilities");
  oracle->require_subcommand(1);
  auto* exact = oracle->add_subcommand("exact", "exact process-mode stationary marginals (n <= 12)");
  KeyOptions exact_keys;
  exact_keys.add(exact, resample_keys());
  exact_keys.add(exact, kSeedThreads);
  std::string exact_sample, exact_out;
  exact->add_option("--sample", exact_sample, "sample directory")->required();
  exact->add_option("--out", exact_out, "marginals CSV (default stdout)");
  auto* mc = oracle->add_subcommand("mc", "Monte Carlo field inclusion probabilities");
  KeyOptions mc_keys;
  mc_keys.add(mc, design_keys());
  mc_keys.add(mc, population_keys());
  mc_keys.add(mc, kSeedThreads);
  PopulationSource mc_pop;
  std::size_t mc_reps = 1000;
  std::string mc_design = "rds", mc_out;
  mc->add_option("--edges", mc_pop.edges, "population edge list");
  mc->add_option("--attrs", mc_pop.attrs, "population attribute CSV");
  mc->add_option("--design", mc_design, "rds | rds_plus | sb | sb_plus");
  mc->add_option("--replications", mc_reps, "surveys to simulate");
  mc->add_option("--out", mc_out, "inclusion CSV (default stdout)");

  // --config may follow the subcommand name.
  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    for (auto* nested : sub->get_subcommands({})) nested->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto out_stream = [](const std::string& path) -> std::unique_ptr<std::ostream> {
    if (path.empty()) return std::make_unique<std::ostream>(std::cout.rdbuf());
    return std::make_unique<std::ofstream>(csv::open_out(path));
  };

  if (*gen) {
    const auto kv = gen_keys.resolve(config);
    auto pop = gen_population(population_spec_from(kv), seed_of(kv));
    auto e = csv::open_out(out_edges);
    write_edges(e, pop.graph);
    auto a = csv::open_out(out_attrs);
    write_attributes(a, pop.graph, pop.attrs);
    std::cerr << "generated " << pop.graph.node_count() << " nodes, " << pop.graph.edge_count() << " links ("
              << pop.erased_self_loops << " self-loops and " << pop.erased_multi_edges << " multi-edges erased, "
              << pop.isolated_nodes << " isolated)\n";
  } else if (*survey) {
    const auto kv = survey_keys.resolve(config);
    const auto seed = seed_of(kv);
    const auto pop = load_or_generate(survey_pop, kv, seed);
    report_load(pop);
    StudyConfig sc;
    apply_design(kv, sc.design);
    auto dcfg = sc.design_for(parse_design(design_name));
    if (kv.contains("coupon_max")) dcfg.coupon_max = sc.design.coupon_max;
    if (kv.contains("plus_links")) dcfg.plus_links = sc.design.plus_links;
    auto sample = run_survey(pop.graph, pop.attrs, dcfg, derive_seed(seed, 1));
    if (dcfg.plus_links) sample = augment_plus(std::move(sample), pop.graph);
    check_sample(sample, dcfg.coupon_max, &pop.graph);
    write_sample(sample, survey_out);
    std::cerr << "sample: " << sample.size() << " members, " << sample.seed_count() << " seeds, "
              << sample.plus_edges.size() << " plus edges\n";
  } else if (*res) {
    const auto kv = res_keys.resolve(config);
    const auto sample = read_sample(res_sample);
    auto cfg = resample_config_from(kv);
    if (!res_pairs.empty()) cfg.track_pairs = true;
    const auto fr = resample(sample, cfg, derive_seed(seed_of(kv), 2));
    write_frequencies(fr, sample, res_out);
    if (!res_pairs.empty()) write_pair_frequencies(fr, sample, res_pairs);
    std::cerr << "T_effective " << fr.t_effective << ", mean resample size " << fr.diagnostics.mean_size
              << ", stalled " << fr.diagnostics.stalled_resamples << '\n';
  } else if (*est) {
    const auto kv = est_keys.resolve(config);
    StudyConfig sc;
    sc.variables = {"degree"};
    apply_study(kv, sc);
    const auto sample = read_sample(est_sample);
    auto fr = read_frequencies(est_freqs, sample, est_pairs);
    if (const auto z = apply_zero_frequency_guard(fr)) std::cerr << z << " zero frequencies guarded\n";
    auto out = out_stream(est_out);
    *out << estimate_csv_header() << '\n';
    const std::vector<double> ones(sample.size(), 1.0);
    const auto edges = sample.traceable_edges();
    for (const auto& var : sc.variables) {
      const auto y = sample.values(var);
      const double p = mu_f(y, fr.f);
      double v = 0.0;
      switch (sc.adherent_variance) {
        case VarianceId::simple_n: v = var_simple_n(y, fr.f, p); break;
        case VarianceId::simple_taylor: v = var_simple_taylor(y, fr.f, p); break;
        case VarianceId::taylor_diag: v = var_taylor_diag(y, fr.f, p); break;
        case VarianceId::taylor_conservative: v = var_taylor_conservative(y, fr.f, p); break;
        case VarianceId::taylor_edges: v = var_taylor_edges(y, fr.f, edges, fr.pairs, p).value; break;
        default: throw ConfigError("unsupported adherent variance");
      }
      *out << estimate_csv_row(var, make_result(EstimatorId::adherent, sc.adherent_variance, p, v, sc.alpha)) << '\n';
      const double pd = vh_estimate(y, sample.degree);
      *out << estimate_csv_row(var, make_result(EstimatorId::vh_current, VarianceId::simple_n, pd,
                                                var_simple_n(y, sample.degree, pd), sc.alpha))
           << '\n';
      const double pm = sample_mean(y);
      *out << estimate_csv_row(var, make_result(EstimatorId::sample_mean, VarianceId::simple_n, pm,
                                                var_simple_n(y, ones, pm), sc.alpha))
           << '\n';
      if (!fr.g.empty()) {
        const double pw = wr_estimate(y, ones, fr.g);
        *out << estimate_csv_row(var, make_result(EstimatorId::adherent_wr, VarianceId::wr, pw,
                                                  wr_variance(y, ones, fr.g, pw), sc.alpha))
             << '\n';
      }
      if (!ratio_x.empty()) {
        const auto x = sample.values(ratio_x);
        const double r = ratio_estimate(y, x, fr.f);
        *out << estimate_csv_row(var + "/" + ratio_x, make_result(EstimatorId::ratio, VarianceId::ratio, r,
                                                                  ratio_variance(y, x, fr.f, r), sc.alpha))
             << '\n';
      }
    }
  } else if (*study) {
    const auto kv = study_keys_opt.resolve(config);
    StudyConfig sc;
    sc.variables = {"degree", "deg2plus"};
    apply_study(kv, sc);
    const auto pop = load_or_generate({}, kv, sc.seed);
    report_load(pop);
    const auto report = run_study(pop.graph, pop.attrs, sc);
    emit_tables(report, study_out);
    for (const auto& r : report.rows)
      if (r.estimator == EstimatorId::adherent || r.estimator == sc.comparator)
        std::cerr << display_name(r.design) << ' ' << r.variable << ' ' << to_string(r.estimator)
                  << ": E.est " << r.e_est << " (actual " << r.actual << "), mse " << r.mse << ", eff " << r.eff
                  << ", coverage " << r.coverage << '\n';
  } else if (*exact) {
    const auto kv = exact_keys.resolve(config);
    const auto sample = read_sample(exact_sample);
    auto cfg = resample_config_from(kv);
    cfg.mode = ResampleMode::process;
    const auto st = exact_process_stationary(sample, cfg, 1e-12, threads_of(kv));
    auto out = out_stream(exact_out);
    *out << "label,phi\n";
    for (std::size_t i = 0; i < st.n; ++i) *out << sample.labels[i] << ',' << csv::exact(st.marginals[i]) << '\n';
  } else if (*mc) {
    const auto kv = mc_keys.resolve(config);
    const auto seed = seed_of(kv);
    const auto pop = load_or_generate(mc_pop, kv, seed);
    StudyConfig sc;
    apply_design(kv, sc.design);
    auto dcfg = sc.design_for(parse_design(mc_design));
    if (kv.contains("coupon_max")) dcfg.coupon_max = sc.design.coupon_max;
    const auto fi = mc_field_inclusion(pop.graph, dcfg, mc_reps, seed, threads_of(kv));
    auto out = out_stream(mc_out);
    *out << "label,pi_hat,se\n";
    for (std::size_t v = 0; v < pop.graph.node_count(); ++v)
      *out << pop.graph.label(static_cast<NodeId>(v)) << ',' << csv::exact(fi.pi_hat[v]) << ','
           << csv::exact(fi.se[v]) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const lts::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const lts::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const lts::ReducibleChainError& e) {
    std::cerr << "data error: " << e.what() << " (" << e.classes().size() << " closed classes)\n";
    return 2;
  } catch (const lts::ReplicationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
