#include "lts/config.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "lts/csv.hpp"
#include "lts/errors.hpp"

namespace lts {

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = csv::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key(csv::trim(body.substr(0, eq)));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = std::string(csv::trim(body.substr(eq + 1)));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_key_values(in);
}

const std::vector<ConfigKey>& design_keys() {
  static const std::vector<ConfigKey> keys{
      {"target_n", "field sample size"},
      {"seed_fraction", "initial seeds as a fraction of target_n"},
      {"coupon_max", "maximum recruits per respondent"},
      {"coupon_expiry_days", "days until a coupon expires"},
      {"redeem_prob", "per-coupon daily redemption probability"},
      {"plus_links", "reveal links among members (0/1)"},
      {"reseed_fraction", "fresh seeds per stalled day, as a fraction of target_n"},
  };
  return keys;
}

const std::vector<ConfigKey>& resample_keys() {
  static const std::vector<ConfigKey> keys{
      {"mode", "repeated | process | process_wr"},
      {"iterations", "resampling iterations T"},
      {"target_m", "resample target size"},
      {"trace_p", "per-link tracing probability"},
      {"seed_p", "initial Bernoulli seeding rate"},
      {"reseed_p", "ongoing re-seeding rate"},
      {"burn_in_to_target", "burn-in waits for the target size (0/1)"},
      {"burn_in_extra", "further burn-in iterations"},
      {"step_cap_factor", "repeated mode step cap as a multiple of target_m"},
      {"track_pairs", "record joint frequencies over sample edges (0/1)"},
      {"batches", "batch count for standard errors of f (0 = off)"},
  };
  return keys;
}

const std::vector<ConfigKey>& study_keys() {
  static const std::vector<ConfigKey> keys{
      {"designs", "comma list of rds, rds_plus, sb, sb_plus"},
      {"replications", "field samples per design"},
      {"rds_coupons", "coupon_max for RDS designs"},
      {"sb_coupons", "coupon_max for SB designs"},
      {"variables", "comma list of attribute names, degree, deg2plus"},
      {"adherent_variance", "simple_n | simple_taylor | taylor_edges | taylor_diag | taylor_conservative"},
      {"alpha", "confidence level is 1 - alpha"},
      {"seed", "master random seed"},
      {"threads", "worker threads (0 = all); results do not depend on it"},
      {"comparator", "vh_current | sample_mean"},
      {"parabola_weights", "unit | inverse_pq_squared"},
      {"edges", "population edge list file"},
      {"attrs", "population attribute CSV"},
  };
  return keys;
}

const std::vector<ConfigKey>& population_keys() {
  static const std::vector<ConfigKey> keys{
      {"pop_model", "configuration | two_component"},
      {"pop_nodes", "node count (configuration)"},
      {"degree_dist", "poisson | shifted_poisson | shifted_negbin"},
      {"mean_degree", "mean degree (configuration)"},
      {"dispersion", "negative binomial size parameter"},
      {"component_sizes", "two_component sizes, e.g. 1000,1000"},
      {"component_mean_degrees", "two_component mean degrees, e.g. 12,4"},
      {"attributes", "name:prevalence:homophily;..."},
  };
  return keys;
}

void check_known_keys(const KeyValues& kv) {
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const auto* group : {&design_keys(), &resample_keys(), &study_keys(), &population_keys()})
      known = known || std::any_of(group->begin(), group->end(), [&](const ConfigKey& c) { return c.name == k; });
    if (!known) throw ConfigError("unknown config key '" + k + "'");
  }
}

std::vector<std::string> split_list(const std::string& s, char delim) {
  std::vector<std::string> out;
  for (auto& f : csv::split(s, delim))
    if (!f.empty()) out.push_back(f);
  return out;
}

namespace {

double to_double(const KeyValues& kv, const std::string& key) {
  try {
    return csv::parse_double(kv.at(key), key);
  } catch (const DataError&) {
    throw ConfigError("config key '" + key + "': not a number: '" + kv.at(key) + "'");
  }
}

std::size_t to_size(const KeyValues& kv, const std::string& key) {
  long long v = 0;
  try {
    v = csv::parse_int(kv.at(key), key);
  } catch (const DataError&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + kv.at(key) + "'");
  }
  if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

bool to_bool(const KeyValues& kv, const std::string& key) {
  const auto& v = kv.at(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class F>
void with(const KeyValues& kv, const std::string& key, F&& f) {
  if (kv.contains(key)) f();
}

}  // namespace

void apply_design(const KeyValues& kv, DesignConfig& c) {
  with(kv, "target_n", [&] { c.target_n = to_size(kv, "target_n"); });
  with(kv, "seed_fraction", [&] { c.seed_fraction = to_double(kv, "seed_fraction"); });
  with(kv, "coupon_max", [&] { c.coupon_max = static_cast<int>(to_size(kv, "coupon_max")); });
  with(kv, "coupon_expiry_days", [&] { c.coupon_expiry_days = static_cast<int>(to_size(kv, "coupon_expiry_days")); });
  with(kv, "redeem_prob", [&] { c.redeem_prob = to_double(kv, "redeem_prob"); });
  with(kv, "plus_links", [&] { c.plus_links = to_bool(kv, "plus_links"); });
  with(kv, "reseed_fraction", [&] { c.reseed_fraction = to_double(kv, "reseed_fraction"); });
}

ResampleConfig resample_config_from(const KeyValues& kv) {
  auto c = ResampleConfig::defaults(kv.contains("mode") ? parse_resample_mode(kv.at("mode")) : ResampleMode::process);
  with(kv, "iterations", [&] { c.iterations = to_size(kv, "iterations"); });
  with(kv, "target_m", [&] { c.target_m = to_size(kv, "target_m"); });
  with(kv, "trace_p", [&] { c.trace_p = to_double(kv, "trace_p"); });
  with(kv, "seed_p", [&] { c.seed_p = to_double(kv, "seed_p"); });
  with(kv, "reseed_p", [&] { c.reseed_p = to_double(kv, "reseed_p"); });
  with(kv, "burn_in_to_target", [&] { c.burn_in_to_target = to_bool(kv, "burn_in_to_target"); });
  with(kv, "burn_in_extra", [&] { c.burn_in_extra = to_size(kv, "burn_in_extra"); });
  with(kv, "step_cap_factor", [&] { c.step_cap_factor = to_size(kv, "step_cap_factor"); });
  with(kv, "track_pairs", [&] { c.track_pairs = to_bool(kv, "track_pairs"); });
  with(kv, "batches", [&] { c.batches = to_size(kv, "batches"); });
  return c;
}

void apply_study(const KeyValues& kv, StudyConfig& c) {
  apply_design(kv, c.design);
  c.resample = resample_config_from(kv);
  with(kv, "designs", [&] {
    c.designs.clear();
    for (const auto& d : split_list(kv.at("designs"))) c.designs.push_back(parse_design(d));
  });
  with(kv, "replications", [&] { c.replications = to_size(kv, "replications"); });
  with(kv, "rds_coupons", [&] { c.rds_coupons = static_cast<int>(to_size(kv, "rds_coupons")); });
  with(kv, "sb_coupons", [&] { c.sb_coupons = static_cast<int>(to_size(kv, "sb_coupons")); });
  with(kv, "variables", [&] { c.variables = split_list(kv.at("variables")); });
  with(kv, "adherent_variance", [&] { c.adherent_variance = parse_variance_id(kv.at("adherent_variance")); });
  with(kv, "alpha", [&] { c.alpha = to_double(kv, "alpha"); });
  with(kv, "seed", [&] { c.seed = to_size(kv, "seed"); });
  with(kv, "threads", [&] { c.threads = static_cast<int>(to_size(kv, "threads")); });
  with(kv, "comparator", [&] { c.comparator = parse_estimator_id(kv.at("comparator")); });
  with(kv, "parabola_weights", [&] {
    const auto& v = kv.at("parabola_weights");
    if (v == "unit") c.parabola_weights = ParabolaWeights::unit;
    else if (v == "inverse_pq_squared") c.parabola_weights = ParabolaWeights::inverse_pq_squared;
    else throw ConfigError("unknown parabola_weights '" + v + "'");
  });
}

std::vector<AttributeSpec> parse_attribute_specs(const std::string& s) {
  std::vector<AttributeSpec> out;
  for (const auto& item : split_list(s, ';')) {
    const auto parts = csv::split(item, ':');
    if (parts.size() < 2 || parts.size() > 3)
      throw ConfigError("attribute spec '" + item + "' must be name:prevalence[:homophily]");
    AttributeSpec a;
    a.name = parts[0];
    try {
      a.prevalence = csv::parse_double(parts[1], "prevalence");
      if (parts.size() == 3) a.homophily = csv::parse_double(parts[2], "homophily");
    } catch (const DataError& e) {
      throw ConfigError(std::string("attribute spec '") + item + "': " + e.what());
    }
    if (!(a.prevalence >= 0.0 && a.prevalence <= 1.0) || !(a.homophily >= 0.0 && a.homophily <= 1.0))
      throw ConfigError("attribute spec '" + item + "': prevalence and homophily must be in [0, 1]");
    out.push_back(a);
  }
  return out;
}

SyntheticPopSpec population_spec_from(const KeyValues& kv) {
  SyntheticPopSpec s;
  with(kv, "pop_model", [&] {
    const auto& v = kv.at("pop_model");
    if (v == "configuration") s.kind = SyntheticPopSpec::Kind::configuration;
    else if (v == "two_component") s.kind = SyntheticPopSpec::Kind::two_component;
    else throw ConfigError("unknown pop_model '" + v + "'");
  });
  with(kv, "pop_nodes", [&] { s.node_count = to_size(kv, "pop_nodes"); });
  with(kv, "degree_dist", [&] {
    const auto& v = kv.at("degree_dist");
    if (v == "poisson") s.degree.model = DegreeModel::poisson;
    else if (v == "shifted_poisson") s.degree.model = DegreeModel::shifted_poisson;
    else if (v == "shifted_negbin") s.degree.model = DegreeModel::shifted_negbin;
    else throw ConfigError("unknown degree_dist '" + v + "'");
  });
  with(kv, "mean_degree", [&] { s.degree.mean = to_double(kv, "mean_degree"); });
  with(kv, "dispersion", [&] { s.degree.dispersion = to_double(kv, "dispersion"); });
  auto pair_of = [&](const std::string& key, auto& a, auto& b, auto parse) {
    const auto parts = split_list(kv.at(key));
    if (parts.size() != 2) throw ConfigError("config key '" + key + "' needs two comma-separated values");
    KeyValues one{{key, parts[0]}}, two{{key, parts[1]}};
    a = parse(one, key);
    b = parse(two, key);
  };
  with(kv, "component_sizes", [&] { pair_of("component_sizes", s.size_a, s.size_b, to_size); });
  with(kv, "component_mean_degrees",
       [&] { pair_of("component_mean_degrees", s.mean_degree_a, s.mean_degree_b, to_double); });
  with(kv, "attributes", [&] { s.attributes = parse_attribute_specs(kv.at("attributes")); });
  s.validate();
  return s;
}

}  // namespace lts
