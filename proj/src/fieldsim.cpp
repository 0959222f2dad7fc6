#include "lts/fieldsim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "lts/csv.hpp"
#include "lts/errors.hpp"
#include "lts/rng.hpp"

namespace lts {

void DesignConfig::validate() const {
  if (target_n < 1) throw ConfigError("target_n must be >= 1");
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) throw ConfigError("seed_fraction must be in (0, 1]");
  if (coupon_max < 1) throw ConfigError("coupon_max must be >= 1");
  if (coupon_expiry_days < 1) throw ConfigError("coupon_expiry_days must be >= 1");
  if (!(redeem_prob > 0.0 && redeem_prob <= 1.0)) throw ConfigError("redeem_prob must be in (0, 1]");
  if (!(reseed_fraction > 0.0 && reseed_fraction <= 1.0)) throw ConfigError("reseed_fraction must be in (0, 1]");
}

std::size_t DesignConfig::initial_seed_count() const {
  const auto k = static_cast<std::size_t>(std::llround(seed_fraction * static_cast<double>(target_n)));
  return std::clamp<std::size_t>(k, 1, target_n);
}

std::size_t SampleNetwork::seed_count() const {
  return static_cast<std::size_t>(std::count(recruiter.begin(), recruiter.end(), -1));
}

std::vector<std::pair<int, int>> SampleNetwork::recruitment_edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (recruiter[i] >= 0) out.emplace_back(recruiter[i], static_cast<int>(i));
  return out;
}

std::vector<std::pair<int, int>> SampleNetwork::traceable_edges() const {
  std::vector<std::pair<int, int>> out;
  for (auto [a, b] : recruitment_edges()) out.emplace_back(std::min(a, b), std::max(a, b));
  for (auto [a, b] : plus_edges) out.emplace_back(std::min(a, b), std::max(a, b));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<double> SampleNetwork::values(std::string_view name) const {
  for (std::size_t k = 0; k < y_names.size(); ++k)
    if (y_names[k] == name) return y[k];
  if (name == "degree") return degree;
  if (name == "deg2plus") {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = degree[i] >= 2.0 ? 1.0 : 0.0;
    return out;
  }
  throw ConfigError("sample has no variable '" + std::string(name) + "'");
}

void check_sample(const SampleNetwork& s, int coupon_max, const PopulationGraph* graph) {
  const auto n = s.size();
  if (s.recruiter.size() != n || s.degree.size() != n || s.recruit_day.size() != n)
    throw InvariantViolation("sample field lengths disagree");
  std::set<std::string> distinct(s.labels.begin(), s.labels.end());
  if (distinct.size() != n) throw InvariantViolation("sample members are not distinct");

  std::vector<int> out_degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int r = s.recruiter[i];
    if (r < -1 || r >= static_cast<int>(n)) throw InvariantViolation("recruiter index out of range");
    if (r >= 0 && ++out_degree[r] > coupon_max)
      throw InvariantViolation("recruiter " + s.labels[r] + " exceeds coupon_max");
  }
  // Every chain of recruiters must reach a seed within n steps.
  std::vector<char> state(n, 0);  // 0 unknown, 1 on stack, 2 rooted
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> path;
    int v = static_cast<int>(i);
    while (v >= 0 && state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      v = s.recruiter[v];
    }
    if (v >= 0 && state[v] == 1) throw InvariantViolation("recruitment edges contain a cycle");
    for (int p : path) state[p] = 2;
  }
  if (graph && s.population_index.size() == n) {
    auto check = [&](int a, int b) {
      if (!graph->has_edge(s.population_index[a], s.population_index[b]))
        throw InvariantViolation("sample edge " + s.labels[a] + "-" + s.labels[b] + " is not a population link");
    };
    for (auto [a, b] : s.recruitment_edges()) check(a, b);
    for (auto [a, b] : s.plus_edges) check(a, b);
  }
}

namespace {

// Eligible unsampled nodes with O(1) removal and uniform draws.
class Pool {
 public:
  Pool(const PopulationGraph& g) : pos_(g.node_count(), -1) {
    for (std::size_t v = 0; v < g.node_count(); ++v)
      if (g.degree(static_cast<NodeId>(v)) > 0) insert(static_cast<NodeId>(v));
  }
  std::size_t size() const { return items_.size(); }
  bool contains(NodeId v) const { return pos_[v] >= 0; }
  void insert(NodeId v) {
    pos_[v] = static_cast<std::int64_t>(items_.size());
    items_.push_back(v);
  }
  void erase(NodeId v) {
    const auto p = pos_[v];
    if (p < 0) return;
    const NodeId last = items_.back();
    items_[p] = last;
    pos_[last] = p;
    items_.pop_back();
    pos_[v] = -1;
  }
  NodeId draw(Rng& rng) {
    const NodeId v = items_[rng.index(items_.size())];
    erase(v);
    return v;
  }

 private:
  std::vector<NodeId> items_;
  std::vector<std::int64_t> pos_;
};

struct Coupon {
  int holder;  // local index
  int issued;  // day
};

}  // namespace

SampleNetwork run_survey(const PopulationGraph& graph, const AttributeTable& attrs,
                         const DesignConfig& cfg, std::uint64_t rng_seed,
                         std::span<const NodeId> initial_seeds) {
  cfg.validate();
  const auto N = graph.node_count();
  if (N == 0) throw ConfigError("population graph is empty");
  if (cfg.target_n > N) throw ConfigError("target_n exceeds population size");

  Rng rng(rng_seed);
  Pool pool(graph);
  std::vector<char> sampled(N, 0);
  SampleNetwork s;
  std::vector<Coupon> live;

  auto admit = [&](NodeId v, int recruiter, int day) {
    sampled[v] = 1;
    pool.erase(v);
    s.population_index.push_back(v);
    s.recruiter.push_back(recruiter);
    s.recruit_day.push_back(day);
    return static_cast<int>(s.population_index.size() - 1);
  };
  auto issue = [&](int local, int day) {
    const auto d = graph.degree(s.population_index[local]);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(cfg.coupon_max), d);
    for (std::size_t c = 0; c < k; ++c) live.push_back({local, day});
  };

  if (!initial_seeds.empty()) {
    for (NodeId v : initial_seeds) {
      if (v < 0 || static_cast<std::size_t>(v) >= N) throw ConfigError("initial seed out of range");
      if (sampled[v]) throw ConfigError("initial seeds repeat");
      if (s.population_index.size() >= cfg.target_n) break;
      admit(v, -1, 0);
    }
  } else {
    if (cfg.target_n > pool.size())
      throw ConfigError("target_n exceeds the number of nodes with at least one link");
    const auto k = cfg.initial_seed_count();
    for (std::size_t i = 0; i < k; ++i) admit(pool.draw(rng), -1, 0);
  }
  for (std::size_t i = 0; i < s.population_index.size(); ++i) issue(static_cast<int>(i), 0);

  const auto reseed_batch =
      static_cast<std::size_t>(std::ceil(cfg.reseed_fraction * static_cast<double>(cfg.target_n)));
  std::vector<NodeId> candidates;
  std::vector<int> todays;
  for (int day = 1; s.population_index.size() < cfg.target_n; ++day) {
    std::erase_if(live, [&](const Coupon& c) { return day - c.issued > cfg.coupon_expiry_days; });

    if (live.empty()) {
      if (pool.size() == 0) throw InvariantViolation("population exhausted before target_n");
      const auto k = std::min({reseed_batch, pool.size(), cfg.target_n - s.population_index.size()});
      for (std::size_t i = 0; i < k; ++i) {
        const int local = admit(pool.draw(rng), -1, day);
        issue(local, day);
      }
      continue;
    }

    todays.clear();
    std::vector<Coupon> kept;
    kept.reserve(live.size());
    for (const auto& c : live) {
      if (!rng.bernoulli(cfg.redeem_prob)) {
        kept.push_back(c);
        continue;
      }
      candidates.clear();
      for (NodeId j : graph.neighbors(s.population_index[c.holder]))
        if (!sampled[j]) candidates.push_back(j);
      if (candidates.empty()) continue;  // wasted
      todays.push_back(admit(candidates[rng.index(candidates.size())], c.holder, day));
    }
    live = std::move(kept);

    // Exact-n stop: reject the day's surplus uniformly at random.
    if (s.population_index.size() > cfg.target_n) {
      const auto surplus = s.population_index.size() - cfg.target_n;
      for (std::size_t i = 0; i < surplus; ++i) {
        const auto pick = i + rng.index(todays.size() - i);
        std::swap(todays[i], todays[pick]);
      }
      std::vector<char> drop(s.population_index.size(), 0);
      for (std::size_t i = 0; i < surplus; ++i) drop[todays[i]] = 1;
      // Rejected recruits were all admitted today, so they have no recruits of
      // their own and removing them keeps the remaining indices valid.
      std::vector<int> remap(s.population_index.size(), -1);
      SampleNetwork kept_s;
      for (std::size_t i = 0; i < s.population_index.size(); ++i) {
        const NodeId v = s.population_index[i];
        if (drop[i]) {
          sampled[v] = 0;
          pool.insert(v);
          continue;
        }
        remap[i] = static_cast<int>(kept_s.population_index.size());
        kept_s.population_index.push_back(v);
        kept_s.recruiter.push_back(s.recruiter[i] < 0 ? -1 : remap[s.recruiter[i]]);
        kept_s.recruit_day.push_back(s.recruit_day[i]);
      }
      s = std::move(kept_s);
      break;
    }
    for (int local : todays) issue(local, day);
  }

  const auto n = s.population_index.size();
  s.labels.resize(n);
  s.degree.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.labels[i] = graph.label(s.population_index[i]);
    s.degree[i] = static_cast<double>(graph.degree(s.population_index[i]));
  }
  s.y_names = attrs.names();
  for (std::size_t k = 0; k < attrs.names().size(); ++k) {
    const auto col = attrs.column(k);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = col[s.population_index[i]];
    s.y.push_back(std::move(v));
  }
  return s;
}

SampleNetwork augment_plus(SampleNetwork sample, const PopulationGraph& graph) {
  if (sample.population_index.size() != sample.size())
    throw ConfigError("augment_plus needs population indices for the sample");
  std::unordered_map<NodeId, int> local;
  for (std::size_t i = 0; i < sample.size(); ++i) local.emplace(sample.population_index[i], static_cast<int>(i));
  std::set<std::pair<int, int>> recruited;
  for (auto [a, b] : sample.recruitment_edges()) recruited.emplace(std::min(a, b), std::max(a, b));

  sample.plus_edges.clear();
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (NodeId v : graph.neighbors(sample.population_index[i])) {
      const auto it = local.find(v);
      if (it == local.end()) continue;
      const int a = static_cast<int>(i), b = it->second;
      if (a < b && !recruited.contains({a, b})) sample.plus_edges.emplace_back(a, b);
    }
  }
  std::sort(sample.plus_edges.begin(), sample.plus_edges.end());
  return sample;
}

void write_sample(const SampleNetwork& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = csv::open_out(dir / "members.csv");
    out << "label,seed,degree";
    for (const auto& n : s.y_names) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.labels[i] << ',' << (s.is_seed(static_cast<int>(i)) ? 1 : 0) << ',' << csv::exact(s.degree[i]);
      for (const auto& col : s.y) out << ',' << csv::exact(col[i]);
      out << '\n';
    }
  }
  {
    auto out = csv::open_out(dir / "recruitment.csv");
    out << "recruiter,recruit,day\n";
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.recruiter[i] >= 0) out << s.labels[s.recruiter[i]] << ',' << s.labels[i] << ',' << s.recruit_day[i] << '\n';
  }
  {
    auto out = csv::open_out(dir / "plus.csv");
    out << "a,b\n";
    for (auto [a, b] : s.plus_edges) out << s.labels[a] << ',' << s.labels[b] << '\n';
  }
}

namespace {

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& p, std::vector<std::string>& header) {
  auto in = csv::open_in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto f = csv::split(line);
    if (first) {
      header = std::move(f);
      first = false;
      continue;
    }
    if (f.size() != header.size())
      throw DataError(p.filename().string() + " line " + std::to_string(lineno) + ": wrong field count");
    rows.push_back(std::move(f));
  }
  if (first) throw DataError(p.string() + " has no header");
  return rows;
}

}  // namespace

SampleNetwork read_sample(const std::filesystem::path& dir) {
  SampleNetwork s;
  std::vector<std::string> header;
  const auto members = read_rows(dir / "members.csv", header);
  if (header.size() < 3 || header[0] != "label" || header[1] != "seed" || header[2] != "degree")
    throw DataError("members.csv must start with label,seed,degree");
  s.y_names.assign(header.begin() + 3, header.end());
  s.y.assign(s.y_names.size(), {});
  std::unordered_map<std::string, int> local;
  for (const auto& row : members) {
    const auto where = "members.csv label " + row[0];
    if (!local.emplace(row[0], static_cast<int>(s.labels.size())).second)
      throw DataError(where + ": duplicate member");
    s.labels.push_back(row[0]);
    s.degree.push_back(csv::parse_double(row[2], where));
    for (std::size_t k = 0; k < s.y_names.size(); ++k) s.y[k].push_back(csv::parse_double(row[3 + k], where));
  }
  s.recruiter.assign(s.labels.size(), -1);
  s.recruit_day.assign(s.labels.size(), 0);
  auto lookup = [&](const std::string& label, const std::string& file) {
    const auto it = local.find(label);
    if (it == local.end()) throw DataError(file + ": unknown member '" + label + "'");
    return it->second;
  };
  for (const auto& row : read_rows(dir / "recruitment.csv", header)) {
    const int a = lookup(row[0], "recruitment.csv"), b = lookup(row[1], "recruitment.csv");
    if (s.recruiter[b] >= 0) throw DataError("recruitment.csv: '" + row[1] + "' has two recruiters");
    s.recruiter[b] = a;
    s.recruit_day[b] = static_cast<int>(csv::parse_int(row[2], "recruitment.csv"));
  }
  if (std::filesystem::exists(dir / "plus.csv")) {
    for (const auto& row : read_rows(dir / "plus.csv", header)) {
      const int a = lookup(row[0], "plus.csv"), b = lookup(row[1], "plus.csv");
      s.plus_edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  return s;
}

}  // namespace lts
