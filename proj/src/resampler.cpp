#include "lts/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>

#include "lts/csv.hpp"
#include "lts/errors.hpp"
#include "lts/rng.hpp"
#include "lts/transition_rules.hpp"

namespace lts {

std::string to_string(ResampleMode m) {
  switch (m) {
    case ResampleMode::repeated: return "repeated";
    case ResampleMode::process: return "process";
    case ResampleMode::process_wr: return "process_wr";
  }
  return "?";
}

ResampleMode parse_resample_mode(const std::string& s) {
  if (s == "repeated") return ResampleMode::repeated;
  if (s == "process") return ResampleMode::process;
  if (s == "process_wr") return ResampleMode::process_wr;
  throw ConfigError("unknown resample mode '" + s + "'");
}

ResampleConfig ResampleConfig::defaults(ResampleMode mode) {
  ResampleConfig c;
  c.mode = mode;
  if (mode == ResampleMode::repeated) {
    c.seed_p = 0.0167;
    c.trace_p = 0.05;
    c.reseed_p = 0.001;
  } else {
    c.seed_p = 0.0;
    c.trace_p = 0.5;
    c.reseed_p = 0.01;
  }
  return c;
}

void ResampleConfig::validate(std::size_t sample_size) const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
  };
  prob(trace_p, "trace_p");
  prob(seed_p, "seed_p");
  prob(reseed_p, "reseed_p");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (target_m < 1) throw ConfigError("target_m must be >= 1");
  if (mode != ResampleMode::process_wr && target_m > sample_size)
    throw ConfigError("target_m exceeds the sample size");
  if (mode != ResampleMode::repeated && iterations <= burn_in_extra)
    throw ConfigError("iterations must exceed burn_in_extra");
  if (batches == 1) throw ConfigError("batches must be 0 or >= 2");
  if (mode == ResampleMode::repeated && step_cap_factor < 1) throw ConfigError("step_cap_factor must be >= 1");
}

SampleGraph::SampleGraph(const SampleNetwork& s) : SampleGraph(s.size(), s.traceable_edges()) {}

SampleGraph::SampleGraph(std::size_t n, std::vector<std::pair<int, int>> e) : edges(std::move(e)) {
  offsets.assign(n + 1, 0);
  for (auto [a, b] : edges) {
    if (a == b || a < 0 || b < 0 || static_cast<std::size_t>(std::max(a, b)) >= n)
      throw DataError("invalid sample edge");
    ++offsets[a + 1];
    ++offsets[b + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  adjacency.resize(offsets[n]);
  edge_id.resize(offsets[n]);
  std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    auto [a, b] = edges[k];
    adjacency[fill[a]] = b;
    edge_id[fill[a]++] = static_cast<int>(k);
    adjacency[fill[b]] = a;
    edge_id[fill[b]++] = static_cast<int>(k);
  }
}

namespace {

// Per-run inclusion counts over the counted iterations.
class Accumulator {
 public:
  Accumulator(const SampleGraph& g, std::size_t t_effective, const ResampleConfig& cfg, bool counts)
      : g_(g), n_(g.size()), t_eff_(t_effective), batches_(cfg.batches), track_pairs_(cfg.track_pairs),
        counts_(counts), present_(n_, 0) {
    if (counts_) selections_.assign(n_, 0.0);
    if (track_pairs_) pair_present_.assign(g.edges.size(), 0);
    if (batches_ >= 2) {
      batch_present_.assign(batches_, std::vector<std::uint64_t>(n_, 0));
      if (counts_) batch_selections_.assign(batches_, std::vector<double>(n_, 0.0));
      batch_len_.assign(batches_, 0);
    }
  }

  // `members` lists the nodes present; `in_set` flags them; `count` gives
  // multiplicities (with-replacement runs only).
  void record(const std::vector<int>& members, const std::vector<char>& in_set,
              const std::vector<std::uint32_t>* count) {
    const std::size_t b = batches_ >= 2 ? t_ * batches_ / t_eff_ : 0;
    double size = 0.0;
    for (int i : members) {
      ++present_[i];
      const double m = count ? (*count)[i] : 1.0;
      size += m;
      if (counts_) selections_[i] += m;
      if (batches_ >= 2) {
        ++batch_present_[b][i];
        if (counts_) batch_selections_[b][i] += m;
      }
      if (track_pairs_) {
        for (std::size_t s = g_.offsets[i]; s < g_.offsets[i + 1]; ++s) {
          const int j = g_.adjacency[s];
          if (j > i && in_set[j]) ++pair_present_[g_.edge_id[s]];
        }
      }
    }
    if (batches_ >= 2) ++batch_len_[b];
    size_sum_ += size;
    ++t_;
  }

  InclusionFrequencies finish() const {
    InclusionFrequencies fr;
    fr.t_effective = t_;
    const double T = static_cast<double>(t_);
    fr.f.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) fr.f[i] = static_cast<double>(present_[i]) / T;
    if (counts_) {
      fr.g.resize(n_);
      for (std::size_t i = 0; i < n_; ++i) fr.g[i] = selections_[i] / T;
    }
    if (track_pairs_) {
      for (std::size_t k = 0; k < g_.edges.size(); ++k)
        fr.pairs.push_back({g_.edges[k].first, g_.edges[k].second, static_cast<double>(pair_present_[k]) / T});
    }
    if (batches_ >= 2) {
      fr.f_se = batch_se([&](std::size_t b, std::size_t i) { return static_cast<double>(batch_present_[b][i]); });
      if (counts_) fr.g_se = batch_se([&](std::size_t b, std::size_t i) { return batch_selections_[b][i]; });
    }
    fr.diagnostics.mean_size = size_sum_ / T;
    return fr;
  }

 private:
  template <class Sum>
  std::vector<double> batch_se(Sum sum) const {
    std::vector<double> se(n_, 0.0);
    const double B = static_cast<double>(batches_);
    for (std::size_t i = 0; i < n_; ++i) {
      double mean = 0.0;
      std::vector<double> m(batches_);
      for (std::size_t b = 0; b < batches_; ++b) {
        m[b] = batch_len_[b] ? sum(b, i) / static_cast<double>(batch_len_[b]) : 0.0;
        mean += m[b];
      }
      mean /= B;
      double ss = 0.0;
      for (double x : m) ss += (x - mean) * (x - mean);
      se[i] = std::sqrt(ss / (B * (B - 1.0)));
    }
    return se;
  }

  const SampleGraph& g_;
  std::size_t n_;
  std::size_t t_eff_;
  std::size_t batches_;
  bool track_pairs_;
  bool counts_;
  std::size_t t_ = 0;
  double size_sum_ = 0.0;
  std::vector<std::uint64_t> present_;
  std::vector<double> selections_;
  std::vector<std::uint64_t> pair_present_;
  std::vector<std::vector<std::uint64_t>> batch_present_;
  std::vector<std::vector<double>> batch_selections_;
  std::vector<std::size_t> batch_len_;
};

constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

// Without-replacement node set with the tracing and re-seeding step.
class SetChain {
 public:
  SetChain(const SampleGraph& g, Rng& rng) : g_(g), rng_(rng), in_set_(g.size(), 0), mark_(g.size(), 0) {}

  const std::vector<int>& members() const { return members_; }
  const std::vector<char>& in_set() const { return in_set_; }
  const std::vector<int>& added() const { return added_; }
  std::size_t size() const { return members_.size(); }

  void clear() {
    for (int i : members_) in_set_[i] = 0;
    members_.clear();
  }

  // Bernoulli(p) selection of every non-member; used for seeds and re-seeds.
  void bernoulli_fill(double p) {
    std::uint64_t skip = rng_.geometric_skip(p);
    const auto n = static_cast<std::uint64_t>(g_.size());
    for (std::uint64_t j = skip; skip != kNever && j < n;) {
      if (!in_set_[j] && !mark_[j]) {
        mark_[j] = 1;
        added_.push_back(static_cast<int>(j));
      }
      skip = rng_.geometric_skip(p);
      if (skip == kNever || skip >= n) break;
      j += 1 + skip;
    }
  }

  // Traces each link from a member to a non-member with probability trace_p,
  // then re-seeds; returns with the additions merged into the set.
  void grow(double trace_p, double reseed_p) {
    added_.clear();
    if (trace_p > 0.0) {
      for (int i : members_) {
        for (std::size_t s = g_.offsets[i]; s < g_.offsets[i + 1]; ++s) {
          const int j = g_.adjacency[s];
          if (!in_set_[j] && !mark_[j] && rng_.bernoulli(trace_p)) {
            mark_[j] = 1;
            added_.push_back(j);
          }
        }
      }
    }
    bernoulli_fill(reseed_p);
    merge_added();
  }

  void seed(double seed_p) {
    added_.clear();
    bernoulli_fill(seed_p);
    merge_added();
  }

  // Removes uniformly chosen nodes among the last additions until size == target.
  void truncate_added(std::size_t target) {
    if (members_.size() <= target) return;
    const auto surplus = members_.size() - target;
    for (std::size_t k = 0; k < surplus; ++k) {
      const auto pick = k + rng_.index(added_.size() - k);
      std::swap(added_[k], added_[pick]);
    }
    for (std::size_t k = 0; k < surplus; ++k) in_set_[added_[k]] = 0;
    std::erase_if(members_, [&](int i) { return !in_set_[i]; });
  }

  void thin(double q) {
    if (q <= 0.0) return;
    std::erase_if(members_, [&](int i) {
      if (rng_.bernoulli(q)) {
        in_set_[i] = 0;
        return true;
      }
      return false;
    });
  }

 private:
  void merge_added() {
    for (int j : added_) {
      mark_[j] = 0;
      in_set_[j] = 1;
      members_.push_back(j);
    }
  }

  const SampleGraph& g_;
  Rng& rng_;
  std::vector<char> in_set_;
  std::vector<char> mark_;
  std::vector<int> members_;
  std::vector<int> added_;
};

// Burn-in bookkeeping shared by the process modes.
class BurnIn {
 public:
  explicit BurnIn(const ResampleConfig& cfg)
      : cfg_(cfg), end_(cfg.burn_in_to_target ? kUnset : cfg.burn_in_extra) {}

  // Called after step t (1-based). Returns true once t is past the burn-in.
  bool counted(std::size_t t, std::size_t size) {
    if (end_ == kUnset && size >= cfg_.target_m) end_ = t + cfg_.burn_in_extra;
    return end_ != kUnset && t > end_;
  }
  bool just_ended(std::size_t t) const { return end_ != kUnset && t == end_ + 1; }
  std::size_t end() const { return end_; }
  std::size_t effective() const { return cfg_.iterations - end_; }
  void require_complete() const {
    if (end_ == kUnset || end_ >= cfg_.iterations)
      throw ConfigError("burn-in did not complete within " + std::to_string(cfg_.iterations) + " iterations");
  }

 private:
  static constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  const ResampleConfig& cfg_;
  std::size_t end_;
};

}  // namespace

InclusionFrequencies run_repeated(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate(g.size());
  Rng rng(rng_seed);
  SetChain chain(g, rng);
  Accumulator acc(g, cfg.iterations, cfg, false);
  const std::size_t cap = cfg.step_cap_factor * cfg.target_m;
  std::size_t stalled = 0;

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    chain.clear();
    chain.seed(cfg.seed_p);
    chain.truncate_added(cfg.target_m);
    for (std::size_t step = 0; chain.size() < cfg.target_m && step < cap; ++step) {
      chain.grow(cfg.trace_p, cfg.reseed_p);
      chain.truncate_added(cfg.target_m);
    }
    if (chain.size() < cfg.target_m) ++stalled;
    acc.record(chain.members(), chain.in_set(), nullptr);
  }
  auto fr = acc.finish();
  fr.diagnostics.stalled_resamples = stalled;
  return fr;
}

InclusionFrequencies run_process(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate(g.size());
  Rng rng(rng_seed);
  SetChain chain(g, rng);
  BurnIn burn(cfg);
  std::unique_ptr<Accumulator> acc;

  chain.seed(cfg.seed_p);
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    chain.grow(cfg.trace_p, cfg.reseed_p);
    chain.thin(rules::removal_probability(chain.size(), cfg.target_m));
    if (!burn.counted(t, chain.size())) continue;
    if (!acc) acc = std::make_unique<Accumulator>(g, burn.effective(), cfg, false);
    acc->record(chain.members(), chain.in_set(), nullptr);
  }
  burn.require_complete();
  auto fr = acc->finish();
  fr.burn_in = burn.end();
  return fr;
}

InclusionFrequencies run_process_wr(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed) {
  cfg.validate(g.size());
  if (cfg.track_pairs) throw ConfigError("pair frequencies need a without-replacement mode");
  Rng rng(rng_seed);
  const auto n = g.size();
  std::vector<std::uint32_t> count(n, 0), delta(n, 0);
  std::vector<char> present(n, 0);
  std::vector<int> occupied, touched;
  std::uint64_t total = 0;
  BurnIn burn(cfg);
  std::unique_ptr<Accumulator> acc;

  auto add = [&](int j, std::uint32_t k) {
    if (k == 0) return;
    if (delta[j] == 0) touched.push_back(j);
    delta[j] += k;
  };
  auto reseed_absent = [&](double p) {
    for (std::uint64_t j = rng.geometric_skip(p); j < n;) {
      if (count[j] == 0) add(static_cast<int>(j), 1);
      const auto skip = rng.geometric_skip(p);
      if (skip == kNever || skip >= n) break;
      j += 1 + skip;
    }
  };
  auto apply = [&] {
    for (int j : touched) {
      count[j] += delta[j];
      total += delta[j];
      delta[j] = 0;
    }
    touched.clear();
  };
  auto rebuild = [&] {
    occupied.clear();
    for (std::size_t i = 0; i < n; ++i) {
      present[i] = count[i] > 0;
      if (present[i]) occupied.push_back(static_cast<int>(i));
    }
  };

  reseed_absent(cfg.seed_p);
  apply();
  rebuild();
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    // Every copy of a member traces each of its links independently.
    for (int i : occupied)
      for (std::size_t s = g.offsets[i]; s < g.offsets[i + 1]; ++s)
        add(g.adjacency[s], static_cast<std::uint32_t>(rng.binomial(count[i], cfg.trace_p)));
    reseed_absent(cfg.reseed_p);
    apply();
    const double q = rules::removal_probability(total, cfg.target_m);
    if (q > 0.0) {
      for (std::size_t i = 0; i < n; ++i) {
        if (count[i] == 0) continue;
        const auto r = static_cast<std::uint32_t>(rng.binomial(count[i], q));
        count[i] -= r;
        total -= r;
      }
    }
    rebuild();
    if (!burn.counted(t, total)) continue;
    if (!acc) acc = std::make_unique<Accumulator>(g, burn.effective(), cfg, true);
    acc->record(occupied, present, &count);
  }
  burn.require_complete();
  auto fr = acc->finish();
  fr.burn_in = burn.end();
  return fr;
}

InclusionFrequencies resample(const SampleNetwork& s, const ResampleConfig& cfg, std::uint64_t rng_seed) {
  const SampleGraph g(s);
  switch (cfg.mode) {
    case ResampleMode::repeated: return run_repeated(g, cfg, rng_seed);
    case ResampleMode::process: return run_process(g, cfg, rng_seed);
    case ResampleMode::process_wr: return run_process_wr(g, cfg, rng_seed);
  }
  throw ConfigError("unknown resample mode");
}

InclusionFrequencies pair_frequencies(const SampleNetwork& s, ResampleConfig cfg, std::uint64_t rng_seed) {
  if (cfg.mode == ResampleMode::process_wr) throw ConfigError("pair frequencies need a without-replacement mode");
  cfg.track_pairs = true;
  return resample(s, cfg, rng_seed);
}

std::size_t apply_zero_frequency_guard(InclusionFrequencies& fr) {
  const double floor = 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(fr.t_effective, 1)));
  std::size_t changed = 0;
  for (std::size_t i = 0; i < fr.f.size(); ++i) {
    bool hit = false;
    if (fr.f[i] <= 0.0) {
      fr.f[i] = floor;
      hit = true;
    }
    if (!fr.g.empty() && fr.g[i] <= 0.0) {
      fr.g[i] = floor;
      hit = true;
    }
    changed += hit ? 1 : 0;
  }
  fr.diagnostics.zero_frequency += changed;
  return changed;
}

void write_frequencies(const InclusionFrequencies& fr, const SampleNetwork& s, const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "label,f";
  if (!fr.f_se.empty()) out << ",f_se";
  if (!fr.g.empty()) out << ",g";
  out << '\n';
  for (std::size_t i = 0; i < fr.f.size(); ++i) {
    out << s.labels[i] << ',' << csv::exact(fr.f[i]);
    if (!fr.f_se.empty()) out << ',' << csv::exact(fr.f_se[i]);
    if (!fr.g.empty()) out << ',' << csv::exact(fr.g[i]);
    out << '\n';
  }
}

void write_pair_frequencies(const InclusionFrequencies& fr, const SampleNetwork& s,
                            const std::filesystem::path& path) {
  auto out = csv::open_out(path);
  out << "a,b,f_ij\n";
  for (const auto& p : fr.pairs) out << s.labels[p.i] << ',' << s.labels[p.j] << ',' << csv::exact(p.f) << '\n';
}

InclusionFrequencies read_frequencies(const std::filesystem::path& path, const SampleNetwork& s,
                                      const std::filesystem::path& pairs_path) {
  std::unordered_map<std::string, int> local;
  for (std::size_t i = 0; i < s.size(); ++i) local.emplace(s.labels[i], static_cast<int>(i));
  auto member = [&](const std::string& label, const std::string& where) {
    const auto it = local.find(label);
    if (it == local.end()) throw DataError(where + ": '" + label + "' is not a sample member");
    return it->second;
  };

  InclusionFrequencies fr;
  fr.f.assign(s.size(), -1.0);
  auto in = csv::open_in(path);
  std::string line;
  std::vector<std::string> header;
  int g_col = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto fields = csv::split(line);
    if (header.empty()) {
      header = fields;
      if (header.size() < 2 || header[0] != "label" || header[1] != "f")
        throw DataError(path.string() + ": header must start with label,f");
      const auto it = std::find(header.begin(), header.end(), "g");
      if (it != header.end()) {
        g_col = static_cast<int>(it - header.begin());
        fr.g.assign(s.size(), -1.0);
      }
      continue;
    }
    const auto where = path.filename().string() + " line " + std::to_string(lineno);
    if (fields.size() != header.size()) throw DataError(where + ": wrong field count");
    const int i = member(fields[0], where);
    fr.f[i] = csv::parse_double(fields[1], where);
    if (g_col >= 0) fr.g[i] = csv::parse_double(fields[g_col], where);
  }
  for (std::size_t i = 0; i < s.size(); ++i)
    if (fr.f[i] < 0.0) throw DataError(path.string() + ": no frequency for member '" + s.labels[i] + "'");

  if (!pairs_path.empty()) {
    auto pin = csv::open_in(pairs_path);
    bool first = true;
    lineno = 0;
    while (std::getline(pin, line)) {
      ++lineno;
      if (csv::trim(line).empty()) continue;
      if (first) {
        first = false;
        continue;
      }
      const auto where = pairs_path.filename().string() + " line " + std::to_string(lineno);
      const auto f = csv::split(line);
      if (f.size() != 3) throw DataError(where + ": expected a,b,f_ij");
      const int a = member(f[0], where), b = member(f[1], where);
      fr.pairs.push_back({std::min(a, b), std::max(a, b), csv::parse_double(f[2], where)});
    }
  }
  return fr;
}

}  // namespace lts
