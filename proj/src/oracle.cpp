#include "lts/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>
#include <set>

#include "lts/errors.hpp"
#include "lts/transition_rules.hpp"

namespace lts {

namespace {

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

std::vector<std::uint32_t> neighbor_masks(const SampleGraph& g) {
  std::vector<std::uint32_t> masks(g.size(), 0);
  for (auto [a, b] : g.edges) {
    masks[a] |= 1u << b;
    masks[b] |= 1u << a;
  }
  return masks;
}

// Row `from` of the kernel, written into `row` (size 2^n).
void transition_row(std::uint32_t from, std::size_t n, const std::vector<std::uint32_t>& nbr,
                    const ResampleConfig& cfg, std::vector<double>& row, std::vector<double>& grow_prob) {
  std::fill(row.begin(), row.end(), 0.0);

  std::vector<int> outside;
  std::vector<double> add;
  for (std::size_t j = 0; j < n; ++j) {
    if (from & (1u << j)) continue;
    outside.push_back(static_cast<int>(j));
    const auto links = static_cast<std::size_t>(std::popcount(nbr[j] & from));
    add.push_back(rules::addition_probability(links, cfg.trace_p, cfg.reseed_p));
  }

  // grow_prob[k] = probability that exactly the outside nodes in bitmask k
  // (over the `outside` list) are added.
  const std::size_t m = outside.size();
  grow_prob.assign(std::size_t{1} << m, 0.0);
  grow_prob[0] = 1.0;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t half = std::size_t{1} << k;
    for (std::size_t a = 0; a < half; ++a) {
      const double base = grow_prob[a];
      grow_prob[a] = base * (1.0 - add[k]);
      grow_prob[a | half] = base * add[k];
    }
  }

  // Probability of each grown set B.
  std::vector<std::pair<std::uint32_t, double>> grown;
  grown.reserve(grow_prob.size());
  for (std::size_t a = 0; a < grow_prob.size(); ++a) {
    if (grow_prob[a] == 0.0) continue;
    std::uint32_t b = from;
    for (std::size_t k = 0; k < m; ++k)
      if (a & (std::size_t{1} << k)) b |= 1u << outside[k];
    grown.emplace_back(b, grow_prob[a]);
  }

  for (auto [b, pb] : grown) {
    const auto size = static_cast<std::size_t>(std::popcount(b));
    const double q = rules::removal_probability(size, cfg.target_m);
    if (q == 0.0) {
      row[b] += pb;
      continue;
    }
    // Each member of B survives independently with probability 1 - q.
    std::vector<double> keep_weight(size + 1);
    for (std::size_t k = 0; k <= size; ++k)
      keep_weight[k] = std::pow(1.0 - q, static_cast<double>(k)) * std::pow(q, static_cast<double>(size - k));
    for (std::uint32_t f = b;; f = (f - 1) & b) {
      row[f] += pb * keep_weight[static_cast<std::size_t>(std::popcount(f))];
      if (f == 0) break;
    }
  }
}

// Column-major power iteration: next[to] = sum_from pi[from] P[to, from].
double power_step(const std::vector<double>& P, const std::vector<double>& pi, std::vector<double>& next,
                  std::size_t states, const std::vector<std::uint32_t>* subset, int threads) {
  const auto count = static_cast<std::int64_t>(subset ? subset->size() : states);
#pragma omp parallel for num_threads(threads) schedule(static)
  for (std::int64_t a = 0; a < count; ++a) {
    const std::size_t to = subset ? (*subset)[a] : static_cast<std::size_t>(a);
    const double* col = P.data() + to * states;
    double s = 0.0;
    if (subset) {
      for (auto from : *subset) s += pi[from] * col[from];
    } else {
      for (std::size_t from = 0; from < states; ++from) s += pi[from] * col[from];
    }
    next[to] = s;
  }
  double residual = 0.0;
  for (std::int64_t a = 0; a < count; ++a) {
    const std::size_t s = subset ? (*subset)[a] : static_cast<std::size_t>(a);
    residual += std::abs(next[s] - pi[s]);
  }
  return residual;
}

// Closed communicating classes of the support graph.
std::vector<std::vector<std::uint32_t>> closed_classes(const std::vector<double>& P, std::size_t states) {
  auto edge = [&](std::size_t from, std::size_t to) { return P[to * states + from] > 0.0; };
  // Kosaraju: order by finish time, then sweep the reverse graph.
  std::vector<char> seen(states, 0);
  std::vector<std::uint32_t> order;
  order.reserve(states);
  for (std::size_t root = 0; root < states; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      while (next < states && (seen[next] || !edge(v, next))) ++next;
      if (next == states) {
        order.push_back(static_cast<std::uint32_t>(v));
        stack.pop_back();
        continue;
      }
      const std::size_t w = next++;
      seen[w] = 1;
      stack.emplace_back(w, 0);
    }
  }
  std::vector<int> comp(states, -1);
  int ncomp = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] >= 0) continue;
    std::vector<std::size_t> stack{*it};
    comp[*it] = ncomp;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (std::size_t u = 0; u < states; ++u)
        if (comp[u] < 0 && edge(u, v)) {
          comp[u] = ncomp;
          stack.push_back(u);
        }
    }
    ++ncomp;
  }
  std::vector<char> leaks(ncomp, 0);
  for (std::size_t from = 0; from < states; ++from)
    for (std::size_t to = 0; to < states; ++to)
      if (comp[from] != comp[to] && edge(from, to)) leaks[comp[from]] = 1;
  std::vector<std::vector<std::uint32_t>> out;
  for (int c = 0; c < ncomp; ++c) {
    if (leaks[c]) continue;
    std::vector<std::uint32_t> members;
    for (std::size_t s = 0; s < states; ++s)
      if (comp[s] == c) members.push_back(static_cast<std::uint32_t>(s));
    out.push_back(std::move(members));
  }
  return out;
}

}  // namespace

std::vector<double> process_transition_matrix(const SampleGraph& g, const ResampleConfig& cfg, int threads) {
  const auto n = g.size();
  if (n > kMaxExactSampleSize)
    throw ConfigError("exact stationary analysis is limited to samples of at most " +
                      std::to_string(kMaxExactSampleSize) + " nodes");
  if (cfg.mode != ResampleMode::process) throw ConfigError("exact analysis covers process mode only");
  cfg.validate(n);
  const std::size_t states = std::size_t{1} << n;
  const auto nbr = neighbor_masks(g);
  std::vector<double> P(states * states, 0.0);
  const int nt = resolve_threads(threads);
#pragma omp parallel num_threads(nt)
  {
    std::vector<double> row(states), scratch;
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t from = 0; from < static_cast<std::int64_t>(states); ++from) {
      transition_row(static_cast<std::uint32_t>(from), n, nbr, cfg, row, scratch);
      for (std::size_t to = 0; to < states; ++to) P[to * states + static_cast<std::size_t>(from)] = row[to];
    }
  }
  return P;
}

StationaryResult exact_process_stationary(const SampleGraph& g, const ResampleConfig& cfg, double tolerance,
                                          int threads) {
  const auto n = g.size();
  const auto P = process_transition_matrix(g, cfg, threads);
  const std::size_t states = std::size_t{1} << n;
  const int nt = resolve_threads(threads);
  constexpr std::size_t kMaxIterations = 1'000'000;

  const auto classes = closed_classes(P, states);
  if (classes.size() != 1 || cfg.reseed_p == 0.0) {
    std::vector<ReducibleChainError::ClosedClass> out;
    for (const auto& c : classes) {
      // Lazy chain on the class: same stationary law, aperiodic.
      std::vector<double> pi(states, 0.0), next(states, 0.0);
      for (auto s : c) pi[s] = 1.0 / static_cast<double>(c.size());
      for (std::size_t it = 0; it < kMaxIterations; ++it) {
        power_step(P, pi, next, states, &c, nt);
        double r = 0.0;
        for (auto s : c) {
          const double lazy = 0.5 * (pi[s] + next[s]);
          r += std::abs(lazy - pi[s]);
          pi[s] = lazy;
        }
        if (r < tolerance) break;
      }
      ReducibleChainError::ClosedClass cc{c, {}};
      for (auto s : c) cc.distribution.push_back(pi[s]);
      out.push_back(std::move(cc));
    }
    throw ReducibleChainError(cfg.reseed_p == 0.0
                                  ? "re-seeding is disabled, so the chain is reducible"
                                  : "chain has " + std::to_string(classes.size()) + " closed classes",
                              std::move(out));
  }

  StationaryResult res;
  res.n = n;
  std::vector<double> pi(states, 1.0 / static_cast<double>(states)), next(states, 0.0);
  double residual = 1.0;
  std::size_t it = 0;
  while (residual >= tolerance && it < kMaxIterations) {
    residual = power_step(P, pi, next, states, nullptr, nt);
    pi.swap(next);
    ++it;
  }
  if (residual >= tolerance) throw InvariantViolation("power iteration did not converge");
  res.iterations = it;
  res.residual = residual;
  res.stationary = std::move(pi);

  res.marginals.assign(n, 0.0);
  for (std::size_t s = 0; s < states; ++s)
    for (std::size_t i = 0; i < n; ++i)
      if (s & (std::size_t{1} << i)) res.marginals[i] += res.stationary[s];
  for (auto [a, b] : g.edges) {
    const std::size_t both = (std::size_t{1} << a) | (std::size_t{1} << b);
    double p = 0.0;
    for (std::size_t s = 0; s < states; ++s)
      if ((s & both) == both) p += res.stationary[s];
    res.pair_marginals.push_back({a, b, p});
  }
  return res;
}

StationaryResult exact_process_stationary(const SampleNetwork& s, const ResampleConfig& cfg, double tolerance,
                                          int threads) {
  return exact_process_stationary(SampleGraph(s), cfg, tolerance, threads);
}

std::vector<double> reference_repeated_frequencies(const SampleGraph& g, const ResampleConfig& cfg,
                                                   std::uint64_t rng_seed) {
  cfg.validate(g.size());
  const auto n = g.size();
  Rng rng(rng_seed);
  std::vector<double> hits(n, 0.0);
  const std::size_t cap = cfg.step_cap_factor * cfg.target_m;

  auto truncate = [&](std::set<int>& s, std::vector<int>& fresh) {
    while (s.size() > cfg.target_m) {
      const auto k = rng.index(fresh.size());
      s.erase(fresh[k]);
      fresh.erase(fresh.begin() + static_cast<std::ptrdiff_t>(k));
    }
  };

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    std::set<int> s;
    std::vector<int> fresh;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(cfg.seed_p)) {
        s.insert(static_cast<int>(i));
        fresh.push_back(static_cast<int>(i));
      }
    truncate(s, fresh);
    for (std::size_t step = 0; s.size() < cfg.target_m && step < cap; ++step) {
      std::set<int> traced;
      for (int i : s)
        for (std::size_t k = g.offsets[i]; k < g.offsets[i + 1]; ++k) {
          const int j = g.adjacency[k];
          if (!s.contains(j) && rng.bernoulli(cfg.trace_p)) traced.insert(j);
        }
      for (std::size_t j = 0; j < n; ++j)
        if (!s.contains(static_cast<int>(j)) && rng.bernoulli(cfg.reseed_p)) traced.insert(static_cast<int>(j));
      fresh.assign(traced.begin(), traced.end());
      s.insert(traced.begin(), traced.end());
      truncate(s, fresh);
    }
    for (int i : s) hits[i] += 1.0;
  }
  for (auto& h : hits) h /= static_cast<double>(cfg.iterations);
  return hits;
}

FieldInclusion mc_field_inclusion(const PopulationGraph& g, const DesignConfig& cfg, std::size_t replications,
                                  std::uint64_t rng_seed, int threads, const std::vector<NodeId>& initial_seeds) {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  const auto N = g.node_count();
  const AttributeTable none(N, {});
  const int nt = resolve_threads(threads);
  std::vector<std::vector<std::uint64_t>> counts(nt, std::vector<std::uint64_t>(N, 0));
  std::exception_ptr failure;
#pragma omp parallel for num_threads(nt) schedule(dynamic, 8)
  for (std::int64_t r = 0; r < static_cast<std::int64_t>(replications); ++r) {
    try {
      const auto s = run_survey(g, none, cfg, derive_seed(rng_seed, static_cast<std::uint64_t>(r)), initial_seeds);
      auto& c = counts[omp_get_thread_num()];
      for (NodeId v : s.population_index) ++c[v];
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  FieldInclusion out;
  out.replications = replications;
  out.pi_hat.assign(N, 0.0);
  out.se.assign(N, 0.0);
  const double R = static_cast<double>(replications);
  for (std::size_t v = 0; v < N; ++v) {
    std::uint64_t total = 0;
    for (const auto& c : counts) total += c[v];
    const double p = static_cast<double>(total) / R;
    out.pi_hat[v] = p;
    out.se[v] = std::sqrt(p * (1.0 - p) / R);
  }
  return out;
}

FieldInclusion mc_field_inclusion_serial(const PopulationGraph& g, const DesignConfig& cfg,
                                         std::size_t replications, std::uint64_t rng_seed,
                                         const std::vector<NodeId>& initial_seeds) {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  const auto N = g.node_count();
  const AttributeTable none(N, {});
  std::vector<std::uint64_t> count(N, 0);
  for (std::size_t r = 0; r < replications; ++r) {
    const auto s = run_survey(g, none, cfg, derive_seed(rng_seed, r), initial_seeds);
    for (NodeId v : s.population_index) ++count[v];
  }
  FieldInclusion out;
  out.replications = replications;
  const double R = static_cast<double>(replications);
  for (std::size_t v = 0; v < N; ++v) {
    const double p = static_cast<double>(count[v]) / R;
    out.pi_hat.push_back(p);
    out.se.push_back(std::sqrt(p * (1.0 - p) / R));
  }
  return out;
}

void SyntheticPopSpec::validate() const {
  const auto n = kind == Kind::configuration ? node_count : size_a + size_b;
  if (n < 2) throw ConfigError("synthetic population needs at least 2 nodes");
  if (kind == Kind::configuration && degree.model != DegreeModel::explicit_sequence && !(degree.mean > 0.0))
    throw ConfigError("mean degree must be positive");
  if (kind == Kind::two_component && (size_a < 2 || size_b < 2 || !(mean_degree_a > 0) || !(mean_degree_b > 0)))
    throw ConfigError("two_component needs sizes >= 2 and positive mean degrees");
  if (degree.model == DegreeModel::shifted_negbin && !(degree.dispersion > 0.0))
    throw ConfigError("negative binomial dispersion must be positive");
  for (const auto& a : attributes) {
    if (a.name.empty()) throw ConfigError("attribute needs a name");
    if (!(a.prevalence >= 0.0 && a.prevalence <= 1.0)) throw ConfigError("prevalence must be in [0, 1]");
    if (!(a.homophily >= 0.0 && a.homophily <= 1.0)) throw ConfigError("homophily must be in [0, 1]");
  }
}

std::vector<Edge> configuration_model(const std::vector<std::size_t>& degrees, Rng& rng, NodeId offset,
                                      std::size_t* self_loops, std::size_t* multi_edges) {
  std::size_t total = 0;
  for (auto d : degrees) {
    if (d >= degrees.size()) throw ConfigError("degree " + std::to_string(d) + " is not realizable");
    total += d;
  }
  if (total % 2 != 0) throw ConfigError("degree sequence has an odd sum");
  std::vector<NodeId> stubs;
  stubs.reserve(total);
  for (std::size_t v = 0; v < degrees.size(); ++v)
    stubs.insert(stubs.end(), degrees[v], static_cast<NodeId>(v) + offset);
  for (std::size_t i = stubs.size(); i > 1; --i) std::swap(stubs[i - 1], stubs[rng.index(i)]);
  std::vector<Edge> edges;
  std::set<Edge> seen;
  for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
    const NodeId a = std::min(stubs[k], stubs[k + 1]), b = std::max(stubs[k], stubs[k + 1]);
    if (a == b) {
      if (self_loops) ++*self_loops;
      continue;
    }
    if (!seen.emplace(a, b).second) {
      if (multi_edges) ++*multi_edges;
      continue;
    }
    edges.emplace_back(a, b);
  }
  return edges;
}

namespace {

std::vector<std::size_t> sample_degrees(const DegreeSpec& spec, double mean, std::size_t n, Rng& rng) {
  if (spec.model == DegreeModel::explicit_sequence) {
    if (spec.sequence.size() != n) throw ConfigError("explicit degree sequence has the wrong length");
    return spec.sequence;
  }
  std::vector<std::size_t> d(n);
  auto& eng = rng.engine();
  for (auto& k : d) {
    switch (spec.model) {
      case DegreeModel::poisson: k = std::poisson_distribution<std::size_t>(mean)(eng); break;
      case DegreeModel::shifted_poisson:
        k = 1 + (mean > 1.0 ? std::poisson_distribution<std::size_t>(mean - 1.0)(eng) : 0);
        break;
      case DegreeModel::shifted_negbin: {
        const double lambda =
            mean > 1.0 ? std::gamma_distribution<double>(spec.dispersion, (mean - 1.0) / spec.dispersion)(eng) : 0.0;
        k = 1 + (lambda > 0.0 ? std::poisson_distribution<std::size_t>(lambda)(eng) : 0);
        break;
      }
      case DegreeModel::explicit_sequence: break;
    }
    k = std::min(k, n - 1);
  }
  // Sampled sequences are made even by bumping one node.
  const auto total = std::accumulate(d.begin(), d.end(), std::size_t{0});
  if (total % 2 != 0) {
    auto& k = d[rng.index(n)];
    k = k + 1 < n ? k + 1 : k - 1;
  }
  return d;
}

}  // namespace

GeneratedPopulation gen_population(const SyntheticPopSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  Rng rng(rng_seed);
  GeneratedPopulation out;
  std::vector<Edge> edges;
  std::size_t N = 0;
  std::vector<double> component;

  if (spec.kind == SyntheticPopSpec::Kind::configuration) {
    N = spec.node_count;
    const auto d = sample_degrees(spec.degree, spec.degree.mean, N, rng);
    edges = configuration_model(d, rng, 0, &out.erased_self_loops, &out.erased_multi_edges);
  } else {
    N = spec.size_a + spec.size_b;
    const auto da = sample_degrees(spec.degree, spec.mean_degree_a, spec.size_a, rng);
    const auto db = sample_degrees(spec.degree, spec.mean_degree_b, spec.size_b, rng);
    edges = configuration_model(da, rng, 0, &out.erased_self_loops, &out.erased_multi_edges);
    auto eb = configuration_model(db, rng, static_cast<NodeId>(spec.size_a), &out.erased_self_loops,
                                  &out.erased_multi_edges);
    edges.insert(edges.end(), eb.begin(), eb.end());
    component.assign(N, 0.0);
    std::fill(component.begin(), component.begin() + static_cast<std::ptrdiff_t>(spec.size_a), 1.0);
  }

  std::vector<std::string> labels(N);
  for (std::size_t v = 0; v < N; ++v) labels[v] = std::to_string(v + 1);
  out.graph = PopulationGraph(std::move(labels), edges);
  for (std::size_t v = 0; v < N; ++v) out.isolated_nodes += out.graph.degree(static_cast<NodeId>(v)) == 0 ? 1 : 0;

  out.attrs = AttributeTable(N, {});
  if (!component.empty()) out.attrs.add_column("component", component);

  std::vector<NodeId> order(N);
  std::iota(order.begin(), order.end(), 0);
  for (const auto& a : spec.attributes) {
    for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    std::vector<double> value(N, 0.0);
    std::vector<char> labelled(N, 0);
    std::vector<NodeId> known;
    for (NodeId v : order) {
      known.clear();
      for (NodeId u : out.graph.neighbors(v))
        if (labelled[u]) known.push_back(u);
      const bool copy = !known.empty() && rng.bernoulli(a.homophily);
      value[v] = copy ? value[known[rng.index(known.size())]] : (rng.bernoulli(a.prevalence) ? 1.0 : 0.0);
      labelled[v] = 1;
    }
    out.attrs.add_column(a.name, std::move(value));
  }
  return out;
}

}  // namespace lts
