#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lts/fieldsim.hpp"
#include "lts/netpop.hpp"
#include "lts/resampler.hpp"
#include "lts/rng.hpp"

namespace lts {

inline constexpr std::size_t kMaxExactSampleSize = 12;

struct StationaryResult {
  std::size_t n = 0;
  std::vector<double> stationary;  // indexed by subset bitmask
  std::vector<double> marginals;   // phi_i
  std::vector<PairFrequency> pair_marginals;  // over the sample edges
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Raised when the resampling chain has no unique stationary distribution
/// (re-seeding disabled, or several closed classes). Carries the stationary
/// distribution of each closed class.
class ReducibleChainError : public std::runtime_error {
 public:
  struct ClosedClass {
    std::vector<std::uint32_t> states;
    std::vector<double> distribution;
  };
  ReducibleChainError(std::string what, std::vector<ClosedClass> classes)
      : std::runtime_error(std::move(what)), classes_(std::move(classes)) {}
  const std::vector<ClosedClass>& classes() const { return classes_; }

 private:
  std::vector<ClosedClass> classes_;
};

/// Dense one-step kernel of the without-replacement resampling process over
/// all 2^n subsets, stored column-major: P[to * 2^n + from].
std::vector<double> process_transition_matrix(const SampleGraph& g, const ResampleConfig& cfg, int threads = 0);

/// Exact stationary distribution of the process-mode chain (n <= 12) by power
/// iteration to an L1 residual below `tolerance`.
StationaryResult exact_process_stationary(const SampleGraph& g, const ResampleConfig& cfg,
                                          double tolerance = 1e-12, int threads = 0);
StationaryResult exact_process_stationary(const SampleNetwork& s, const ResampleConfig& cfg,
                                          double tolerance = 1e-12, int threads = 0);

/// Serial, straightforward re-implementation of the repeated-samples design,
/// kept as an independent check on run_repeated.
std::vector<double> reference_repeated_frequencies(const SampleGraph& g, const ResampleConfig& cfg,
                                                   std::uint64_t rng_seed);

struct FieldInclusion {
  std::vector<double> pi_hat;
  std::vector<double> se;  // binomial standard errors
  std::size_t replications = 0;
};

/// Monte Carlo first-stage inclusion probabilities from `replications`
/// independent surveys. Results do not depend on `threads`.
FieldInclusion mc_field_inclusion(const PopulationGraph& g, const DesignConfig& cfg, std::size_t replications,
                                  std::uint64_t rng_seed, int threads = 0,
                                  const std::vector<NodeId>& initial_seeds = {});

/// Serial loop over the same replication streams as mc_field_inclusion.
FieldInclusion mc_field_inclusion_serial(const PopulationGraph& g, const DesignConfig& cfg,
                                         std::size_t replications, std::uint64_t rng_seed,
                                         const std::vector<NodeId>& initial_seeds = {});

enum class DegreeModel { poisson, shifted_poisson, shifted_negbin, explicit_sequence };

struct DegreeSpec {
  DegreeModel model = DegreeModel::shifted_negbin;
  double mean = 8.0;
  double dispersion = 0.65;        // negative binomial size parameter
  std::vector<std::size_t> sequence;  // explicit_sequence only
};

struct AttributeSpec {
  std::string name;
  double prevalence = 0.0;
  double homophily = 0.0;  // probability of copying a labelled neighbor's value
};

struct SyntheticPopSpec {
  enum class Kind { configuration, two_component };
  Kind kind = Kind::configuration;
  std::size_t node_count = 2000;
  DegreeSpec degree;
  // two_component: sizes and mean degrees of components A and B. Adds a
  // "component" attribute that is 1 on A.
  std::size_t size_a = 1000, size_b = 1000;
  double mean_degree_a = 12.0, mean_degree_b = 4.0;
  std::vector<AttributeSpec> attributes;

  void validate() const;
};

struct GeneratedPopulation {
  PopulationGraph graph;
  AttributeTable attrs;
  std::size_t erased_self_loops = 0;
  std::size_t erased_multi_edges = 0;
  std::size_t isolated_nodes = 0;
};

GeneratedPopulation gen_population(const SyntheticPopSpec& spec, std::uint64_t rng_seed);

/// Configuration-model edges for `degrees`, with self-loops and multi-edges
/// erased. Throws ConfigError for odd degree sums or degrees >= node count.
std::vector<Edge> configuration_model(const std::vector<std::size_t>& degrees, Rng& rng, NodeId offset,
                                      std::size_t* self_loops, std::size_t* multi_edges);

}  // namespace lts
