#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lts/netpop.hpp"

namespace lts {

/// First-stage link-tracing design. Defaults are the RDS settings with
/// n = 1200 and 240 seeds.
struct DesignConfig {
  std::size_t target_n = 1200;
  double seed_fraction = 0.20;
  int coupon_max = 3;
  int coupon_expiry_days = 28;
  // Per-coupon daily redemption probability. Not a published parameter:
  // 0.10 gives ~95% redemption within 28 days.
  double redeem_prob = 0.10;
  bool plus_links = false;
  // Fresh seeds added per stalled day, as a fraction of target_n (rounded up).
  double reseed_fraction = 0.01;

  void validate() const;
  std::size_t initial_seed_count() const;
};

/// Sample produced by a field survey. All indices are local (0..n-1) unless
/// named `population`.
struct SampleNetwork {
  std::vector<std::string> labels;
  std::vector<NodeId> population_index;  // empty when read back from files
  std::vector<int> recruiter;            // -1 for seeds
  std::vector<int> recruit_day;
  std::vector<double> degree;            // reported degree d_i
  std::vector<std::pair<int, int>> plus_edges;  // (lo, hi), disjoint from recruitment edges
  std::vector<std::string> y_names;
  std::vector<std::vector<double>> y;    // y[k][i]

  std::size_t size() const { return labels.size(); }
  bool is_seed(int i) const { return recruiter[i] < 0; }
  std::size_t seed_count() const;

  /// Recruiter -> recruit pairs.
  std::vector<std::pair<int, int>> recruitment_edges() const;

  /// Undirected traceable edge set E_s as (lo, hi): symmetrized recruitment
  /// edges plus plus_edges, sorted and deduplicated.
  std::vector<std::pair<int, int>> traceable_edges() const;

  /// Values of a stored attribute column or of "degree"/"deg2plus".
  std::vector<double> values(std::string_view name) const;
};

/// Throws InvariantViolation if the recruitment structure is not a forest,
/// any recruiter exceeds `coupon_max`, members repeat, or (when `graph` is
/// given) an edge is not a population link.
void check_sample(const SampleNetwork& s, int coupon_max, const PopulationGraph* graph = nullptr);

/// Simulates one day-stepped coupon survey. Seeds are drawn uniformly from
/// nodes with degree >= 1 unless `initial_seeds` is non-empty.
SampleNetwork run_survey(const PopulationGraph& graph, const AttributeTable& attrs,
                         const DesignConfig& cfg, std::uint64_t rng_seed,
                         std::span<const NodeId> initial_seeds = {});

/// Reveals every population link between members that is not a recruitment
/// edge. Idempotent.
SampleNetwork augment_plus(SampleNetwork sample, const PopulationGraph& graph);

/// members.csv (label,seed,degree[,y...]), recruitment.csv
/// (recruiter,recruit,day) and plus.csv (a,b) in `dir`.
void write_sample(const SampleNetwork& s, const std::filesystem::path& dir);
SampleNetwork read_sample(const std::filesystem::path& dir);

}  // namespace lts
