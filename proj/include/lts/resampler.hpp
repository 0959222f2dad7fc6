#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lts/fieldsim.hpp"

namespace lts {

enum class ResampleMode { repeated, process, process_wr };

std::string to_string(ResampleMode m);
ResampleMode parse_resample_mode(const std::string& s);

struct ResampleConfig {
  ResampleMode mode = ResampleMode::process;
  std::size_t iterations = 10000;  // T, including burn-in for process modes
  std::size_t target_m = 400;
  double trace_p = 0.5;
  double seed_p = 0.0;
  double reseed_p = 0.01;
  // Process modes: burn-in ends burn_in_extra iterations after the set first
  // reaches target_m (or after burn_in_extra iterations when disabled).
  bool burn_in_to_target = true;
  std::size_t burn_in_extra = 100;
  // Repeated mode: growth steps allowed per resample, as a multiple of target_m.
  std::size_t step_cap_factor = 10;
  bool track_pairs = false;
  // >= 2 enables batch-means standard errors for f.
  std::size_t batches = 0;

  /// Defaults per mode: repeated uses p_s = 0.0167, p = 0.05, p_r = 0.001;
  /// the process modes use no initial seeds, p_r = 0.01 and p = 0.5.
  static ResampleConfig defaults(ResampleMode mode);

  void validate(std::size_t sample_size) const;
};

struct PairFrequency {
  int i;
  int j;
  double f;
};

struct ResampleDiagnostics {
  std::size_t stalled_resamples = 0;  // repeated mode: stopped below target_m
  std::size_t zero_frequency = 0;     // members guarded by apply_zero_frequency_guard
  double mean_size = 0.0;             // mean resample size over counted iterations
};

struct InclusionFrequencies {
  std::vector<double> f;
  std::vector<double> f_se;  // batch-means standard errors; empty unless batches >= 2
  std::vector<double> g;     // with-replacement mean selection counts
  std::vector<double> g_se;
  std::vector<PairFrequency> pairs;  // over E_s when track_pairs
  std::size_t t_effective = 0;
  std::size_t burn_in = 0;
  ResampleDiagnostics diagnostics;
};

/// Local CSR adjacency over the traceable edge set of a sample.
struct SampleGraph {
  std::vector<std::size_t> offsets;
  std::vector<int> adjacency;
  std::vector<int> edge_id;  // index into `edges` for each adjacency slot
  std::vector<std::pair<int, int>> edges;

  explicit SampleGraph(const SampleNetwork& s);
  SampleGraph(std::size_t n, std::vector<std::pair<int, int>> edges);
  std::size_t size() const { return offsets.size() - 1; }
};

InclusionFrequencies run_repeated(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed);
InclusionFrequencies run_process(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed);
InclusionFrequencies run_process_wr(const SampleGraph& g, const ResampleConfig& cfg, std::uint64_t rng_seed);

/// Dispatches on cfg.mode.
InclusionFrequencies resample(const SampleNetwork& s, const ResampleConfig& cfg, std::uint64_t rng_seed);

/// As `resample` with pair tracking forced on (without-replacement modes).
InclusionFrequencies pair_frequencies(const SampleNetwork& s, ResampleConfig cfg, std::uint64_t rng_seed);

/// Replaces f_i = 0 by 1 / (2 T_effective) (and likewise g_i = 0) and records
/// the count in diagnostics. Returns the number of members changed.
std::size_t apply_zero_frequency_guard(InclusionFrequencies& fr);

/// label,f[,f_se][,g] and, when pairs exist, a separate a,b,f_ij file.
void write_frequencies(const InclusionFrequencies& fr, const SampleNetwork& s,
                       const std::filesystem::path& path);
void write_pair_frequencies(const InclusionFrequencies& fr, const SampleNetwork& s,
                            const std::filesystem::path& path);
/// Reads a frequency CSV and aligns it to the sample's member order.
InclusionFrequencies read_frequencies(const std::filesystem::path& path, const SampleNetwork& s,
                                      const std::filesystem::path& pairs_path = {});

}  // namespace lts
