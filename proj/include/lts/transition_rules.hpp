#pragma once

#include <cmath>
#include <cstddef>

// Rules of one step of the resampling process, shared by the simulator in
// resampler.cpp and the exact transition-matrix assembly in oracle.cpp.
// The simulator realizes them with per-link and per-node Bernoulli draws;
// the oracle evaluates them in closed form.
namespace lts::rules {

/// Removal probability applied to every member after additions, chosen so
/// the expected post-removal size equals the target.
inline double removal_probability(std::size_t size, std::size_t target) {
  return size > target ? static_cast<double>(size - target) / static_cast<double>(size) : 0.0;
}

/// Probability that a node outside the current set joins it in one step when
/// `traced_links` current members link to it: any link traced, or re-seeded.
inline double addition_probability(std::size_t traced_links, double trace_p, double reseed_p) {
  return 1.0 - std::pow(1.0 - trace_p, static_cast<double>(traced_links)) * (1.0 - reseed_p);
}

}  // namespace lts::rules
