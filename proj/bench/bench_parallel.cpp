// Serial reference vs OpenMP kernels: Monte Carlo field inclusion, exact
// transition-matrix assembly with power iteration, and the replication study.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "lts/harness.hpp"
#include "lts/oracle.hpp"

namespace {

double seconds(const std::function<void()>& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void line(const char* name, double serial, double parallel, int threads) {
  std::printf("%-28s serial %8.3fs  omp(%d) %8.3fs  speedup %.2fx\n", name, serial, threads, parallel,
              serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  using namespace lts;

  SyntheticPopSpec spec;
  spec.node_count = 2000;
  spec.attributes = {{"trait", 0.3, 0.5}};
  const auto pop = gen_population(spec, 7);

  DesignConfig d;
  d.target_n = 400;
  d.seed_fraction = 0.2;
  const std::size_t reps = 400;
  const double s_mc = seconds([&] { mc_field_inclusion_serial(pop.graph, d, reps, 11); });
  const double p_mc = seconds([&] { mc_field_inclusion(pop.graph, d, reps, 11, threads); });
  line("mc_field_inclusion", s_mc, p_mc, threads);

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < 11; ++i) edges.emplace_back(i, i + 1);
  const SampleGraph path(11, edges);
  auto rc = ResampleConfig::defaults(ResampleMode::process);
  rc.target_m = 4;
  const double s_ex = seconds([&] { exact_process_stationary(path, rc, 1e-12, 1); });
  const double p_ex = seconds([&] { exact_process_stationary(path, rc, 1e-12, threads); });
  line("exact_process_stationary", s_ex, p_ex, threads);

  StudyConfig sc;
  sc.designs = {DesignKind::rds};
  sc.replications = 40;
  sc.design = d;
  sc.resample.iterations = 2000;
  sc.resample.target_m = 133;
  sc.variables = {"degree", "deg2plus", "trait"};
  sc.threads = 1;
  const double s_st = seconds([&] { run_study(pop.graph, pop.attrs, sc); });
  sc.threads = threads;
  const double p_st = seconds([&] { run_study(pop.graph, pop.attrs, sc); });
  line("run_study", s_st, p_st, threads);
  return 0;
}
