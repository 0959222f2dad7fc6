#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lts/estimators.hpp"
#include "lts/fieldsim.hpp"
#include "lts/netpop.hpp"
#include "lts/resampler.hpp"

namespace lts {

enum class DesignKind { rds, rds_plus, sb, sb_plus };

std::string to_string(DesignKind d);  // file-name form: rds, rds_plus, sb, sb_plus
std::string display_name(DesignKind d);  // RDS, RDS+, SB, SB+
DesignKind parse_design(const std::string& s);

enum class ParabolaWeights { unit, inverse_pq_squared };

struct StudyConfig {
  std::vector<DesignKind> designs{DesignKind::rds, DesignKind::rds_plus, DesignKind::sb, DesignKind::sb_plus};
  std::size_t replications = 1000;
  DesignConfig design;  // shared settings; coupon_max and plus_links come from the design kind
  int rds_coupons = 3;
  int sb_coupons = 15;
  ResampleConfig resample = ResampleConfig::defaults(ResampleMode::process);
  std::vector<std::string> variables;
  VarianceId adherent_variance = VarianceId::simple_n;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: OpenMP default. Never changes results.
  EstimatorId comparator = EstimatorId::vh_current;
  ParabolaWeights parabola_weights = ParabolaWeights::unit;

  DesignConfig design_for(DesignKind d) const;
  void validate() const;
};

/// Estimators computed for every replication, in table order.
inline constexpr EstimatorId kStudyEstimators[] = {EstimatorId::adherent, EstimatorId::vh_current,
                                                   EstimatorId::sample_mean};

struct MetricsRow {
  DesignKind design;
  std::string variable;
  EstimatorId estimator;
  bool binary = false;
  double actual = 0.0;
  double e_est = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double mse = 0.0;
  double eff = 0.0;    // mse(this) / mse(adherent)
  double rbias = 0.0;  // |bias(this)| / |bias(adherent)|
  double coverage = 0.0;
  double mean_half_width = 0.0;
  double mean_variance = 0.0;
};

struct ReplicationEstimate {
  DesignKind design;
  std::size_t replication;
  std::string variable;
  EstimateResult result;
  bool covered;
};

struct ReplicationDiagnostics {
  DesignKind design;
  std::size_t replication;
  std::uint64_t seed;
  std::size_t sample_size = 0;
  std::size_t seeds = 0;
  std::size_t plus_edges = 0;
  std::size_t zero_frequency = 0;
  std::size_t stalled_resamples = 0;
  std::size_t t_effective = 0;
  double mean_resample_size = 0.0;
};

struct ParabolaPoint {
  double p;
  double mse;
  bool original = true;
};

struct ParabolaFit {
  double a = 0.0;
  std::vector<ParabolaPoint> points;  // originals used in the fit
  std::vector<double> weights;
  double residual_sum = 0.0;  // weighted sum of squared residuals
};

struct DesignFit {
  DesignKind design;
  EstimatorId estimator;
  ParabolaFit fit;
};

struct StudyReport {
  std::size_t replications = 0;
  std::vector<MetricsRow> rows;  // ordered by design, estimator, variable
  std::vector<ReplicationEstimate> estimates;
  std::vector<ReplicationDiagnostics> diagnostics;
  std::vector<DesignFit> fits;

  const MetricsRow& row(DesignKind d, EstimatorId e, const std::string& variable) const;
};

/// Raised when a replication fails; carries what is needed to replay it.
class ReplicationError : public std::runtime_error {
 public:
  ReplicationError(DesignKind d, std::size_t rep, std::uint64_t seed, const std::string& cause);
  DesignKind design;
  std::size_t replication;
  std::uint64_t seed;
};

/// Seed for one replication; independent of which other designs are run.
std::uint64_t replication_seed(std::uint64_t master, DesignKind d, std::size_t rep);

StudyReport run_study(const PopulationGraph& graph, const AttributeTable& attrs, const StudyConfig& cfg);

/// Adds (1 - p, mse) for every binary row's (p, mse); originals keep
/// `original = true`. Throws std::invalid_argument for non-binary rows.
std::vector<ParabolaPoint> expand_complements(std::span<const MetricsRow> rows);
std::vector<ParabolaPoint> expand_complements(std::span<const ParabolaPoint> points);

std::vector<double> parabola_weights(std::span<const ParabolaPoint> points, ParabolaWeights scheme);

/// One-parameter weighted least squares for mse = a p (1 - p) over the
/// original points. Points with p in {0, 1} carry no information and are
/// skipped; throws std::invalid_argument if none remain.
ParabolaFit fit_parabola(std::span<const ParabolaPoint> points, std::span<const double> weights);

/// Writes <design>_metrics.csv, <design>_coverage.csv,
/// <design>_parabola_points.csv, parabola.csv and diagnostics.csv.
void emit_tables(const StudyReport& report, const std::filesystem::path& out_dir);

}  // namespace lts
