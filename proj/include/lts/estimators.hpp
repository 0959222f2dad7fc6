#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lts/resampler.hpp"

namespace lts {

enum class EstimatorId { adherent, brewer_pi, vh_current, sample_mean, adherent_wr, ratio };
enum class VarianceId { simple_n, simple_taylor, taylor_full, taylor_edges, taylor_diag, taylor_conservative, wr, ratio };

std::string to_string(EstimatorId id);
std::string to_string(VarianceId id);
EstimatorId parse_estimator_id(const std::string& s);
VarianceId parse_variance_id(const std::string& s);

struct EstimateResult {
  EstimatorId estimator = EstimatorId::adherent;
  VarianceId variance_id = VarianceId::simple_n;
  double point = 0.0;
  double variance = 0.0;
  double half_width = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double alpha = 0.05;
};

// Point estimators. Weights are inclusion probabilities or anything
// proportional to them; the scale cancels.

/// sum(y/w) / sum(1/w). With w = pi this is the generalized unequal
/// probability estimator; with w = f it is the design-adherent estimator.
double mu_f(std::span<const double> y, std::span<const double> w);

/// Same form with degrees as weights.
double vh_estimate(std::span<const double> y, std::span<const double> degree);

double sample_mean(std::span<const double> y);

// Variance estimators for mu_f.

/// Sample variance of the pseudo-values t_i = n (y_i/w_i) / sum(1/w) over n.
double var_simple_n(std::span<const double> y, std::span<const double> w, double point);

/// sum((y_i - point)^2 / w_i^2) / (sum 1/w)^2.
double var_simple_taylor(std::span<const double> y, std::span<const double> w, double point);

struct EdgeVariance {
  double value = 0.0;  // clamped at zero
  double raw = 0.0;
  bool clamped = false;
};

/// Linearization variance keeping the diagonal and the pairs joined by a
/// sample edge. `pairs` must cover every edge of `edges`.
EdgeVariance var_taylor_edges(std::span<const double> y, std::span<const double> f,
                              std::span<const std::pair<int, int>> edges,
                              std::span<const PairFrequency> pairs, double point);

/// Diagonal terms only: sum((1 - f_i)(y_i - point)^2 / f_i) / (sum 1/f)^2.
double var_taylor_diag(std::span<const double> y, std::span<const double> f, double point);

/// var_taylor_diag without the (1 - f_i) factors.
double var_taylor_conservative(std::span<const double> y, std::span<const double> f, double point);

/// With-replacement estimator: m are selection counts in the field sample,
/// g the mean selection counts from the with-replacement resampling.
double wr_estimate(std::span<const double> y, std::span<const double> m, std::span<const double> g);
double wr_variance(std::span<const double> y, std::span<const double> m, std::span<const double> g, double point);

double ratio_estimate(std::span<const double> y, std::span<const double> x, std::span<const double> f);
double ratio_variance(std::span<const double> y, std::span<const double> x, std::span<const double> f, double ratio);

/// Standard normal quantile.
double normal_quantile(double p);

struct Interval {
  double lo;
  double hi;
  double half_width;
};

/// point +/- z_{1-alpha/2} sqrt(variance).
Interval confidence_interval(double point, double variance, double alpha = 0.05);

EstimateResult make_result(EstimatorId est, VarianceId var, double point, double variance, double alpha = 0.05);

/// CSV header and row for EstimateResult:
/// variable,estimator_id,variance_id,point,variance,half_width,lo,hi
std::string estimate_csv_header();
std::string estimate_csv_row(const std::string& variable, const EstimateResult& r);

}  // namespace lts
