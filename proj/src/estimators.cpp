#include "lts/estimators.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <map>
#include <stdexcept>

#include "lts/csv.hpp"
#include "lts/errors.hpp"

namespace lts {

namespace {

void same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("estimator inputs differ in length");
  if (a.empty()) throw std::invalid_argument("estimator inputs are empty");
}

void positive(std::span<const double> w, const char* what) {
  for (double x : w)
    if (!(x > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

double inverse_sum(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += 1.0 / x;
  return s;
}

}  // namespace

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::adherent: return "adherent";
    case EstimatorId::brewer_pi: return "brewer_pi";
    case EstimatorId::vh_current: return "vh_current";
    case EstimatorId::sample_mean: return "sample_mean";
    case EstimatorId::adherent_wr: return "adherent_wr";
    case EstimatorId::ratio: return "ratio";
  }
  return "?";
}

std::string to_string(VarianceId id) {
  switch (id) {
    case VarianceId::simple_n: return "simple_n";
    case VarianceId::simple_taylor: return "simple_taylor";
    case VarianceId::taylor_full: return "taylor_full";
    case VarianceId::taylor_edges: return "taylor_edges";
    case VarianceId::taylor_diag: return "taylor_diag";
    case VarianceId::taylor_conservative: return "taylor_conservative";
    case VarianceId::wr: return "wr";
    case VarianceId::ratio: return "ratio";
  }
  return "?";
}

EstimatorId parse_estimator_id(const std::string& s) {
  for (auto id : {EstimatorId::adherent, EstimatorId::brewer_pi, EstimatorId::vh_current, EstimatorId::sample_mean,
                  EstimatorId::adherent_wr, EstimatorId::ratio})
    if (to_string(id) == s) return id;
  throw ConfigError("unknown estimator '" + s + "'");
}

VarianceId parse_variance_id(const std::string& s) {
  for (auto id : {VarianceId::simple_n, VarianceId::simple_taylor, VarianceId::taylor_edges, VarianceId::taylor_diag,
                  VarianceId::taylor_conservative, VarianceId::wr, VarianceId::ratio})
    if (to_string(id) == s) return id;
  if (s == "taylor_full") throw ConfigError("taylor_full (all-pairs) variance is not supported; use taylor_edges");
  throw ConfigError("unknown variance estimator '" + s + "'");
}

double mu_f(std::span<const double> y, std::span<const double> w) {
  same_length(y, w);
  positive(w, "inclusion weights");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += y[i] / w[i];
    den += 1.0 / w[i];
  }
  return num / den;
}

double vh_estimate(std::span<const double> y, std::span<const double> degree) {
  same_length(y, degree);
  for (double d : degree)
    if (!(d >= 1.0)) throw std::domain_error("degree must be >= 1 for the degree-weighted estimator");
  return mu_f(y, degree);
}

double sample_mean(std::span<const double> y) {
  if (y.empty()) throw std::invalid_argument("sample_mean of empty input");
  double s = 0.0;
  for (double v : y) s += v;
  return s / static_cast<double>(y.size());
}

double var_simple_n(std::span<const double> y, std::span<const double> w, double point) {
  same_length(y, w);
  positive(w, "inclusion weights");
  const auto n = static_cast<double>(y.size());
  if (y.size() < 2) throw std::invalid_argument("var_simple_n needs n >= 2");
  const double inv = inverse_sum(w);
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double t = n * (y[i] / w[i]) / inv;
    ss += (t - point) * (t - point);
  }
  return ss / (n * (n - 1.0));
}

double var_simple_taylor(std::span<const double> y, std::span<const double> w, double point) {
  same_length(y, w);
  positive(w, "inclusion weights");
  const double inv = inverse_sum(w);
  double ss = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = (y[i] - point) / w[i];
    ss += r * r;
  }
  return ss / (inv * inv);
}

EdgeVariance var_taylor_edges(std::span<const double> y, std::span<const double> f,
                              std::span<const std::pair<int, int>> edges,
                              std::span<const PairFrequency> pairs, double point) {
  same_length(y, f);
  positive(f, "inclusion frequencies");
  std::map<std::pair<int, int>, double> joint;
  for (const auto& p : pairs) joint[{std::min(p.i, p.j), std::max(p.i, p.j)}] = p.f;

  const double inv = inverse_sum(f);
  double diag = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) diag += (1.0 - f[i]) * (y[i] - point) * (y[i] - point) / f[i];

  // Each undirected sample edge appears twice in the double sum, as (i,j) and (j,i).
  double cross = 0.0;
  for (auto [a, b] : edges) {
    const auto it = joint.find({std::min(a, b), std::max(a, b)});
    if (it == joint.end())
      throw std::invalid_argument("missing joint frequency for sample edge " + std::to_string(a) + "-" +
                                  std::to_string(b));
    const double fij = it->second;
    if (!(fij > 0.0)) throw std::domain_error("joint frequency must be positive");
    const double delta = (fij - f[a] * f[b]) / fij;
    cross += 2.0 * delta * ((y[a] - point) / f[a]) * ((y[b] - point) / f[b]);
  }
  EdgeVariance out;
  out.raw = (diag + cross) / (inv * inv);
  out.clamped = out.raw < 0.0;
  out.value = std::max(out.raw, 0.0);
  return out;
}

double var_taylor_diag(std::span<const double> y, std::span<const double> f, double point) {
  same_length(y, f);
  positive(f, "inclusion frequencies");
  const double inv = inverse_sum(f);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (1.0 - f[i]) * (y[i] - point) * (y[i] - point) / f[i];
  return std::max(s, 0.0) / (inv * inv);
}

double var_taylor_conservative(std::span<const double> y, std::span<const double> f, double point) {
  same_length(y, f);
  positive(f, "inclusion frequencies");
  const double inv = inverse_sum(f);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - point) * (y[i] - point) / f[i];
  return s / (inv * inv);
}

double wr_estimate(std::span<const double> y, std::span<const double> m, std::span<const double> g) {
  same_length(y, m);
  same_length(y, g);
  positive(g, "mean selection counts");
  for (double x : m)
    if (!(x >= 1.0)) throw std::domain_error("selection counts must be >= 1");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += m[i] * y[i] / g[i];
    den += m[i] / g[i];
  }
  return num / den;
}

double wr_variance(std::span<const double> y, std::span<const double> m, std::span<const double> g, double point) {
  same_length(y, m);
  same_length(y, g);
  positive(g, "mean selection counts");
  double den = 0.0, s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    den += m[i] / g[i];
    s += m[i] * (y[i] - point) * (y[i] - point) / (g[i] * g[i]);
  }
  return s / (den * den);
}

double ratio_estimate(std::span<const double> y, std::span<const double> x, std::span<const double> f) {
  same_length(y, x);
  same_length(y, f);
  positive(f, "inclusion frequencies");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    num += y[i] / f[i];
    den += x[i] / f[i];
  }
  if (den == 0.0) throw std::domain_error("ratio denominator sum(x/f) is zero");
  return num / den;
}

double ratio_variance(std::span<const double> y, std::span<const double> x, std::span<const double> f, double ratio) {
  same_length(y, x);
  same_length(y, f);
  positive(f, "inclusion frequencies");
  double den = 0.0, s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    den += x[i] / f[i];
    const double r = (y[i] - x[i] * ratio) / f[i];
    s += r * r;
  }
  if (den == 0.0) throw std::domain_error("ratio denominator sum(x/f) is zero");
  return s / (den * den);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal quantile needs p in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

Interval confidence_interval(double point, double variance, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in (0, 1)");
  if (!(variance >= 0.0)) throw std::domain_error("variance must be >= 0");
  const double hw = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(variance);
  return {point - hw, point + hw, hw};
}

EstimateResult make_result(EstimatorId est, VarianceId var, double point, double variance, double alpha) {
  const auto ci = confidence_interval(point, variance, alpha);
  return {est, var, point, variance, ci.half_width, ci.lo, ci.hi, alpha};
}

std::string estimate_csv_header() { return "variable,estimator_id,variance_id,point,variance,half_width,lo,hi"; }

std::string estimate_csv_row(const std::string& variable, const EstimateResult& r) {
  return variable + ',' + to_string(r.estimator) + ',' + to_string(r.variance_id) + ',' + csv::exact(r.point) + ',' +
         csv::exact(r.variance) + ',' + csv::exact(r.half_width) + ',' + csv::exact(r.lo) + ',' + csv::exact(r.hi);
}

}  // namespace lts
