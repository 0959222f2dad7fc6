#include "lts/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>

#include "lts/csv.hpp"
#include "lts/errors.hpp"
#include "lts/rng.hpp"

namespace lts {

std::string to_string(DesignKind d) {
  switch (d) {
    case DesignKind::rds: return "rds";
    case DesignKind::rds_plus: return "rds_plus";
    case DesignKind::sb: return "sb";
    case DesignKind::sb_plus: return "sb_plus";
  }
  return "?";
}

std::string display_name(DesignKind d) {
  switch (d) {
    case DesignKind::rds: return "RDS";
    case DesignKind::rds_plus: return "RDS+";
    case DesignKind::sb: return "SB";
    case DesignKind::sb_plus: return "SB+";
  }
  return "?";
}

DesignKind parse_design(const std::string& s) {
  for (auto d : {DesignKind::rds, DesignKind::rds_plus, DesignKind::sb, DesignKind::sb_plus})
    if (s == to_string(d) || s == display_name(d)) return d;
  if (s == "RDS_PLUS" || s == "rds+") return DesignKind::rds_plus;
  if (s == "SB_PLUS" || s == "sb+") return DesignKind::sb_plus;
  throw ConfigError("unknown design '" + s + "'");
}

DesignConfig StudyConfig::design_for(DesignKind d) const {
  DesignConfig c = design;
  c.coupon_max = (d == DesignKind::rds || d == DesignKind::rds_plus) ? rds_coupons : sb_coupons;
  c.plus_links = d == DesignKind::rds_plus || d == DesignKind::sb_plus;
  return c;
}

void StudyConfig::validate() const {
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (variables.empty()) throw ConfigError("at least one variable is required");
  if (designs.empty()) throw ConfigError("at least one design is required");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must be in (0, 1)");
  if (adherent_variance == VarianceId::wr || adherent_variance == VarianceId::ratio ||
      adherent_variance == VarianceId::taylor_full)
    throw ConfigError("variance '" + to_string(adherent_variance) + "' does not apply to the adherent mean");
  if (comparator != EstimatorId::vh_current && comparator != EstimatorId::sample_mean)
    throw ConfigError("comparator must be vh_current or sample_mean");
  for (auto d : designs) design_for(d).validate();
}

const MetricsRow& StudyReport::row(DesignKind d, EstimatorId e, const std::string& variable) const {
  for (const auto& r : rows)
    if (r.design == d && r.estimator == e && r.variable == variable) return r;
  throw std::out_of_range("no metrics row for " + to_string(d) + "/" + to_string(e) + "/" + variable);
}

ReplicationError::ReplicationError(DesignKind d, std::size_t rep, std::uint64_t s, const std::string& cause)
    : std::runtime_error("replication " + std::to_string(rep) + " of design " + display_name(d) + " (seed " +
                         std::to_string(s) + ") failed: " + cause),
      design(d), replication(rep), seed(s) {}

std::uint64_t replication_seed(std::uint64_t master, DesignKind d, std::size_t rep) {
  return derive_seed(master, 1 + static_cast<std::uint64_t>(d), rep);
}

namespace {

struct ReplicationOutput {
  ReplicationDiagnostics diag;
  std::vector<EstimateResult> results;  // [variable][estimator]
};

ReplicationOutput run_replication(const PopulationGraph& graph, const AttributeTable& attrs, const StudyConfig& cfg,
                                  DesignKind d, std::size_t rep) {
  const auto seed = replication_seed(cfg.seed, d, rep);
  const auto dcfg = cfg.design_for(d);
  auto sample = run_survey(graph, attrs, dcfg, derive_seed(seed, 1));
  if (dcfg.plus_links) sample = augment_plus(std::move(sample), graph);

  auto rcfg = cfg.resample;
  if (cfg.adherent_variance == VarianceId::taylor_edges) rcfg.track_pairs = true;
  auto fr = resample(sample, rcfg, derive_seed(seed, 2));
  apply_zero_frequency_guard(fr);

  ReplicationOutput out;
  out.diag = {d,
              rep,
              seed,
              sample.size(),
              sample.seed_count(),
              sample.plus_edges.size(),
              fr.diagnostics.zero_frequency,
              fr.diagnostics.stalled_resamples,
              fr.t_effective,
              fr.diagnostics.mean_size};

  const std::vector<double> ones(sample.size(), 1.0);
  const auto edges = sample.traceable_edges();
  for (const auto& var : cfg.variables) {
    const auto y = sample.values(var);
    for (auto est : kStudyEstimators) {
      double point = 0.0, variance = 0.0;
      VarianceId vid = VarianceId::simple_n;
      switch (est) {
        case EstimatorId::adherent: {
          point = mu_f(y, fr.f);
          vid = cfg.adherent_variance;
          switch (vid) {
            case VarianceId::simple_n: variance = var_simple_n(y, fr.f, point); break;
            case VarianceId::simple_taylor: variance = var_simple_taylor(y, fr.f, point); break;
            case VarianceId::taylor_diag: variance = var_taylor_diag(y, fr.f, point); break;
            case VarianceId::taylor_conservative: variance = var_taylor_conservative(y, fr.f, point); break;
            case VarianceId::taylor_edges: {
              // Pair frequencies of zero cannot enter the estimator; guard like f.
              auto pairs = fr.pairs;
              for (auto& p : pairs) p.f = std::max(p.f, 1.0 / (2.0 * static_cast<double>(fr.t_effective)));
              variance = var_taylor_edges(y, fr.f, edges, pairs, point).value;
              break;
            }
            default: throw ConfigError("unsupported adherent variance");
          }
          break;
        }
        case EstimatorId::vh_current:
          point = vh_estimate(y, sample.degree);
          variance = var_simple_n(y, sample.degree, point);
          break;
        case EstimatorId::sample_mean:
          point = sample_mean(y);
          variance = var_simple_n(y, ones, point);
          break;
        default: break;
      }
      out.results.push_back(make_result(est, vid, point, variance, cfg.alpha));
    }
  }
  return out;
}

}  // namespace

StudyReport run_study(const PopulationGraph& graph, const AttributeTable& attrs, const StudyConfig& cfg) {
  cfg.validate();
  const auto R = cfg.replications;
  const auto D = cfg.designs.size();
  const auto V = cfg.variables.size();
  constexpr std::size_t E = std::size(kStudyEstimators);

  std::vector<double> actual(V);
  std::vector<char> binary(V);
  for (std::size_t v = 0; v < V; ++v) {
    const auto values = variable_values(graph, attrs, cfg.variables[v]);
    actual[v] = mean(values);
    binary[v] = std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0 || x == 1.0; });
  }

  std::vector<ReplicationOutput> outputs(D * R);
  std::exception_ptr failure;
  std::size_t failed_job = outputs.size();
  const int nt = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for num_threads(nt) schedule(dynamic, 1)
  for (std::int64_t job = 0; job < static_cast<std::int64_t>(D * R); ++job) {
    const auto d = cfg.designs[static_cast<std::size_t>(job) / R];
    const auto rep = static_cast<std::size_t>(job) % R;
    try {
      outputs[job] = run_replication(graph, attrs, cfg, d, rep);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        // Report the lowest failing job so the error does not depend on scheduling.
        if (static_cast<std::size_t>(job) < failed_job) {
          failed_job = static_cast<std::size_t>(job);
          failure = std::make_exception_ptr(ReplicationError(d, rep, replication_seed(cfg.seed, d, rep), e.what()));
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);

  StudyReport report;
  report.replications = R;
  const double Rd = static_cast<double>(R);
  for (std::size_t di = 0; di < D; ++di) {
    const auto d = cfg.designs[di];
    for (std::size_t r = 0; r < R; ++r) report.diagnostics.push_back(outputs[di * R + r].diag);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t v = 0; v < V; ++v)
        for (std::size_t e = 0; e < E; ++e) {
          const auto& res = outputs[di * R + r].results[v * E + e];
          report.estimates.push_back({d, r, cfg.variables[v], res, res.lo <= actual[v] && actual[v] <= res.hi});
        }

    const auto first_row = report.rows.size();
    for (std::size_t e = 0; e < E; ++e) {
      for (std::size_t v = 0; v < V; ++v) {
        MetricsRow row{d, cfg.variables[v], kStudyEstimators[e]};
        row.binary = binary[v];
        row.actual = actual[v];
        double sum = 0.0, sq_err = 0.0, covered = 0.0, hw = 0.0, var = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          const auto& res = outputs[di * R + r].results[v * E + e];
          sum += res.point;
          sq_err += (res.point - actual[v]) * (res.point - actual[v]);
          covered += (res.lo <= actual[v] && actual[v] <= res.hi) ? 1.0 : 0.0;
          hw += res.half_width;
          var += res.variance;
        }
        row.e_est = sum / Rd;
        row.bias = row.e_est - actual[v];
        row.mse = sq_err / Rd;
        double ss = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
          const double x = outputs[di * R + r].results[v * E + e].point - row.e_est;
          ss += x * x;
        }
        row.sd = R > 1 ? std::sqrt(ss / (Rd - 1.0)) : 0.0;
        row.coverage = covered / Rd;
        row.mean_half_width = hw / Rd;
        row.mean_variance = var / Rd;
        report.rows.push_back(row);
      }
    }
    // Adherent rows come first for each design.
    for (std::size_t k = first_row; k < report.rows.size(); ++k) {
      auto& row = report.rows[k];
      const auto& base = report.rows[first_row + (k - first_row) % V];
      if (row.estimator == EstimatorId::adherent) {
        row.eff = row.rbias = 1.0;
      } else {
        row.eff = row.mse / base.mse;
        row.rbias = std::abs(row.bias) / std::abs(base.bias);
      }
    }

    for (auto est : kStudyEstimators) {
      std::vector<ParabolaPoint> pts;
      for (std::size_t k = first_row; k < report.rows.size(); ++k) {
        const auto& row = report.rows[k];
        if (row.estimator == est && row.binary && row.actual > 0.0 && row.actual < 1.0)
          pts.push_back({row.actual, row.mse, true});
      }
      if (pts.empty()) continue;
      report.fits.push_back({d, est, fit_parabola(pts, parabola_weights(pts, cfg.parabola_weights))});
    }
  }
  return report;
}

std::vector<ParabolaPoint> expand_complements(std::span<const ParabolaPoint> points) {
  std::vector<ParabolaPoint> out(points.begin(), points.end());
  for (const auto& p : points) {
    if (!(p.p >= 0.0 && p.p <= 1.0)) throw std::invalid_argument("proportion outside [0, 1]");
    out.push_back({1.0 - p.p, p.mse, false});
  }
  return out;
}

std::vector<ParabolaPoint> expand_complements(std::span<const MetricsRow> rows) {
  std::vector<ParabolaPoint> pts;
  for (const auto& r : rows) {
    if (!r.binary) throw std::invalid_argument("complement of non-binary variable '" + r.variable + "'");
    pts.push_back({r.actual, r.mse, true});
  }
  return expand_complements(std::span<const ParabolaPoint>(pts));
}

std::vector<double> parabola_weights(std::span<const ParabolaPoint> points, ParabolaWeights scheme) {
  std::vector<double> w;
  for (const auto& p : points) {
    const double pq = p.p * (1.0 - p.p);
    w.push_back(scheme == ParabolaWeights::unit || pq == 0.0 ? 1.0 : 1.0 / (pq * pq));
  }
  return w;
}

ParabolaFit fit_parabola(std::span<const ParabolaPoint> points, std::span<const double> weights) {
  if (points.size() != weights.size()) throw std::invalid_argument("one weight per point is required");
  ParabolaFit fit;
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& pt = points[k];
    const double x = pt.p * (1.0 - pt.p);
    if (!pt.original || x == 0.0) continue;
    if (!(weights[k] >= 0.0)) throw std::invalid_argument("weights must be non-negative");
    num += weights[k] * pt.mse * x;
    den += weights[k] * x * x;
    fit.points.push_back(pt);
    fit.weights.push_back(weights[k]);
  }
  if (fit.points.empty() || den == 0.0)
    throw std::invalid_argument("parabola fit needs a weighted point with p strictly inside (0, 1)");
  fit.a = num / den;
  for (std::size_t k = 0; k < fit.points.size(); ++k) {
    const auto& pt = fit.points[k];
    const double r = pt.mse - fit.a * pt.p * (1.0 - pt.p);
    fit.residual_sum += fit.weights[k] * r * r;
  }
  return fit;
}

void emit_tables(const StudyReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir.string());

  std::vector<DesignKind> designs;
  for (const auto& d : report.diagnostics)
    if (std::find(designs.begin(), designs.end(), d.design) == designs.end()) designs.push_back(d.design);

  for (auto d : designs) {
    auto metrics = csv::open_out(out_dir / (to_string(d) + "_metrics.csv"));
    metrics << "estimator,name,actual,E.est,bias,sd,mse,eff,rbias\n";
    auto coverage = csv::open_out(out_dir / (to_string(d) + "_coverage.csv"));
    coverage << "name,actual,halfwidth,coverage\n";
    auto points = csv::open_out(out_dir / (to_string(d) + "_parabola_points.csv"));
    points << "name,p,mse,original\n";
    for (const auto& r : report.rows) {
      if (r.design != d) continue;
      metrics << to_string(r.estimator) << ',' << r.variable << ',' << csv::fixed(r.actual, 6) << ','
              << csv::fixed(r.e_est, 6) << ',' << csv::fixed(r.bias, 6) << ',' << csv::fixed(r.sd, 6) << ','
              << csv::fixed(r.mse, 6) << ',' << csv::fixed(r.eff, 6) << ',' << csv::fixed(r.rbias, 6) << '\n';
      if (r.estimator != EstimatorId::adherent) continue;
      coverage << r.variable << ',' << csv::fixed(r.actual, 2) << ',' << csv::fixed(r.mean_half_width, 2) << ','
               << csv::fixed(r.coverage, 2) << '\n';
      if (r.binary) {
        const MetricsRow one[] = {r};
        for (const auto& pt : expand_complements(std::span<const MetricsRow>(one)))
          points << r.variable << ',' << csv::fixed(pt.p, 6) << ',' << csv::fixed(pt.mse, 6) << ','
                 << (pt.original ? 1 : 0) << '\n';
      }
    }
  }

  auto fits = csv::open_out(out_dir / "parabola.csv");
  fits << "design,estimator,a,points,residual\n";
  for (const auto& f : report.fits)
    fits << to_string(f.design) << ',' << to_string(f.estimator) << ',' << csv::fixed(f.fit.a, 6) << ','
         << f.fit.points.size() << ',' << csv::fixed(f.fit.residual_sum, 12) << '\n';

  auto diag = csv::open_out(out_dir / "diagnostics.csv");
  diag << "design,replication,seed,sample_size,seeds,plus_edges,zero_frequency,stalled_resamples,t_effective,"
          "mean_resample_size\n";
  for (const auto& d : report.diagnostics)
    diag << to_string(d.design) << ',' << d.replication << ',' << d.seed << ',' << d.sample_size << ',' << d.seeds
         << ',' << d.plus_edges << ',' << d.zero_frequency << ',' << d.stalled_resamples << ',' << d.t_effective
         << ',' << csv::exact(d.mean_resample_size) << '\n';
}

}  // namespace lts
