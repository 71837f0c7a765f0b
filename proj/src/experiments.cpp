#include "anchorbox/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "anchorbox/oracle.hpp"

namespace anchorbox {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

json box_json(const Box& b) {
  return json{{"lower", b.lower}, {"upper", b.upper}};
}

double ball_coverage(const Point& center, double radius,
                     const std::vector<Point>& rows,
                     const std::vector<int>& assignments, int cluster) {
  std::size_t total = 0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (assignments[i] != cluster) continue;
    ++total;
    double dist_sq = 0.0;
    for (std::size_t d = 0; d < center.size(); ++d) {
      const double delta = rows[i][d] - center[d];
      dist_sq += delta * delta;
    }
    inside += dist_sq <= radius * radius;
  }
  return total > 0 ? static_cast<double>(inside) / total : 0.0;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::anchor: return "anchor";
    case Method::greedy: return "greedy";
    case Method::radial: return "radial";
  }
  return "?";
}

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const std::size_t n_threads =
      std::min<std::size_t>(std::max(jobs, 1), count);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::exception_ptr> errors(n_threads);
  std::vector<std::thread> workers;
  workers.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    workers.emplace_back([&, t]() {
      try {
        while (!failed.load(std::memory_order_relaxed)) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count) break;
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return out;
}

// --- Shared per-anchor comparison -------------------------------------------

namespace {

struct CaseContext {
  Box bbox;
  ModelPtr f;
  SurrogateFamily family = SurrogateFamily::linear;
  double tolerance = 0.10;
  // Coverage inputs; null outside the cluster bench.
  const std::vector<Point>* rows = nullptr;
  const std::vector<int>* assignments = nullptr;
  int anchor_cluster = -1;
};

AnchorCase run_case(const CaseContext& ctx, std::size_t anchor_index,
                    const Point& anchor, const std::vector<Method>& methods,
                    const ExperimentParams& params, const Rng& case_rng) {
  AnchorCase out;
  out.anchor_index = anchor_index;

  SurrogateFit fit;
  try {
    fit = fit_surrogate(ctx.f, anchor, ctx.family,
                        FaithSpec{FaithSpec::Kind::classification, 0.1,
                                  ctx.tolerance},
                        case_rng.derive("fit"));
  } catch (const std::exception& e) {
    out.error = e.what();
    return out;
  }
  out.ok = true;
  out.sigma = fit.sigma;

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    const Method m = methods[mi];
    MethodOutcome o;
    o.method = m;
    try {
      auto oracle = std::make_shared<ClassificationFaithfulness>(
          probs_fn(ctx.f), probs_fn(fit.surrogate), ctx.tolerance);
      AnchorParams ap = params.anchor;
      ap.seed = case_rng.derive("seed", mi).next_u64();
      AnchorRun run(make_search_space(ctx.bbox, anchor), oracle, ap);

      // Post-hoc purity audit of the region, never counted in evals.
      auto audit = [&](const std::function<Point(Rng&)>& sampler) {
        const std::int64_t n = params.anchor.audit_samples;
        if (n <= 0) return -1.0;
        Rng audit_rng = case_rng.derive("audit", mi);
        std::int64_t faithful = 0;
        for (std::int64_t s = 0; s < n; ++s) {
          faithful += oracle->evaluate(sampler(audit_rng));
        }
        return static_cast<double>(faithful) / static_cast<double>(n);
      };
      auto box_sampler = [](const Box& b) {
        return [b](Rng& g) {
          Point x(b.dim());
          for (std::size_t d = 0; d < b.dim(); ++d) {
            x[d] = g.uniform(b.lower[d], b.upper[d]);
          }
          return x;
        };
      };

      if (m == Method::anchor) {
        const GuaranteeReport report = run.run_to_report();
        o.vol_log10 = report.log10_volume;
        o.evals = report.evals;
        o.certified = true;
        o.purity_fraction = report.purity_audit.fraction;
        o.region = box_json(report.box);
        if (ctx.assignments) {
          o.coverage = cluster_coverage(report.box, *ctx.rows,
                                        *ctx.assignments, ctx.anchor_cluster);
        }
      } else if (m == Method::greedy) {
        const GreedyResult g = fit_greedy_anchor(run);
        o.vol_log10 = g.log10_volume;
        o.evals = g.evals;
        o.certified = g.certified;
        o.region = box_json(g.box);
        o.purity_fraction = audit(box_sampler(g.box));
        if (ctx.assignments) {
          o.coverage = cluster_coverage(g.box, *ctx.rows, *ctx.assignments,
                                        ctx.anchor_cluster);
        }
      } else {
        const RadialResult r = fit_radial(run);
        o.vol_log10 = r.log10_volume;
        o.evals = r.evals;
        o.certified = r.certified;
        o.region = json{{"center", r.region.center},
                        {"radius", r.region.radius}};
        if (r.certified) {
          o.purity_fraction = audit([&](Rng& g) {
            return sample_in_ball(r.region.center, r.region.radius, g);
          });
        }
        if (ctx.assignments) {
          o.coverage =
              ball_coverage(r.region.center, r.region.radius, *ctx.rows,
                            *ctx.assignments, ctx.anchor_cluster);
        }
      }
      o.delta_spent = run.scheduler().delta_spent();
      o.tests_issued = run.scheduler().tests_issued();
      o.ok = true;
    } catch (const std::exception& e) {
      o.error = e.what();
    }
    out.methods.push_back(std::move(o));
  }
  return out;
}

json case_record(const std::string& experiment, const AnchorCase& c,
                 std::size_t dim) {
  json rec{{"experiment", experiment},
           {"anchor_index", c.anchor_index},
           {"ok", c.ok},
           {"dim", dim},
           {"sigma", c.sigma}};
  if (!c.ok) rec["error"] = c.error;
  json methods = json::array();
  for (const MethodOutcome& o : c.methods) {
    json mo{{"method", method_name(o.method)},
            {"ok", o.ok},
            {"vol_log10", o.vol_log10},
            {"evals", o.evals},
            {"certified", o.certified},
            {"delta_spent", o.delta_spent},
            {"tests_issued", o.tests_issued},
            {"region", o.region}};
    if (o.coverage >= 0.0) mo["coverage"] = o.coverage;
    if (o.purity_fraction >= 0.0) mo["purity_fraction"] = o.purity_fraction;
    if (!o.ok) mo["error"] = o.error;
    methods.push_back(std::move(mo));
  }
  rec["methods"] = std::move(methods);
  return rec;
}

std::string comparison_csv(const std::vector<AnchorCase>& cases,
                           bool with_coverage) {
  std::vector<Method> seen;
  for (const AnchorCase& c : cases) {
    for (const MethodOutcome& o : c.methods) {
      if (std::find(seen.begin(), seen.end(), o.method) == seen.end()) {
        seen.push_back(o.method);
      }
    }
  }
  std::string out = with_coverage
                        ? "method,n,coverage_mean,coverage_std,evals_mean,"
                          "evals_std\n"
                        : "method,n,vol_log10_mean,vol_log10_std,evals_mean,"
                          "evals_std\n";
  for (const Method m : seen) {
    std::vector<double> primary;
    std::vector<double> evals;
    for (const AnchorCase& c : cases) {
      for (const MethodOutcome& o : c.methods) {
        if (o.method != m || !o.ok) continue;
        primary.push_back(with_coverage ? o.coverage : o.vol_log10);
        evals.push_back(static_cast<double>(o.evals));
      }
    }
    const MeanStd p = mean_std(primary);
    const MeanStd e = mean_std(evals);
    out += method_name(m) + "," + std::to_string(primary.size()) + "," +
           fmt(p.mean) + "," + fmt(p.std) + "," + fmt(e.mean) + "," +
           fmt(e.std) + "\n";
  }
  return out;
}

}  // namespace

// --- Volume bench ------------------------------------------------------------

std::vector<json> VolumeBenchResult::records() const {
  std::vector<json> out;
  for (const AnchorCase& c : cases) {
    out.push_back(case_record("volume_bench", c, 0));
  }
  return out;
}

std::string VolumeBenchResult::table_csv() const {
  return comparison_csv(cases, /*with_coverage=*/false);
}

VolumeBenchResult run_volume_bench(const Dataset& data,
                                   const std::vector<Method>& methods,
                                   const ExperimentParams& params) {
  const Rng root(params.anchor.seed);
  Rng split_rng = root.derive("split");
  const auto [train, test] = split_train_test(data, 0.2, split_rng);

  Rng train_rng = root.derive("train");
  CaseContext ctx;
  ctx.f = train_forest(train.rows, train.labels, data.n_classes, train_rng);
  ctx.bbox = data_bounding_box(data);
  ctx.family = params.surrogate;
  ctx.tolerance = params.faith_tolerance;

  const std::size_t n_cases = std::min<std::size_t>(params.n_anchors,
                                                    test.size());
  VolumeBenchResult result;
  result.cases.resize(n_cases);
  parallel_for(n_cases, params.jobs, [&](std::size_t i) {
    result.cases[i] =
        run_case(ctx, i, test.rows[i], methods, params, root.derive("case", i));
  });
  return result;
}

// --- Cluster bench -----------------------------------------------------------

std::vector<json> ClusterBenchResult::records() const {
  std::vector<json> out;
  for (const AnchorCase& c : cases) {
    out.push_back(case_record("cluster_bench", c, dim));
  }
  return out;
}

std::string ClusterBenchResult::table_csv() const {
  return comparison_csv(cases, /*with_coverage=*/true);
}

ClusterBenchResult run_cluster_bench(std::size_t dim,
                                     const std::vector<Method>& methods,
                                     const ExperimentParams& params) {
  const Rng root(params.anchor.seed);
  Rng data_rng = root.derive("data");
  const ClusterData cd = generate_clusters(ClusterSpec{}, dim, data_rng);

  Rng train_rng = root.derive("train");
  CaseContext ctx;
  ctx.f = train_forest(cd.dataset.rows, cd.dataset.labels,
                       cd.dataset.n_classes, train_rng);
  ctx.bbox = data_bounding_box(cd.dataset);
  ctx.family = params.surrogate;
  ctx.tolerance = params.faith_tolerance;
  ctx.rows = &cd.dataset.rows;
  ctx.assignments = &cd.assignments;

  std::vector<std::size_t> order(cd.dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng anchor_rng = root.derive("anchors");
  shuffle(order, anchor_rng);
  const std::size_t n_cases =
      std::min<std::size_t>(params.n_anchors, order.size());

  ClusterBenchResult result;
  result.dim = dim;
  result.cases.resize(n_cases);
  parallel_for(n_cases, params.jobs, [&](std::size_t i) {
    const std::size_t row = order[i];
    CaseContext local = ctx;
    local.anchor_cluster = cd.assignments[row];
    result.cases[i] = run_case(local, row, cd.dataset.rows[row], methods,
                               params, root.derive("case", i));
  });

  if (dim == 2) {
    for (const AnchorCase& c : result.cases) {
      if (!c.ok) continue;
      json regions = json::object();
      for (const MethodOutcome& o : c.methods) {
        if (o.ok) regions[method_name(o.method)] = o.region;
      }
      result.plot = json{{"points", cd.dataset.rows},
                         {"assignments", cd.assignments},
                         {"anchor_index", c.anchor_index},
                         {"anchor_cluster", cd.assignments[c.anchor_index]},
                         {"anchor", cd.dataset.rows[c.anchor_index]},
                         {"regions", std::move(regions)}};
      break;
    }
  }
  return result;
}

// --- Honesty -----------------------------------------------------------------

std::vector<json> HonestyResult::records() const {
  std::vector<json> out;
  for (const HonestyRow& r : rows) {
    out.push_back(json{{"experiment", "honesty"},
                       {"feature_k", feature_k},
                       {"anchor_index", r.anchor_index},
                       {"width_honest", r.width_honest},
                       {"width_dishonest", r.width_dishonest},
                       {"evals_honest", r.evals_honest},
                       {"evals_dishonest", r.evals_dishonest},
                       {"delta_spent_honest", r.delta_spent_honest},
                       {"delta_spent_dishonest", r.delta_spent_dishonest}});
  }
  return out;
}

std::string HonestyResult::table_csv() const {
  std::string out =
      "anchor_index,width_honest,width_dishonest,evals_honest,"
      "evals_dishonest\n";
  for (const HonestyRow& r : rows) {
    out += std::to_string(r.anchor_index) + "," + fmt(r.width_honest) + "," +
           fmt(r.width_dishonest) + "," + std::to_string(r.evals_honest) +
           "," + std::to_string(r.evals_dishonest) + "\n";
  }
  return out;
}

HonestyResult run_honesty(const Dataset& data,
                          std::optional<std::size_t> feature_k,
                          const ExperimentParams& params) {
  if (data.n_classes != 2) {
    throw std::invalid_argument("the honesty comparison needs a binary task");
  }
  const Rng root(params.anchor.seed);

  HonestyResult result;
  if (feature_k) {
    result.feature_k = *feature_k;
  } else {
    // Feature with the largest absolute weight of a whole-dataset logistic
    // model; for two softmax rows the effective weight is their difference.
    const ModelPtr logit = train_logistic(data.rows, data.labels, 2);
    const auto& lm = dynamic_cast<const LinearModel&>(*logit);
    std::size_t best = 0;
    double best_w = -1.0;
    for (std::size_t d = 0; d < data.dim(); ++d) {
      const double w = std::abs(lm.weights()[1][d] - lm.weights()[0][d]);
      if (w > best_w) {
        best_w = w;
        best = d;
      }
    }
    result.feature_k = best;
  }
  const std::size_t k = result.feature_k;
  if (k >= data.dim()) throw std::invalid_argument("feature index out of range");

  Rng split_rng = root.derive("split");
  const auto [train, test] = split_train_test(data, 0.2, split_rng);
  Rng train_rng = root.derive("train");
  const ModelPtr f =
      train_forest(train.rows, train.labels, data.n_classes, train_rng);
  const Box bbox = data_bounding_box(data);
  const double width_k = bbox.width(k);

  struct Candidate {
    std::size_t index;
    Point anchor;
    ModelPtr g;
  };
  std::vector<Candidate> candidates;
  for (std::size_t ti = 0;
       ti < test.size() && candidates.size() < params.n_anchors; ++ti) {
    const Point& a = test.rows[ti];
    const std::vector<double> fa = f->probs(a);
    if (*std::max_element(fa.begin(), fa.end()) > 0.80) continue;

    SurrogateFit fit;
    try {
      fit = fit_surrogate(f, a, SurrogateFamily::linear,
                          FaithSpec{FaithSpec::Kind::classification, 0.1,
                                    params.faith_tolerance},
                          root.derive("fit", ti));
    } catch (const std::exception&) {
      continue;
    }
    const ModelPtr g = mask_feature(fit.surrogate, k, a[k]);
    if (classification_faithful(fa, g->probs(a), params.faith_tolerance) !=
        1) {
      continue;  // the runs below need e(anchor) = 1
    }

    // The masked surrogate must be demonstrably unfaithful to the unmasked
    // model somewhere within 30% of the bounding width along k.
    bool unfaithful = false;
    for (int s = 0; s < 100 && !unfaithful; ++s) {
      const double offset = width_k * 0.3 * (2.0 * s / 99.0 - 1.0);
      Point x = a;
      x[k] = std::clamp(a[k] + offset, bbox.lower[k], bbox.upper[k]);
      unfaithful = classification_faithful(f->probs(x), g->probs(x),
                                           params.faith_tolerance) == 0;
    }
    if (!unfaithful) continue;

    candidates.push_back(Candidate{ti, a, g});
  }
  if (candidates.empty()) {
    throw std::runtime_error(
        "no anchors passed the honesty filters; relax the confidence "
        "threshold or use a dataset with more boundary points");
  }

  result.rows.resize(candidates.size());
  parallel_for(candidates.size(), params.jobs, [&](std::size_t i) {
    const Candidate& cand = candidates[i];
    HonestyRow row;
    row.anchor_index = cand.index;

    const ModelPtr f_honest = mask_feature(f, k, cand.anchor[k]);
    {
      auto oracle = std::make_shared<ClassificationFaithfulness>(
          probs_fn(f_honest), probs_fn(cand.g), params.faith_tolerance);
      AnchorParams ap = params.anchor;
      ap.seed = root.derive("honest", i).next_u64();
      AnchorRun run(make_search_space(bbox, cand.anchor), oracle, ap);
      const Box box = run.find_anchor(FeatureSet::full(data.dim()), bbox);
      row.width_honest = box.width(k);
      row.evals_honest = oracle->eval_count();
      row.delta_spent_honest = run.scheduler().delta_spent();
    }
    {
      auto oracle = std::make_shared<ClassificationFaithfulness>(
          probs_fn(f), probs_fn(cand.g), params.faith_tolerance);
      AnchorParams ap = params.anchor;
      ap.seed = root.derive("dishonest", i).next_u64();
      AnchorRun run(make_search_space(bbox, cand.anchor), oracle, ap);
      const Box box = run.find_anchor(FeatureSet::full(data.dim()), bbox);
      row.width_dishonest = box.width(k);
      row.evals_dishonest = oracle->eval_count();
      row.delta_spent_dishonest = run.scheduler().delta_spent();
    }
    result.rows[i] = row;
  });
  return result;
}

// --- Hyperparameter sweep ------------------------------------------------------

std::vector<json> SweepResult::records() const {
  std::vector<json> out;
  for (const SweepCell& c : cells) {
    out.push_back(json{{"experiment", "hyperparam_sweep"},
                       {"dim", dim},
                       {"n_positives", c.n_positives},
                       {"node_budget", c.node_budget},
                       {"timeout", c.timeout},
                       {"vols", c.vols},
                       {"evals", c.evals},
                       {"wall_seconds", c.wall_seconds},
                       {"analytic_opt_log10", analytic_opt_log10}});
  }
  return out;
}

std::string SweepResult::table_csv() const {
  std::string out =
      "N,T,vol_log10_mean,vol_log10_std,evals_mean,wall_mean_sec,status\n";
  for (const SweepCell& c : cells) {
    const MeanStd v = mean_std(c.vols);
    const MeanStd e = mean_std(c.evals);
    const MeanStd w = mean_std(c.wall_seconds);
    out += std::to_string(c.n_positives) + "," +
           std::to_string(c.node_budget) + "," + fmt(v.mean) + "," +
           fmt(v.std) + "," + fmt(e.mean) + "," + fmt(w.mean) + "," +
           (c.timeout ? "Timeout" : "ok") + "\n";
  }
  return out;
}

SweepResult run_hyperparam_sweep(std::size_t dim,
                                 const std::vector<std::int64_t>& n_grid,
                                 const std::vector<std::int64_t>& t_grid,
                                 const ExperimentParams& params,
                                 double timeout_seconds_per_cell) {
  const Rng root(params.anchor.seed);
  SweepResult result;
  result.dim = dim;
  result.analytic_opt_log10 = static_cast<double>(dim) / 2.0;

  const Box space{Point(dim, -5.0), Point(dim, 5.0)};
  const Point origin(dim, 0.0);

  std::size_t cell_index = 0;
  for (const std::int64_t t : t_grid) {
    for (const std::int64_t n : n_grid) {
      SweepCell cell;
      cell.n_positives = n;
      cell.node_budget = t;

      const Rng cell_rng = root.derive("cell", cell_index++);
      const auto deadline =
          std::chrono::steady_clock::now() +
          std::chrono::duration<double>(timeout_seconds_per_cell);

      std::vector<double> vols(params.n_anchors,
                               std::numeric_limits<double>::quiet_NaN());
      std::vector<double> evals(params.n_anchors, -1.0);
      std::vector<double> wall(params.n_anchors, -1.0);
      std::atomic<bool> timed_out{false};
      parallel_for(params.n_anchors, params.jobs, [&](std::size_t j) {
        if (std::chrono::steady_clock::now() > deadline) {
          timed_out.store(true);
          return;
        }
        auto oracle = std::make_shared<HalfL1BallOracle>(dim);
        AnchorParams ap = params.anchor;
        ap.n_positives = n;
        ap.node_budget = t;
        ap.seed = cell_rng.derive("run", j).next_u64();
        const auto start = std::chrono::steady_clock::now();
        AnchorRun run(make_search_space(space, origin), oracle, ap);
        const GuaranteeReport report = run.run_to_report();
        const std::chrono::duration<double> elapsed =
            std::chrono::steady_clock::now() - start;
        vols[j] = report.log10_volume;
        evals[j] = static_cast<double>(report.evals);
        wall[j] = elapsed.count();
      });
      for (std::size_t j = 0; j < params.n_anchors; ++j) {
        if (wall[j] >= 0.0) {
          cell.vols.push_back(vols[j]);
          cell.evals.push_back(evals[j]);
          cell.wall_seconds.push_back(wall[j]);
        }
      }
      cell.timeout = timed_out.load();
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// --- Expansion ablation ---------------------------------------------------------

std::vector<json> AblationResult::records() const {
  std::vector<json> out;
  for (const AblationPair& p : pairs) {
    json rec{{"experiment", "expansion_ablation"},
             {"kind", kind == AblationKind::half_l1 ? "half_l1" : "clusters"},
             {"dim", dim},
             {"run_index", p.run_index},
             {"ok", p.ok},
             {"vol_largest", p.vol_largest},
             {"vol_random", p.vol_random},
             {"evals_largest", p.evals_largest},
             {"evals_random", p.evals_random}};
    if (!p.ok) rec["error"] = p.error;
    if (p.coverage_largest >= 0.0) {
      rec["coverage_largest"] = p.coverage_largest;
      rec["coverage_random"] = p.coverage_random;
    }
    if (p.purity_largest >= 0.0) {
      rec["purity_largest"] = p.purity_largest;
      rec["purity_random"] = p.purity_random;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string AblationResult::table_csv() const {
  std::vector<double> vl, vr, cl, cr;
  for (const AblationPair& p : pairs) {
    if (!p.ok) continue;
    vl.push_back(p.vol_largest);
    vr.push_back(p.vol_random);
    if (p.coverage_largest >= 0.0) {
      cl.push_back(p.coverage_largest);
      cr.push_back(p.coverage_random);
    }
  }
  const MeanStd l = mean_std(vl);
  const MeanStd r = mean_std(vr);
  std::string out = "order,n,vol_log10_mean,vol_log10_std";
  const bool with_cov = !cl.empty();
  if (with_cov) out += ",coverage_mean,coverage_std";
  out += "\n";
  const MeanStd lc = mean_std(cl);
  const MeanStd rc = mean_std(cr);
  out += "largest_gain_first," + std::to_string(vl.size()) + "," +
         fmt(l.mean) + "," + fmt(l.std);
  if (with_cov) out += "," + fmt(lc.mean) + "," + fmt(lc.std);
  out += "\nrandom," + std::to_string(vr.size()) + "," + fmt(r.mean) + "," +
         fmt(r.std);
  if (with_cov) out += "," + fmt(rc.mean) + "," + fmt(rc.std);
  out += "\n";
  return out;
}

AblationResult run_expansion_ablation(AblationKind kind, std::size_t dim,
                                      const ExperimentParams& params) {
  const Rng root(params.anchor.seed);
  AblationResult result;
  result.kind = kind;
  result.dim = dim;
  result.pairs.resize(params.n_anchors);

  if (kind == AblationKind::half_l1) {
    const Box space{Point(dim, -5.0), Point(dim, 5.0)};
    const Point origin(dim, 0.0);
    parallel_for(params.n_anchors, params.jobs, [&](std::size_t j) {
      AblationPair pair;
      pair.run_index = j;
      const std::uint64_t seed = root.derive("pair", j).next_u64();
      try {
        for (const bool largest : {true, false}) {
          auto oracle = std::make_shared<HalfL1BallOracle>(dim);
          AnchorParams ap = params.anchor;
          ap.seed = seed;
          ap.expansion = largest ? ExpansionOrder::largest_gain_first
                                 : ExpansionOrder::random;
          AnchorRun run(make_search_space(space, origin), oracle, ap);
          const GuaranteeReport report = run.run_to_report();
          (largest ? pair.vol_largest : pair.vol_random) = report.log10_volume;
          (largest ? pair.evals_largest : pair.evals_random) =
              static_cast<double>(report.evals);
          (largest ? pair.purity_largest : pair.purity_random) =
              report.purity_audit.fraction;
        }
        pair.ok = true;
      } catch (const std::exception& e) {
        pair.error = e.what();
      }
      result.pairs[j] = std::move(pair);
    });
    return result;
  }

  // Cluster variant: shared data and model, paired runs per anchor.
  Rng data_rng = root.derive("data");
  const ClusterData cd = generate_clusters(ClusterSpec{}, dim, data_rng);
  Rng train_rng = root.derive("train");
  const ModelPtr f = train_forest(cd.dataset.rows, cd.dataset.labels,
                                  cd.dataset.n_classes, train_rng);
  const Box bbox = data_bounding_box(cd.dataset);
  std::vector<std::size_t> order(cd.dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng anchor_rng = root.derive("anchors");
  shuffle(order, anchor_rng);

  parallel_for(params.n_anchors, params.jobs, [&](std::size_t j) {
    AblationPair pair;
    pair.run_index = j;
    const std::size_t row = order[j % order.size()];
    const Point& anchor = cd.dataset.rows[row];
    const std::uint64_t seed = root.derive("pair", j).next_u64();
    try {
      const SurrogateFit fit = fit_surrogate(
          f, anchor, params.surrogate,
          FaithSpec{FaithSpec::Kind::classification, 0.1,
                    params.faith_tolerance},
          root.derive("fit", j));
      for (const bool largest : {true, false}) {
        auto oracle = std::make_shared<ClassificationFaithfulness>(
            probs_fn(f), probs_fn(fit.surrogate), params.faith_tolerance);
        AnchorParams ap = params.anchor;
        ap.seed = seed;
        ap.expansion = largest ? ExpansionOrder::largest_gain_first
                               : ExpansionOrder::random;
        AnchorRun run(make_search_space(bbox, anchor), oracle, ap);
        const GuaranteeReport report = run.run_to_report();
        const double coverage =
            cluster_coverage(report.box, cd.dataset.rows, cd.assignments,
                             cd.assignments[row]);
        (largest ? pair.vol_largest : pair.vol_random) = report.log10_volume;
        (largest ? pair.evals_largest : pair.evals_random) =
            static_cast<double>(report.evals);
        (largest ? pair.coverage_largest : pair.coverage_random) = coverage;
        (largest ? pair.purity_largest : pair.purity_random) =
            report.purity_audit.fraction;
      }
      pair.ok = true;
    } catch (const std::exception& e) {
      pair.error = e.what();
    }
    result.pairs[j] = std::move(pair);
  });
  return result;
}

// --- Output helpers --------------------------------------------------------------

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const json& rec : records) out << rec.dump() << "\n";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace anchorbox
