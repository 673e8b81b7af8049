#include "mvedoe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "mvedoe/error.hpp"
#include "mvedoe/parallel.hpp"

namespace mvedoe {

void SplitPlan::validate(std::size_t corpus_size) const {
  std::vector<int> side(corpus_size, 0);
  for (auto i : validation) {
    if (i >= corpus_size) throw InvalidArgument("validation row out of range");
    side[i] |= 1;
  }
  for (auto i : pool) {
    if (i >= corpus_size) throw InvalidArgument("pool row out of range");
    if (side[i] & 1) throw InvalidArgument("row " + std::to_string(i) + " is in both validation and pool");
    side[i] |= 2;
  }
  for (double f : fractions)
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("design fractions must lie in (0, 1]");
  if (replicates < 1) throw InvalidArgument("replicates must be >= 1");
}

SplitPlan split_pool(std::span<const int> strata, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("validation fraction must lie in (0, 1)");
  const std::size_t n = strata.size();
  const auto total_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  if (total_val < 1 || total_val >= n)
    throw InvalidArgument("validation fraction " + std::to_string(val_fraction) + " leaves an empty side for " +
                          std::to_string(n) + " rows");

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[strata[i]].push_back(i);

  struct Quota {
    int key;
    std::size_t size, take;
    double exact;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [key, members] : groups) {
    const double exact = val_fraction * static_cast<double>(members.size());
    const auto take = static_cast<std::size_t>(std::floor(exact));
    quotas.push_back({key, members.size(), take, exact});
    assigned += take;
  }
  {
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return quotas[a].exact - std::floor(quotas[a].exact) > quotas[b].exact - std::floor(quotas[b].exact);
    });
    for (std::size_t t = 0; assigned < total_val; t = (t + 1) % order.size()) {
      auto& q = quotas[order[t]];
      if (q.take < q.size) {
        ++q.take;
        ++assigned;
      }
    }
  }
  // Keep every stratum of size >= 2 on both sides when the totals allow it.
  auto lower = [](const Quota& q) { return q.size >= 2 ? std::size_t{1} : std::size_t{0}; };
  auto upper = [](const Quota& q) { return q.size >= 2 ? q.size - 1 : q.size; };
  auto surplus = [](const Quota& q) { return static_cast<double>(q.take) - q.exact; };
  for (bool changed = true; changed;) {
    changed = false;
    for (auto& q : quotas) {
      if (q.take < lower(q)) {
        Quota* donor = nullptr;
        for (auto& d : quotas)
          if (&d != &q && d.take > lower(d) && (!donor || surplus(d) > surplus(*donor))) donor = &d;
        if (donor) {
          --donor->take;
          ++q.take;
          changed = true;
        }
      } else if (q.take > upper(q)) {
        Quota* taker = nullptr;
        for (auto& d : quotas)
          if (&d != &q && d.take < upper(d) && (!taker || surplus(d) < surplus(*taker))) taker = &d;
        if (taker) {
          ++taker->take;
          --q.take;
          changed = true;
        }
      }
    }
  }

  SplitPlan plan;
  plan.val_fraction = val_fraction;
  plan.seed = seed;
  for (const auto& q : quotas) {
    auto members = groups[q.key];
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(static_cast<std::int64_t>(q.key))}));
    for (std::size_t i = 0; i + 1 < members.size(); ++i)
      std::swap(members[i], members[i + uniform_index(rng, members.size() - i)]);
    plan.validation.insert(plan.validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(q.take));
    plan.pool.insert(plan.pool.end(), members.begin() + static_cast<std::ptrdiff_t>(q.take), members.end());
  }
  std::sort(plan.validation.begin(), plan.validation.end());
  std::sort(plan.pool.begin(), plan.pool.end());
  return plan;
}

RowMatrix knn_predict(const RowMatrix& train_x, const RowMatrix& train_y, const RowMatrix& query_x, int k) {
  if (train_x.rows() == 0) throw InvalidArgument("k-NN needs a non-empty training set");
  if (k < 1 || k > train_x.rows()) throw InvalidArgument("k-NN needs 1 <= k <= training size");
  if (train_y.rows() != train_x.rows() || query_x.cols() != train_x.cols())
    throw InvalidArgument("k-NN shape mismatch");

  RowMatrix out(query_x.rows(), train_y.cols());
  std::vector<std::pair<double, Eigen::Index>> dist(static_cast<std::size_t>(train_x.rows()));
  const auto kk = static_cast<std::ptrdiff_t>(k);
  for (Eigen::Index q = 0; q < query_x.rows(); ++q) {
    for (Eigen::Index t = 0; t < train_x.rows(); ++t)
      dist[static_cast<std::size_t>(t)] = {(train_x.row(t) - query_x.row(q)).squaredNorm(), t};
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    if (std::sqrt(dist.front().first) < 1e-12) {
      out.row(q) = train_y.row(dist.front().second);
      continue;
    }
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(train_y.cols());
    double wsum = 0.0;
    for (std::ptrdiff_t j = 0; j < kk; ++j) {
      const double w = 1.0 / dist[static_cast<std::size_t>(j)].first;
      acc += w * train_y.row(dist[static_cast<std::size_t>(j)].second);
      wsum += w;
    }
    out.row(q) = acc / wsum;
  }
  return out;
}

TargetScaling TargetScaling::fit(const RowMatrix& y) {
  if (y.rows() == 0) throw InvalidArgument("target scaling needs rows");
  TargetScaling s;
  s.mean = y.colwise().mean().transpose();
  s.scale.resize(y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const double var = (y.col(c).array() - s.mean[c]).square().mean();
    const double sd = std::sqrt(var);
    s.scale[c] = sd > 1e-9 * std::max(1.0, std::abs(s.mean[c])) ? sd : 1.0;
  }
  return s;
}

RowMatrix TargetScaling::apply(const RowMatrix& y) const {
  RowMatrix out(y.rows(), y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) out.col(c) = (y.col(c).array() - mean[c]) / scale[c];
  return out;
}

namespace {

RowMatrix gather(const RowMatrix& m, std::span<const std::size_t> rows) {
  RowMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

} // namespace

double evaluate_design(std::span<const std::size_t> design_rows, const RowMatrix& features, const RowMatrix& targets,
                       const SplitPlan& plan, int k) {
  if (design_rows.empty()) throw InvalidArgument("cannot evaluate an empty design");
  if (features.rows() != targets.rows()) throw InvalidArgument("features and targets have different row counts");
  for (auto r : design_rows)
    if (!std::binary_search(plan.pool.begin(), plan.pool.end(), r))
      throw InvalidArgument("design row " + std::to_string(r) + " is not in the pool");

  const TargetScaling scaling = TargetScaling::fit(gather(targets, plan.pool));
  const RowMatrix train_x_raw = gather(features, design_rows);
  const MinMax norm = MinMax::fit(train_x_raw);
  const RowMatrix train_x = norm.apply(train_x_raw);
  const RowMatrix train_y = scaling.apply(gather(targets, design_rows));
  const RowMatrix val_x = norm.apply(gather(features, plan.validation));
  const RowMatrix val_y = scaling.apply(gather(targets, plan.validation));

  const int kk = std::min<int>(k, static_cast<int>(design_rows.size()));
  const RowMatrix pred = knn_predict(train_x, train_y, val_x, kk);
  return (pred - val_y).array().square().mean();
}

std::size_t design_size(double fraction, std::size_t pool_size) {
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool_size))), 1,
                                 pool_size);
}

std::uint64_t design_seed(std::uint64_t master, const std::string& feature_set, Criterion c,
                          std::size_t fraction_index, int replicate) {
  return derive_seed(master, {io::fnv1a64(feature_set), static_cast<std::uint64_t>(c), fraction_index,
                              static_cast<std::uint64_t>(replicate)});
}

std::vector<Design> cell_designs(const FeatureMatrix& pool_features, Criterion criterion, std::size_t fraction_index,
                                 double fraction, const SplitPlan& plan, const ReportConfig& config,
                                 const std::string& feature_set) {
  const std::size_t n = design_size(fraction, pool_features.rows());
  std::vector<Design> designs;
  if (criterion == Criterion::Twin) {
    designs.assign(static_cast<std::size_t>(plan.replicates), twin_design(pool_features, n));
    return designs;
  }
  for (int r = 0; r < plan.replicates; ++r)
    designs.push_back(build_design(criterion, pool_features, n,
                                   design_seed(config.seed, feature_set, criterion, fraction_index, r), config.maxpro_k));
  return designs;
}

double bootstrap_std(std::span<const double> values, int resamples, std::uint64_t seed) {
  if (values.size() < 2 || resamples < 2) return 0.0;
  Rng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += values[uniform_index(rng, values.size())];
    m = s / static_cast<double>(values.size());
  }
  const double mu = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - mu) * (m - mu);
  return std::sqrt(var / static_cast<double>(means.size()));
}

std::vector<EvalRecord> improvement_report(std::span<const NamedFeatures> feature_sets, const RowMatrix& targets,
                                           const SplitPlan& plan, const ReportConfig& config, int jobs) {
  const auto corpus_size = static_cast<std::size_t>(targets.rows());
  plan.validate(corpus_size);
  {
    std::vector<std::string> missing;
    for (const auto& fs : feature_sets)
      if (fs.features.rows() != corpus_size) missing.push_back(fs.name);
    if (!missing.empty()) {
      std::string names;
      for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
      throw InvalidArgument("feature sets without a row for every corpus id: " + names);
    }
  }
  if (config.random_baseline < 1) throw InvalidArgument("random baseline needs at least one design");

  const std::size_t n_fs = feature_sets.size(), n_fr = plan.fractions.size();
  const auto reps = static_cast<std::size_t>(plan.replicates);
  const auto base = static_cast<std::size_t>(config.random_baseline);

  std::vector<FeatureMatrix> pool_features(n_fs);
  for (std::size_t f = 0; f < n_fs; ++f) pool_features[f] = normalize_features(feature_sets[f].features.subset(plan.pool));

  auto to_corpus = [&](const Design& d) {
    std::vector<std::size_t> rows(d.indices.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = plan.pool[d.indices[i]];
    return rows;
  };

  // Random baseline: mean loss per (feature set, fraction, replicate).
  std::vector<double> baseline(n_fs * n_fr * reps);
  parallel_for(baseline.size(), jobs, [&](std::size_t cell) {
    const std::size_t f = cell / (n_fr * reps), fi = (cell / reps) % n_fr, r = cell % reps;
    const std::size_t n = design_size(plan.fractions[fi], plan.pool.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < base; ++j) {
      const Design d = random_design(pool_features[f], n, derive_seed(config.seed, {0xba5e, fi, r, j}));
      sum += evaluate_design(to_corpus(d), feature_sets[f].features.values, targets, plan, config.k);
    }
    baseline[cell] = sum / static_cast<double>(base);
  });

  const std::size_t n_cr = config.criteria.size();
  std::vector<EvalRecord> records(n_fs * n_cr * n_fr * reps);
  parallel_for(n_fs * n_cr * n_fr, jobs, [&](std::size_t cell) {
    const std::size_t f = cell / (n_cr * n_fr), c = (cell / n_fr) % n_cr, fi = cell % n_fr;
    const auto& name = feature_sets[f].name;
    const auto designs =
        cell_designs(pool_features[f], config.criteria[c], fi, plan.fractions[fi], plan, config, name);
    std::vector<double> improvements(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      EvalRecord& rec = records[cell * reps + r];
      rec.feature_set = name;
      rec.criterion = config.criteria[c];
      rec.fraction = plan.fractions[fi];
      rec.replicate = static_cast<int>(r);
      rec.n_design = designs[r].indices.size();
      rec.loss_design = evaluate_design(to_corpus(designs[r]), feature_sets[f].features.values, targets, plan, config.k);
      rec.loss_random_mean = baseline[(f * n_fr + fi) * reps + r];
      rec.improvement_pct = rec.loss_random_mean > 0.0
                                ? (rec.loss_random_mean - rec.loss_design) / rec.loss_random_mean * 100.0
                                : 0.0;
      improvements[r] = rec.improvement_pct;
    }
    const double sd = bootstrap_std(improvements, config.bootstrap_resamples,
                                    derive_seed(config.seed, {0xb007, io::fnv1a64(name), c, fi}));
    for (std::size_t r = 0; r < reps; ++r) records[cell * reps + r].bootstrap_std = sd;
  });
  return records;
}

// ---------------------------------------------------------------------------

void write_report_csv(const std::filesystem::path& path, std::span<const EvalRecord> records, const Provenance& prov) {
  std::ostringstream out;
  out << "# improvement_report config=" << prov.config_hash << " tool=" << prov.tool_version << '\n';
  out << "feature_set,criterion,fraction,replicate,n_design,loss_design,loss_random_mean,improvement_pct,bootstrap_std\n";
  for (const auto& r : records)
    out << r.feature_set << ',' << to_string(r.criterion) << ',' << io::format_double(r.fraction) << ','
        << r.replicate << ',' << r.n_design << ',' << io::format_double(r.loss_design) << ','
        << io::format_double(r.loss_random_mean) << ',' << io::format_double(r.improvement_pct) << ','
        << io::format_double(r.bootstrap_std) << '\n';
  io::write_text(path, out.str());
}

std::vector<EvalRecord> read_report_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<EvalRecord> out;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto c = io::split(line, ',');
    if (c.size() != 9) throw FormatError(path.string() + ": expected 9 columns in '" + line + "'");
    EvalRecord r;
    r.feature_set = c[0];
    r.criterion = parse_criterion(c[1]);
    r.fraction = io::parse_double(c[2]);
    r.replicate = static_cast<int>(io::parse_int(c[3]));
    r.n_design = static_cast<std::size_t>(io::parse_int(c[4]));
    r.loss_design = io::parse_double(c[5]);
    r.loss_random_mean = io::parse_double(c[6]);
    r.improvement_pct = io::parse_double(c[7]);
    r.bootstrap_std = io::parse_double(c[8]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CellSummary> summarize(std::span<const EvalRecord> records) {
  std::vector<CellSummary> cells;
  for (const auto& r : records) {
    auto it = std::find_if(cells.begin(), cells.end(), [&](const CellSummary& c) {
      return c.feature_set == r.feature_set && c.criterion == r.criterion && c.fraction == r.fraction;
    });
    if (it == cells.end()) {
      cells.push_back({r.feature_set, r.criterion, r.fraction, r.n_design, 0.0, 0.0, 0.0, r.bootstrap_std, 0});
      it = cells.end() - 1;
    }
    it->mean_loss_design += r.loss_design;
    it->mean_loss_random += r.loss_random_mean;
    it->mean_improvement_pct += r.improvement_pct;
    ++it->replicates;
  }
  for (auto& c : cells) {
    const double k = static_cast<double>(c.replicates);
    c.mean_loss_design /= k;
    c.mean_loss_random /= k;
    c.mean_improvement_pct /= k;
  }
  return cells;
}

void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> cells,
                       const Provenance& prov) {
  std::ostringstream out;
  out << "# improvement_summary config=" << prov.config_hash << " tool=" << prov.tool_version << '\n';
  out << "feature_set,criterion,fraction,n_design,replicates,mean_loss_design,mean_loss_random,"
         "mean_improvement_pct,bootstrap_std\n";
  for (const auto& c : cells)
    out << c.feature_set << ',' << to_string(c.criterion) << ',' << io::format_double(c.fraction) << ','
        << c.n_design << ',' << c.replicates << ',' << io::format_double(c.mean_loss_design) << ','
        << io::format_double(c.mean_loss_random) << ',' << io::format_double(c.mean_improvement_pct) << ','
        << io::format_double(c.bootstrap_std) << '\n';
  io::write_text(path, out.str());
}

} // namespace mvedoe
