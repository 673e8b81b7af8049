#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvedoe/design.hpp"
#include "mvedoe/features.hpp"

namespace mvedoe {

/// Validation/pool split over corpus rows.
struct SplitPlan {
  std::vector<std::size_t> validation;
  std::vector<std::size_t> pool;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  std::vector<double> fractions{0.10, 0.25, 0.50};
  int replicates = 10;

  void validate(std::size_t corpus_size) const;
};

/// Seeded split of `strata.size()` rows. round(val_fraction * N) rows go to
/// validation, allocated across strata by largest remainder; every stratum
/// with at least two members is represented on both sides.
SplitPlan split_pool(std::span<const int> strata, double val_fraction, std::uint64_t seed);

/// Inverse-squared-distance weighted mean of the k nearest training targets.
/// A query within 1e-12 of a training point returns that point's target.
RowMatrix knn_predict(const RowMatrix& train_x, const RowMatrix& train_y, const RowMatrix& query_x, int k);

/// Per-column centring and scaling fitted on the pool rows. Columns whose
/// spread is negligible relative to their magnitude keep scale 1.
struct TargetScaling {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static TargetScaling fit(const RowMatrix& y);
  RowMatrix apply(const RowMatrix& y) const;
};

/// Mean squared error over validation rows and all target columns of a k-NN
/// surrogate trained on `design_rows` (corpus row indices, all in the pool).
/// Features are min-max normalized with the design rows' record; targets
/// are scaled with pool statistics.
double evaluate_design(std::span<const std::size_t> design_rows, const RowMatrix& features, const RowMatrix& targets,
                       const SplitPlan& plan, int k = 8);

struct EvalRecord {
  std::string feature_set;
  Criterion criterion = Criterion::Random;
  double fraction = 0.0;
  int replicate = 0;
  std::size_t n_design = 0;
  double loss_design = 0.0;
  double loss_random_mean = 0.0;
  double improvement_pct = 0.0;
  double bootstrap_std = 0.0;
};

struct NamedFeatures {
  std::string name;
  FeatureMatrix features;  // rows aligned with the corpus
};

struct ReportConfig {
  std::vector<Criterion> criteria{Criterion::Cmm, Criterion::MaxPro, Criterion::Twin, Criterion::Random};
  int random_baseline = 10;
  int bootstrap_resamples = 1000;
  int k = 8;
  double maxpro_k = 2.0;
  std::uint64_t seed = 0;
};

/// Design size for a fraction of the pool: max(1, round(fraction * pool)).
std::size_t design_size(double fraction, std::size_t pool_size);

/// Seed used for replicate `replicate` of a (feature set, criterion, fraction) cell.
std::uint64_t design_seed(std::uint64_t master, const std::string& feature_set, Criterion c, std::size_t fraction_index,
                          int replicate);

/// Designs for one cell, built over the pool rows (indices are pool positions).
std::vector<Design> cell_designs(const FeatureMatrix& pool_features, Criterion criterion, std::size_t fraction_index,
                                 double fraction, const SplitPlan& plan, const ReportConfig& config,
                                 const std::string& feature_set);

/// Standard deviation of the mean of `values` under `resamples` bootstrap
/// resamples.
double bootstrap_std(std::span<const double> values, int resamples, std::uint64_t seed);

/// Full feature set x criterion x fraction x replicate sweep. Each replicate
/// is compared with the mean loss of `random_baseline` seeded random designs
/// of the same size over the same pool.
std::vector<EvalRecord> improvement_report(std::span<const NamedFeatures> feature_sets, const RowMatrix& targets,
                                           const SplitPlan& plan, const ReportConfig& config, int jobs = 1);

void write_report_csv(const std::filesystem::path& path, std::span<const EvalRecord> records,
                      const Provenance& prov = {});
std::vector<EvalRecord> read_report_csv(const std::filesystem::path& path);

struct CellSummary {
  std::string feature_set;
  Criterion criterion = Criterion::Random;
  double fraction = 0.0;
  std::size_t n_design = 0;
  double mean_loss_design = 0.0;
  double mean_loss_random = 0.0;
  double mean_improvement_pct = 0.0;
  double bootstrap_std = 0.0;
  int replicates = 0;
};

std::vector<CellSummary> summarize(std::span<const EvalRecord> records);
void write_summary_csv(const std::filesystem::path& path, std::span<const CellSummary> cells,
                       const Provenance& prov = {});

} // namespace mvedoe
