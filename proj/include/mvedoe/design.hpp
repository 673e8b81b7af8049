#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvedoe/features.hpp"

namespace mvedoe {

enum class Criterion { Cmm, MaxPro, Twin, Random };

std::string to_string(Criterion c);
Criterion parse_criterion(const std::string& name);

/// Ordered selection of candidate rows.
struct Design {
  Criterion criterion = Criterion::Random;
  std::vector<std::size_t> indices;
  std::uint64_t seed = 0;
  /// Per-step criterion value: cMm the achieved minimum distance (+inf for the
  /// first point), maxPro the log of the added cost (-inf for the first
  /// point), twin the radius of each consumed group. Empty for random.
  std::vector<double> trace;
  FeatureKind provenance = FeatureKind::External;
};

/// Greedy start: a fixed candidate index, or one drawn uniformly from `seed`.
struct DesignStart {
  std::optional<std::size_t> index;
  std::uint64_t seed = 0;

  static DesignStart at(std::size_t i) { return {i, 0}; }
  static DesignStart seeded(std::uint64_t s) { return {std::nullopt, s}; }
};

/// Conditional maximin: each new point maximizes its minimum Euclidean
/// distance to the points already chosen. Ties go to the lowest index.
Design cmm_greedy(const FeatureMatrix& f, std::size_t n, DesignStart start);

/// Greedy maximum projection: each new point minimizes
///   sum_{s in design} exp(-k * sum_l log |c_l - s_l|),
/// accumulated in log space; gaps below 1e-12 are clamped.
Design maxpro_greedy(const FeatureMatrix& f, std::size_t n, DesignStart start, double k = 2.0);

/// Sequential nearest-neighbour twinning with group size r = max(2, round(N/n)).
/// Starts at the point nearest the pool centroid; each step keeps the current
/// point, consumes its r-1 nearest unassigned neighbours and moves to the
/// unassigned point nearest the group's centroid. Remaining slots after the
/// pool is exhausted are filled by maximin steps.
Design twin_design(const FeatureMatrix& f, std::size_t n);

/// Uniform sample without replacement.
Design random_design(const FeatureMatrix& f, std::size_t n, std::uint64_t seed);

/// Dispatch on criterion; `seed` drives the random start (cmm, maxpro) or the
/// sample (random) and is ignored by twin.
Design build_design(Criterion criterion, const FeatureMatrix& f, std::size_t n, std::uint64_t seed,
                    double maxpro_k = 2.0);

struct GrainSizeBin {
  int grain_size = 0;
  std::size_t design_count = 0;
  std::size_t pool_count = 0;
};

struct DesignDiagnostics {
  std::optional<double> min_pairwise_distance;
  std::optional<double> maxpro_log_criterion;
  double energy_distance_to_pool = 0.0;
  std::vector<double> min_projected_spacing;
  std::vector<GrainSizeBin> grain_size_histogram;
  std::optional<double> grain_size_tv_distance;

  /// Smallest entry of min_projected_spacing (+inf when undefined).
  double worst_projected_spacing() const;
};

/// V-statistic energy distance 2 E|a-b| - E|a-a'| - E|b-b'| over all pairs.
double energy_distance(const RowMatrix& a, const RowMatrix& b);

/// log sum_{i<j} exp(-k sum_l log max(|x_il - x_jl|, 1e-12)); nullopt for
/// fewer than two rows.
std::optional<double> maxpro_log_criterion(const RowMatrix& x, double k = 2.0);

std::optional<double> min_pairwise_distance(const RowMatrix& x);

/// Per column, the smallest gap between sorted design coordinates.
std::vector<double> min_projected_spacing(const RowMatrix& x);

/// Total-variation distance between the grain-size histograms of the design
/// and the pool; `grain_sizes` is indexed like the candidate rows.
double grain_size_tv_distance(std::span<const std::size_t> design, std::span<const int> grain_sizes,
                              std::vector<GrainSizeBin>* histogram = nullptr);

/// `grain_sizes` may be empty, in which case the histogram fields stay empty.
DesignDiagnostics design_diagnostics(const Design& design, const FeatureMatrix& f,
                                     std::span<const int> grain_sizes = {}, double maxpro_k = 2.0);

void write_design(const std::filesystem::path& path, const Design& design, const DesignDiagnostics& diag,
                  const Provenance& prov = {});
Design read_design(const std::filesystem::path& path);

/// One row per design: label, criterion, n, scalar diagnostics.
struct LabelledDiagnostics {
  std::string label;
  Criterion criterion = Criterion::Random;
  std::size_t n = 0;
  DesignDiagnostics diagnostics;
};
void write_diagnostics_csv(const std::filesystem::path& path, std::span<const LabelledDiagnostics> rows,
                           const Provenance& prov = {});

} // namespace mvedoe
