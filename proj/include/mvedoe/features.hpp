#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvedoe/io.hpp"
#include "mvedoe/mve.hpp"

namespace mvedoe {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class FeatureKind { Classic, Contrastive, External };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

/// Per-dimension min-max record.
struct MinMax {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  /// (x - min) / (max - min); dimensions with max == min map to 0.5.
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  RowMatrix apply(const RowMatrix& x) const;
  static MinMax fit(const RowMatrix& x);
};

struct FeatureMatrix {
  std::vector<std::string> ids;
  RowMatrix values;
  FeatureKind kind = FeatureKind::External;
  std::optional<MinMax> normalization;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }
  /// Throws FormatError on non-finite entries, duplicate ids, or an
  /// inconsistent normalization record.
  void validate() const;
  /// Row subset, keeping kind and dropping the normalization record.
  FeatureMatrix subset(const std::vector<std::size_t>& rows) const;
};

/// Which of the 18 raw GSH reals (Re F^-4..Re F^4, Im F^-4..Im F^4) are kept.
/// A component is dropped when its magnitude stays below 1e-10 over 10^4
/// uniform orientations; the mask is computed once per process.
const std::array<bool, 18>& gsh_retained_mask();
std::size_t gsh_retained_count();

/// Retained real/imaginary parts of the volume-averaged GSH coefficients.
Eigen::VectorXd gsh_feature_block(const Mve& mve);

inline constexpr double kGrainSizeScale = 1.0 / 16.0;

/// [retained GSH reals..., target grain size / 16].
Eigen::VectorXd classic_descriptor(const Mve& mve);

/// Fraction of face-adjacent voxel pairs (non-periodic) whose grain ids differ.
double interface_density(const Mve& mve);

/// [retained GSH reals..., interface density, log(1 + grain count)].
Eigen::VectorXd subvolume_statistics(const Mve& mve);

/// Min-max scaling to [0, 1] per dimension; constant dimensions become 0.5.
FeatureMatrix normalize_features(const FeatureMatrix& f);

/// Pairwise Euclidean distances (N x N, symmetric, zero diagonal).
Eigen::MatrixXd distance_matrix(const FeatureMatrix& f);

enum class FeatureFormat { Csv, Binary };

/// CSV: optional '#' provenance lines, header `id,f0,...,f{p-1}`, one row
/// per MVE with shortest round-trip decimal values.
void save_features_csv(const std::filesystem::path& path, const FeatureMatrix& f, const Provenance& prov = {});
/// Binary twin: text line "FEATURES N=.. p=.. config=.. tool=..", then
/// row-major little-endian doubles. Ids are not stored.
void save_features_binary(const std::filesystem::path& path, const FeatureMatrix& f, const Provenance& prov = {});

/// Loads a feature file; rows are validated and the result is tagged `kind`.
/// Binary files get ids "0".."N-1".
FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format,
                            FeatureKind kind = FeatureKind::External);

} // namespace mvedoe
