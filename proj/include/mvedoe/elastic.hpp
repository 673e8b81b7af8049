#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvedoe/io.hpp"
#include "mvedoe/mve.hpp"

namespace mvedoe {

/// 6x6 stiffness, GPa, Voigt order (11, 22, 33, 23, 13, 12), engineering shear
/// strains.
using Stiffness = Eigen::Matrix<double, 6, 6>;
/// Voigt stress, MPa.
using Voigt6 = Eigen::Matrix<double, 6, 1>;

struct CubicConstants {
  double c11 = 199.0;
  double c12 = 128.0;
  double c44 = 99.0;
};

/// Throws InvalidArgument unless C11 > |C12|, C11 + 2 C12 > 0 and C44 > 0.
Stiffness cubic_stiffness(double c11, double c12, double c44);
inline Stiffness cubic_stiffness(const CubicConstants& c) { return cubic_stiffness(c.c11, c.c12, c.c44); }

/// 2 C44 / (C11 - C12).
double zener_ratio(const CubicConstants& c);

/// C'_ijkl = R_ia R_jb R_kc R_ld C_abcd, evaluated with the 6x6 Bond matrix.
/// Throws InvalidArgument if R is not a proper rotation (tolerance 1e-9).
Stiffness rotate_stiffness(const Stiffness& c, const Eigen::Matrix3d& r);

/// sum_ij C_iijj and sum_ij C_ijij.
std::pair<double, double> stiffness_invariants(const Stiffness& c);

struct OracleConfig {
  CubicConstants constants;
  /// Macroscopic stress, MPa; uniaxial 50 MPa along z by default.
  Voigt6 applied = (Voigt6() << 0.0, 0.0, 50.0, 0.0, 0.0, 0.0).finished();
  /// One periodic 3x3x3 box-filter pass over the field.
  bool smoothing = false;
};

struct StressField {
  Dims dims;
  Voigt6 applied = Voigt6::Zero();
  /// Six components per voxel, voxels in x-fastest order.
  std::vector<double> values;

  Voigt6 at(std::size_t voxel) const { return Eigen::Map<const Voigt6>(values.data() + 6 * voxel); }
  Voigt6 volume_average() const;
};

/// Iso-strain estimate: mean stiffness C_bar over voxels, eps = C_bar^-1 S,
/// sigma(x) = C(x) eps. Each grain's stiffness is the crystal stiffness
/// rotated by g^T.
StressField taylor_stress_field(const Mve& mve, const OracleConfig& config = {});

/// Periodic 3x3x3 box filter; preserves the volume average.
StressField smooth_periodic(const StressField& field);

double von_mises(const Voigt6& s);

inline constexpr std::size_t kSummarySize = 13;
using FieldSummary = std::array<double, kSummarySize>;
/// Column names of FieldSummary.
const std::array<std::string, kSummarySize>& field_summary_names();

/// [mean of 6 components, population std of 6 components, mean von Mises].
FieldSummary field_summary(const StressField& field);

void write_stress_field(const std::filesystem::path& path, const StressField& field, const Provenance& prov = {});
StressField read_stress_field(const std::filesystem::path& path);

} // namespace mvedoe
