#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mvedoe/rng.hpp"

namespace mvedoe {

struct Mve;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Bunge Euler angles (radians). Canonical ranges: phi1, phi2 in [0, 2pi),
/// Phi in [0, pi].
struct Orientation {
  double phi1 = 0.0;
  double Phi = 0.0;
  double phi2 = 0.0;

  bool operator==(const Orientation&) const = default;
};

/// Orientation matrix g. Rows are the crystal axes expressed in the sample
/// frame, so g maps sample coordinates to crystal coordinates and g^T maps
/// crystal directions into the sample frame.
using RotationMatrix = Eigen::Matrix3d;

/// g = Rz(phi2) * Rx(Phi) * Rz(phi1) with passive (coordinate) rotations
/// Rz(a) = [[c, s, 0], [-s, c, 0], [0, 0, 1]] and Rx likewise.
RotationMatrix euler_to_rotation(const Orientation& o);

/// Inverse of euler_to_rotation. At the gimbal poles (Phi = 0 or pi) phi2 is
/// set to 0 and the combined angle is carried by phi1.
Orientation rotation_to_euler(const RotationMatrix& g);

/// Wraps phi1/phi2 into [0, 2pi) and reflects Phi into [0, pi] by a round
/// trip through the rotation matrix when needed.
Orientation canonicalize(const Orientation& o);

/// Active rotation by `angle` about unit `axis` (Rodrigues).
RotationMatrix axis_angle(const Eigen::Vector3d& axis, double angle);

/// The 24 proper rotations of the cubic point group (signed permutation
/// matrices with det +1). Element 0 is the identity.
const std::array<RotationMatrix, 24>& cubic_symmetry_ops();

/// Random unit vector, uniform on the sphere.
Eigen::Vector3d random_unit_vector(Rng& rng);

struct TextureSpec {
  enum class Kind { Uniform, Fiber };

  Kind kind = Kind::Uniform;
  /// Fiber only: crystal direction aligned with `sample_axis`.
  Eigen::Vector3d crystal_axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d sample_axis = Eigen::Vector3d::UnitZ();
  /// Half-width (degrees) of the independent uniform perturbation added to
  /// each Euler angle; 0 disables it.
  double perturbation_deg = 0.0;

  static TextureSpec uniform() { return {}; }
  static TextureSpec fiber(const Eigen::Vector3d& crystal_axis,
                           const Eigen::Vector3d& sample_axis,
                           double perturbation_deg = 0.0);

  /// Throws InvalidArgument for non-unit fiber axes or negative perturbation.
  void validate() const;
  std::string kind_name() const { return kind == Kind::Uniform ? "uniform" : "fiber"; }
};

/// Haar-uniform orientation (uniform unit quaternion, Shoemake's method).
Orientation uniform_orientation(Rng& rng);

/// Orientation whose crystal axis `c` lies along sample axis `s`, spun by
/// `spin` radians about `s`: g^T c = s.
Orientation fiber_orientation(const Eigen::Vector3d& c, const Eigen::Vector3d& s, double spin);

/// Adds independent Unif(-max_deg, max_deg) degrees to each angle, then
/// canonicalizes.
Orientation perturb_orientation(const Orientation& o, double max_deg, Rng& rng);

Orientation sample_orientation(const TextureSpec& spec, Rng& rng);

// ---------------------------------------------------------------------------
// Generalized spherical harmonics, l = 4, cubic crystal symmetry.

inline constexpr int kGshDegree = 4;
inline constexpr int kGshTerms = 2 * kGshDegree + 1;

/// Entry k holds the term with sample index n = k - 4.
using GshVector = std::array<std::complex<double>, kGshTerms>;

/// Wigner small-d d^l_{m n}(beta) from the explicit factorial series.
double wigner_small_d(int l, int m, int n, double beta);

/// Cubic-symmetrized basis T(g) for n = -4..4:
///   T^n(g) = sum_{m in {0, +-4}} A_m e^{i m phi2} d^4_{m n}(Phi) e^{i n phi1},
/// with A_0 = sqrt(7/12), A_{+-4} = sqrt(5/24).
GshVector gsh_basis(const Orientation& o);

/// F^n = (2l + 1) * volume mean of conj(T^n(g(x))).
GshVector gsh_coefficients(const Mve& mve);

// ---------------------------------------------------------------------------
// Pole figures.

/// Upper-hemisphere pole density on a square equal-area (Rosca-Lambert) grid,
/// in multiples of random. Bins are indexed [row * resolution + col] with
/// col along the projected x axis.
struct PoleDensity {
  std::string family;
  int resolution = 0;
  std::vector<double> density;

  double at(int row, int col) const { return density[static_cast<std::size_t>(row) * resolution + col]; }
  /// (azimuth, polar) of the bin centre, radians.
  std::pair<double, double> bin_center(int row, int col) const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Folded unit vector to (row, col) of a resolution^2 equal-area grid.
std::pair<int, int> equal_area_bin(const Eigen::Vector3d& v, int resolution);

/// Distinct cubic-equivalent directions of a crystal direction (unit length).
std::vector<Eigen::Vector3d> cubic_equivalents(const Eigen::Vector3d& direction);

/// `pole_family` is any representative crystal direction, e.g. (1,0,0) for
/// {100}; `resolution` >= 8.
PoleDensity pole_density(const Mve& mve, const Eigen::Vector3d& pole_family, int resolution);

} // namespace mvedoe
