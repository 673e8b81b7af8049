#include "mvedoe/texture.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Geometry>

#include "mvedoe/error.hpp"
#include "mvedoe/io.hpp"
#include "mvedoe/mve.hpp"

namespace mvedoe {

namespace {

double wrap_two_pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

} // namespace

RotationMatrix euler_to_rotation(const Orientation& o) {
  const double c1 = std::cos(o.phi1), s1 = std::sin(o.phi1);
  const double c = std::cos(o.Phi), s = std::sin(o.Phi);
  const double c2 = std::cos(o.phi2), s2 = std::sin(o.phi2);
  RotationMatrix g;
  g << c1 * c2 - s1 * s2 * c, s1 * c2 + c1 * s2 * c, s2 * s,
      -c1 * s2 - s1 * c2 * c, -s1 * s2 + c1 * c2 * c, c2 * s,
      s1 * s, -c1 * s, c;
  return g;
}

Orientation rotation_to_euler(const RotationMatrix& g) {
  Orientation o;
  const double sin_Phi = std::hypot(g(0, 2), g(1, 2));
  if (sin_Phi > 1e-10) {
    o.Phi = std::atan2(sin_Phi, g(2, 2));
    o.phi1 = std::atan2(g(2, 0), -g(2, 1));
    o.phi2 = std::atan2(g(0, 2), g(1, 2));
  } else {
    o.Phi = g(2, 2) > 0.0 ? 0.0 : kPi;
    o.phi1 = std::atan2(g(0, 1), g(0, 0));
    o.phi2 = 0.0;
  }
  o.phi1 = wrap_two_pi(o.phi1);
  o.phi2 = wrap_two_pi(o.phi2);
  return o;
}

Orientation canonicalize(const Orientation& o) {
  if (o.Phi >= 0.0 && o.Phi <= kPi)
    return {wrap_two_pi(o.phi1), o.Phi, wrap_two_pi(o.phi2)};
  return rotation_to_euler(euler_to_rotation(o));
}

RotationMatrix axis_angle(const Eigen::Vector3d& axis, double angle) {
  const Eigen::Vector3d k = axis.normalized();
  Eigen::Matrix3d K;
  K << 0.0, -k.z(), k.y(),
      k.z(), 0.0, -k.x(),
      -k.y(), k.x(), 0.0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * K + (1.0 - std::cos(angle)) * K * K;
}

const std::array<RotationMatrix, 24>& cubic_symmetry_ops() {
  static const std::array<RotationMatrix, 24> ops = [] {
    std::array<RotationMatrix, 24> out;
    std::array<int, 3> perm{0, 1, 2};
    std::size_t count = 0;
    do {
      for (int signs = 0; signs < 8; ++signs) {
        RotationMatrix m = RotationMatrix::Zero();
        for (int r = 0; r < 3; ++r) m(r, perm[r]) = (signs >> r) & 1 ? -1.0 : 1.0;
        if (m.determinant() > 0.0) out[count++] = m;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
  }();
  return ops;
}

Eigen::Vector3d random_unit_vector(Rng& rng) {
  const double z = uniform(rng, -1.0, 1.0);
  const double az = uniform(rng, 0.0, kTwoPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(az), r * std::sin(az), z};
}

TextureSpec TextureSpec::fiber(const Eigen::Vector3d& crystal_axis,
                               const Eigen::Vector3d& sample_axis,
                               double perturbation_deg) {
  TextureSpec t;
  t.kind = Kind::Fiber;
  t.crystal_axis = crystal_axis;
  t.sample_axis = sample_axis;
  t.perturbation_deg = perturbation_deg;
  return t;
}

void TextureSpec::validate() const {
  if (!(perturbation_deg >= 0.0) || !std::isfinite(perturbation_deg))
    throw InvalidArgument("texture perturbation must be a finite non-negative angle");
  if (kind == Kind::Fiber) {
    if (std::abs(crystal_axis.norm() - 1.0) > 1e-9 || std::abs(sample_axis.norm() - 1.0) > 1e-9)
      throw InvalidArgument("fiber texture axes must be unit vectors");
  }
}

Orientation uniform_orientation(Rng& rng) {
  const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const Eigen::Quaterniond q(b * std::cos(kTwoPi * u3), a * std::sin(kTwoPi * u2),
                             a * std::cos(kTwoPi * u2), b * std::sin(kTwoPi * u3));
  return rotation_to_euler(q.toRotationMatrix());
}

Orientation fiber_orientation(const Eigen::Vector3d& c, const Eigen::Vector3d& s, double spin) {
  const Eigen::Vector3d cu = c.normalized(), su = s.normalized();
  const Eigen::Vector3d cross = cu.cross(su);
  const double sin_a = cross.norm(), cos_a = cu.dot(su);
  RotationMatrix align;
  if (sin_a > 1e-12) {
    align = axis_angle(cross, std::atan2(sin_a, cos_a));
  } else if (cos_a > 0.0) {
    align = RotationMatrix::Identity();
  } else {
    Eigen::Vector3d perp = cu.cross(Eigen::Vector3d::UnitX());
    if (perp.norm() < 1e-6) perp = cu.cross(Eigen::Vector3d::UnitY());
    align = axis_angle(perp, kPi);
  }
  const RotationMatrix crystal_to_sample = axis_angle(su, spin) * align;
  return rotation_to_euler(crystal_to_sample.transpose());
}

Orientation perturb_orientation(const Orientation& o, double max_deg, Rng& rng) {
  const double h = max_deg * kPi / 180.0;
  Orientation p{o.phi1 + uniform(rng, -h, h), o.Phi + uniform(rng, -h, h), o.phi2 + uniform(rng, -h, h)};
  return canonicalize(p);
}

Orientation sample_orientation(const TextureSpec& spec, Rng& rng) {
  spec.validate();
  Orientation o = spec.kind == TextureSpec::Kind::Uniform
                      ? uniform_orientation(rng)
                      : fiber_orientation(spec.crystal_axis, spec.sample_axis, uniform(rng, 0.0, kTwoPi));
  if (spec.perturbation_deg > 0.0) o = perturb_orientation(o, spec.perturbation_deg, rng);
  return o;
}

double wigner_small_d(int l, int m, int n, double beta) {
  if (std::abs(m) > l || std::abs(n) > l) return 0.0;
  const double c = std::cos(0.5 * beta), s = std::sin(0.5 * beta);
  const double pre = std::sqrt(factorial(l + m) * factorial(l - m) * factorial(l + n) * factorial(l - n));
  double sum = 0.0;
  for (int k = std::max(0, n - m); k <= std::min(l + n, l - m); ++k) {
    const double sign = ((m - n + k) % 2 == 0) ? 1.0 : -1.0;
    const double denom = factorial(l + n - k) * factorial(k) * factorial(m - n + k) * factorial(l - m - k);
    sum += sign / denom * std::pow(c, 2 * l + n - m - 2 * k) * std::pow(s, m - n + 2 * k);
  }
  return pre * sum;
}

GshVector gsh_basis(const Orientation& o) {
  static const double a0 = std::sqrt(7.0 / 12.0);
  static const double a4 = std::sqrt(5.0 / 24.0);
  constexpr std::array<int, 3> ms{-4, 0, 4};
  const std::array<double, 3> weights{a4, a0, a4};

  GshVector out{};
  for (int n = -kGshDegree; n <= kGshDegree; ++n) {
    std::complex<double> acc{};
    for (std::size_t j = 0; j < ms.size(); ++j) {
      const int m = ms[j];
      acc += weights[j] * std::polar(1.0, m * o.phi2) * wigner_small_d(kGshDegree, m, n, o.Phi);
    }
    out[static_cast<std::size_t>(n + kGshDegree)] = acc * std::polar(1.0, n * o.phi1);
  }
  return out;
}

GshVector gsh_coefficients(const Mve& mve) {
  const auto counts = mve.grain_voxel_counts();
  const double volume = static_cast<double>(mve.voxel_count());
  GshVector f{};
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] == 0) continue;
    const GshVector t = gsh_basis(mve.grain_orientations[g]);
    const double w = static_cast<double>(counts[g]) / volume;
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += w * std::conj(t[k]);
  }
  for (auto& v : f) v *= static_cast<double>(2 * kGshDegree + 1);
  return f;
}

// ---------------------------------------------------------------------------

namespace {

const double kSquareHalf = std::sqrt(kPi / 2.0);

Eigen::Vector3d fold_upper(Eigen::Vector3d v) {
  constexpr double eps = 1e-12;
  const bool flip = v.z() < -eps ||
                    (std::abs(v.z()) <= eps && (v.y() < -eps || (std::abs(v.y()) <= eps && v.x() < 0.0)));
  return flip ? Eigen::Vector3d(-v) : v;
}

int to_bin(double coord, int resolution) {
  const int b = static_cast<int>(std::floor((coord + kSquareHalf) / (2.0 * kSquareHalf) * resolution));
  return std::clamp(b, 0, resolution - 1);
}

} // namespace

std::pair<int, int> equal_area_bin(const Eigen::Vector3d& v, int resolution) {
  const Eigen::Vector3d u = fold_upper(v.normalized());
  const double scale = std::sqrt(2.0 / (1.0 + u.z()));
  const double X = scale * u.x(), Y = scale * u.y();
  const double r = std::hypot(X, Y);
  double a = 0.0, b = 0.0;
  const double sqrt_pi = std::sqrt(kPi);
  if (r > 0.0) {
    if (std::abs(Y) <= std::abs(X)) {
      const double sgn = X >= 0.0 ? 1.0 : -1.0;
      a = sgn * r * sqrt_pi / 2.0;
      b = sgn * r * (2.0 / sqrt_pi) * std::atan(Y / X);
    } else {
      const double sgn = Y >= 0.0 ? 1.0 : -1.0;
      b = sgn * r * sqrt_pi / 2.0;
      a = sgn * r * (2.0 / sqrt_pi) * std::atan(X / Y);
    }
  }
  return {to_bin(b, resolution), to_bin(a, resolution)};
}

std::pair<double, double> PoleDensity::bin_center(int row, int col) const {
  const double cell = 2.0 * kSquareHalf / resolution;
  const double a = -kSquareHalf + (col + 0.5) * cell;
  const double b = -kSquareHalf + (row + 0.5) * cell;
  const double sqrt_pi = std::sqrt(kPi);
  double X = 0.0, Y = 0.0;
  if (std::abs(b) <= std::abs(a)) {
    X = 2.0 * a / sqrt_pi * std::cos(b * kPi / (4.0 * a));
    Y = 2.0 * a / sqrt_pi * std::sin(b * kPi / (4.0 * a));
  } else {
    X = 2.0 * b / sqrt_pi * std::sin(a * kPi / (4.0 * b));
    Y = 2.0 * b / sqrt_pi * std::cos(a * kPi / (4.0 * b));
  }
  const double r2 = X * X + Y * Y;
  const double f = std::sqrt(std::max(0.0, 1.0 - r2 / 4.0));
  const double z = std::clamp(1.0 - r2 / 2.0, -1.0, 1.0);
  double az = std::atan2(Y * f, X * f);
  if (az < 0.0) az += kTwoPi;
  return {az, std::acos(z)};
}

void PoleDensity::write_csv(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << "azimuth,polar,density\n";
  for (int r = 0; r < resolution; ++r)
    for (int c = 0; c < resolution; ++c) {
      const auto [az, pol] = bin_center(r, c);
      out << io::format_double(az) << ',' << io::format_double(pol) << ',' << io::format_double(at(r, c))
          << '\n';
    }
  io::write_text(path, out.str());
}

std::vector<Eigen::Vector3d> cubic_equivalents(const Eigen::Vector3d& direction) {
  const Eigen::Vector3d d = direction.normalized();
  std::vector<Eigen::Vector3d> out;
  for (const auto& op : cubic_symmetry_ops()) {
    const Eigen::Vector3d v = op * d;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const Eigen::Vector3d& w) {
      return (w - v).norm() < 1e-9;
    });
    if (!seen) out.push_back(v);
  }
  return out;
}

PoleDensity pole_density(const Mve& mve, const Eigen::Vector3d& pole_family, int resolution) {
  if (resolution < 8) throw InvalidArgument("pole figure resolution must be >= 8");
  if (!(pole_family.norm() > 0.0)) throw InvalidArgument("pole family direction must be non-zero");

  PoleDensity pd;
  {
    std::ostringstream label;
    label << '{' << pole_family.x() << pole_family.y() << pole_family.z() << '}';
    pd.family = label.str();
  }
  pd.resolution = resolution;
  pd.density.assign(static_cast<std::size_t>(resolution) * resolution, 0.0);

  const auto poles = cubic_equivalents(pole_family);
  const auto counts = mve.grain_voxel_counts();
  double total = 0.0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (counts[g] == 0) continue;
    const RotationMatrix to_sample = euler_to_rotation(mve.grain_orientations[g]).transpose();
    for (const auto& p : poles) {
      const auto [row, col] = equal_area_bin(to_sample * p, resolution);
      pd.density[static_cast<std::size_t>(row) * resolution + col] += static_cast<double>(counts[g]);
      total += static_cast<double>(counts[g]);
    }
  }
  const double per_bin = total / static_cast<double>(pd.density.size());
  for (auto& d : pd.density) d /= per_bin;
  return pd;
}

} // namespace mvedoe
