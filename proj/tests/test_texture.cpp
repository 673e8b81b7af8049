#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "mvedoe/mve.hpp"
#include "mvedoe/texture.hpp"

using namespace mvedoe;
using cd = std::complex<double>;

namespace {

// <l m| exp(-i beta J_y) |l n> from the spectral decomposition of J_y.
Eigen::MatrixXd wigner_d_matrix(int l, double beta) {
  const int dim = 2 * l + 1;
  Eigen::MatrixXcd jy = Eigen::MatrixXcd::Zero(dim, dim);
  for (int m = -l; m < l; ++m) {
    // J+ |m> = sqrt(l(l+1) - m(m+1)) |m+1>
    const double c = std::sqrt(static_cast<double>(l * (l + 1) - m * (m + 1)));
    const int row = m + 1 + l, col = m + l;
    jy(row, col) += c / cd(0.0, 2.0);
    jy(col, row) -= c / cd(0.0, 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(jy);
  Eigen::VectorXcd phase(dim);
  for (int i = 0; i < dim; ++i) phase[i] = std::exp(cd(0.0, -beta * es.eigenvalues()[i]));
  const Eigen::MatrixXcd u = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  return u.real();
}

Orientation random_orientation(Rng& rng) { return uniform_orientation(rng); }

Mve single_crystal(const Orientation& o, int n = 8) {
  Mve m;
  m.dims = {n, n, n};
  m.grain_id.assign(m.dims.voxels(), 0);
  m.grain_orientations = {o};
  return m;
}

} // namespace

TEST_SUITE("texture") {

TEST_CASE("euler_to_rotation basic cases") {
  CHECK(euler_to_rotation({0, 0, 0}).isApprox(Eigen::Matrix3d::Identity(), 1e-15));
  // Passive 90 degree rotation about z: sample x maps to crystal -y.
  const auto g = euler_to_rotation({kPi / 2, 0, 0});
  Eigen::Matrix3d expect;
  expect << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  CHECK((g - expect).norm() < 1e-15);
}

TEST_CASE("euler_to_rotation is the product Rz(phi2) Rx(Phi) Rz(phi1)") {
  auto rz = [](double a) {
    Eigen::Matrix3d r;
    r << std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a), 0, 0, 0, 1;
    return r;
  };
  auto rx = [](double a) {
    Eigen::Matrix3d r;
    r << 1, 0, 0, 0, std::cos(a), std::sin(a), 0, -std::sin(a), std::cos(a);
    return r;
  };
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const Orientation o{uniform(rng, 0, kTwoPi), uniform(rng, 0, kPi), uniform(rng, 0, kTwoPi)};
    const auto g = euler_to_rotation(o);
    CHECK((g - rz(o.phi2) * rx(o.Phi) * rz(o.phi1)).norm() < 1e-14);
    CHECK((g.transpose() * g - Eigen::Matrix3d::Identity()).norm() < 1e-14);
    CHECK(g.determinant() == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("euler round trip") {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const Orientation o = random_orientation(rng);
    const Orientation back = rotation_to_euler(euler_to_rotation(o));
    CHECK((euler_to_rotation(back) - euler_to_rotation(o)).norm() < 1e-12);
    if (o.Phi > 1e-6 && o.Phi < kPi - 1e-6) {
      CHECK(back.phi1 == doctest::Approx(o.phi1).epsilon(1e-9));
      CHECK(back.Phi == doctest::Approx(o.Phi).epsilon(1e-9));
      CHECK(back.phi2 == doctest::Approx(o.phi2).epsilon(1e-9));
    }
  }
  // Gimbal pole keeps the matrix.
  const Orientation pole{0.3, 0.0, 0.4};
  const auto back = rotation_to_euler(euler_to_rotation(pole));
  CHECK(back.phi2 == 0.0);
  CHECK(back.phi1 == doctest::Approx(0.7));
}

TEST_CASE("cubic symmetry group") {
  const auto& ops = cubic_symmetry_ops();
  CHECK(ops[0].isIdentity(0.0));
  for (std::size_t i = 0; i < ops.size(); ++i) {
    CHECK(ops[i].determinant() == doctest::Approx(1.0));
    for (std::size_t j = 0; j < i; ++j) CHECK((ops[i] - ops[j]).norm() > 0.5);
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const Eigen::Matrix3d p = ops[i] * ops[j];
      bool found = false;
      for (const auto& q : ops) found = found || (p - q).norm() < 1e-12;
      CHECK(found);
    }
  }
}

TEST_CASE("wigner small d matches exp(-i beta Jy)") {
  for (double beta : {0.0, 0.3, 1.1, kPi / 2, 2.5, kPi}) {
    const auto d = wigner_d_matrix(4, beta);
    for (int m = -4; m <= 4; ++m)
      for (int n = -4; n <= 4; ++n) CHECK(std::abs(wigner_small_d(4, m, n, beta) - d(m + 4, n + 4)) < 1e-12);
  }
  // Lower degrees through the same series.
  for (int l = 0; l <= 3; ++l) {
    const auto d = wigner_d_matrix(l, 0.77);
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) CHECK(std::abs(wigner_small_d(l, m, n, 0.77) - d(m + l, n + l)) < 1e-12);
  }
}

TEST_CASE("gsh basis at identity from direct series") {
  const auto t = gsh_basis({0, 0, 0});
  // d^4_{mn}(0) = delta_mn: only n in {0, +-4} survive.
  for (int n = -4; n <= 4; ++n) {
    double expect = 0.0;
    if (n == 0) expect = std::sqrt(7.0 / 12.0);
    if (std::abs(n) == 4) expect = std::sqrt(5.0 / 24.0);
    CHECK(std::abs(t[n + 4] - cd(expect, 0.0)) < 1e-14);
  }
  // Generic angles against the eigen-decomposed Wigner matrix.
  const Orientation o{0.4, 1.2, 2.2};
  const auto d = wigner_d_matrix(4, o.Phi);
  const auto tb = gsh_basis(o);
  for (int n = -4; n <= 4; ++n) {
    cd sum = 0.0;
    for (int m : {-4, 0, 4}) {
      const double a = m == 0 ? std::sqrt(7.0 / 12.0) : std::sqrt(5.0 / 24.0);
      sum += a * std::exp(cd(0, m * o.phi2)) * d(m + 4, n + 4) * std::exp(cd(0, n * o.phi1));
    }
    CHECK(std::abs(tb[n + 4] - sum) < 1e-12);
  }
}

TEST_CASE("gsh basis is invariant under the cubic group") {
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Orientation o = random_orientation(rng);
    const auto t = gsh_basis(o);
    for (const auto& s : cubic_symmetry_ops()) {
      const auto ts = gsh_basis(rotation_to_euler(s * euler_to_rotation(o)));
      for (int k = 0; k < kGshTerms; ++k) worst = std::max(worst, std::abs(ts[k] - t[k]));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("gsh conjugation relation") {
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    const auto t = gsh_basis(random_orientation(rng));
    for (int n = -4; n <= 4; ++n) {
      const double sign = (n % 2 == 0) ? 1.0 : -1.0;
      CHECK(std::abs(t[-n + 4] - sign * std::conj(t[n + 4])) < 1e-10);
    }
  }
}

TEST_CASE("gsh orthogonality by Monte Carlo over SO(3)") {
  Rng rng(5);
  const int samples = 1'000'000;
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(kGshTerms, kGshTerms);
  for (int s = 0; s < samples; ++s) {
    const auto t = gsh_basis(uniform_orientation(rng));
    for (int a = 0; a < kGshTerms; ++a)
      for (int b = 0; b < kGshTerms; ++b) gram(a, b) += t[a] * std::conj(t[b]);
  }
  gram /= samples;
  for (int a = 0; a < kGshTerms; ++a)
    for (int b = 0; b < kGshTerms; ++b) CHECK(std::abs(gram(a, b) - cd(a == b ? 1.0 / 9.0 : 0.0)) < 1e-3);
}

TEST_CASE("uniform orientations average the basis to zero") {
  Rng rng(6);
  const int n = 100'000;
  GshVector sum{};
  double single_max = 0.0;
  for (int s = 0; s < n; ++s) {
    const auto t = gsh_basis(uniform_orientation(rng));
    for (int k = 0; k < kGshTerms; ++k) {
      sum[k] += t[k];
      single_max = std::max(single_max, std::abs(t[k]));
    }
  }
  for (int k = 0; k < kGshTerms; ++k) CHECK(std::abs(sum[k]) / n < 3.0 * single_max / std::sqrt(n));
}

TEST_CASE("uniform orientation mean rotation matrix vanishes") {
  Rng rng(7);
  const int n = 100'000;
  Eigen::Matrix3d mean = Eigen::Matrix3d::Zero();
  for (int i = 0; i < n; ++i) mean += euler_to_rotation(uniform_orientation(rng));
  mean /= n;
  CHECK(mean.cwiseAbs().maxCoeff() < 5.0 / std::sqrt(n));
}

TEST_CASE("fiber orientations align crystal and sample axes") {
  CHECK(fiber_orientation({0, 0, 1}, {0, 0, 1}, 0.0) == Orientation{0, 0, 0});
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d c = random_unit_vector(rng), s = random_unit_vector(rng);
    const auto g = euler_to_rotation(fiber_orientation(c, s, uniform(rng, 0, kTwoPi)));
    CHECK((g.transpose() * c - s).norm() < 1e-12);
  }
}

TEST_CASE("perturbation offsets each Euler angle by at most the half-width") {
  Rng rng(9);
  const double h = 10.0 * kPi / 180.0;
  auto wrapped = [](double d) { return std::abs(std::remainder(d, kTwoPi)); };
  for (int i = 0; i < 500; ++i) {
    const Orientation o{uniform(rng, 0, kTwoPi), uniform(rng, 0.5, kPi - 0.5), uniform(rng, 0, kTwoPi)};
    const Orientation p = perturb_orientation(o, 10.0, rng);
    CHECK(wrapped(p.phi1 - o.phi1) <= h + 1e-12);
    CHECK(std::abs(p.Phi - o.Phi) <= h + 1e-12);
    CHECK(wrapped(p.phi2 - o.phi2) <= h + 1e-12);
  }
}

TEST_CASE("gsh coefficients of a single crystal and a permuted copy") {
  const Orientation o{0.5, 0.9, 1.7};
  const auto f = gsh_coefficients(single_crystal(o));
  const auto t = gsh_basis(o);
  for (int k = 0; k < kGshTerms; ++k) CHECK(std::abs(f[k] - 9.0 * std::conj(t[k])) < 1e-12);

  const Mve m = generate_mve({16, 16, 16}, 4, {}, 11);
  Mve perm = m;
  std::reverse(perm.grain_id.begin(), perm.grain_id.end());
  const auto a = gsh_coefficients(m), b = gsh_coefficients(perm);
  for (int k = 0; k < kGshTerms; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-13);
}

TEST_CASE("many-grain uniform MVE has small coefficients") {
  const Mve m = generate_mve({32, 32, 32}, 4, {}, 12);
  REQUIRE(m.grain_count() >= 400);
  // Grains are volume-weighted; the effective sample count is 1 / sum(w^2).
  double sum_w2 = 0.0;
  for (auto c : m.grain_voxel_counts()) {
    const double w = static_cast<double>(c) / static_cast<double>(m.voxel_count());
    sum_w2 += w * w;
  }
  const double single_max = 9.0 * (std::sqrt(7.0 / 12.0) + 2.0 * std::sqrt(5.0 / 24.0));
  const auto f = gsh_coefficients(m);
  for (int k = 0; k < kGshTerms; ++k) CHECK(std::abs(f[k]) < 3.0 * single_max * std::sqrt(sum_w2));
}

TEST_CASE("pole density") {
  const Mve sc = single_crystal({0, 0, 0});
  const auto pd = pole_density(sc, {1, 0, 0}, 16);
  double mean = 0.0;
  int occupied = 0;
  for (double v : pd.density) {
    mean += v;
    occupied += v > 0.0;
  }
  mean /= static_cast<double>(pd.density.size());
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(occupied == 3);

  const Mve uni = generate_mve({32, 32, 32}, 4, {}, 13);
  const auto pu = pole_density(uni, {1, 0, 0}, 8);
  double umean = 0.0, dev = 0.0;
  for (double v : pu.density) {
    umean += v;
    dev = std::max(dev, std::abs(v - 1.0));
  }
  CHECK(umean / pu.density.size() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(dev < 1.0);

  CHECK_THROWS(pole_density(sc, {1, 0, 0}, 4));
}

TEST_CASE("cubic equivalents") {
  CHECK(cubic_equivalents({1, 0, 0}).size() == 6);
  CHECK(cubic_equivalents({1, 1, 1}).size() == 8);
  CHECK(cubic_equivalents({1, 1, 0}).size() == 12);
}

} // TEST_SUITE
