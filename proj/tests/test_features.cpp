#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "mvedoe/error.hpp"
#include "mvedoe/features.hpp"

using namespace mvedoe;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("mvedoe_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

FeatureMatrix random_features(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix f;
  f.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = standard_normal(rng);
  for (std::size_t i = 0; i < n; ++i) f.ids.push_back("r" + std::to_string(i));
  return f;
}

Mve relabeled(const Mve& m) {
  // Reverse the grain label order.
  Mve r = m;
  const auto k = static_cast<std::uint32_t>(m.grain_count());
  for (auto& g : r.grain_id) g = k - 1 - g;
  std::reverse(r.grain_orientations.begin(), r.grain_orientations.end());
  return r;
}

} // namespace

TEST_SUITE("features") {

TEST_CASE("retained GSH components") {
  const auto& mask = gsh_retained_mask();
  // Only Im F^0 vanishes identically.
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) dropped += !mask[i];
  CHECK(dropped == 1);
  CHECK_FALSE(mask[9 + 4]);
  CHECK(gsh_retained_count() == 17);
}

TEST_CASE("classic descriptor") {
  const Mve m = generate_mve({32, 32, 32}, 8, {}, 1);
  const auto d = classic_descriptor(m);
  CHECK(d.size() == 18);
  CHECK(d[17] == doctest::Approx(0.5));
  Mve perm = m;
  std::reverse(perm.grain_id.begin(), perm.grain_id.end());
  CHECK((classic_descriptor(perm) - d).norm() < 1e-13);
  CHECK((classic_descriptor(relabeled(m)) - d).norm() < 1e-13);

  const Mve fine = generate_mve({32, 32, 32}, 4, {}, 2);
  const auto g = classic_descriptor(fine);
  CHECK(g.head(17).cwiseAbs().maxCoeff() < 1.0);
  CHECK(g[17] == doctest::Approx(0.25));
}

TEST_CASE("subvolume statistics") {
  Mve single;
  single.dims = {16, 16, 16};
  single.grain_id.assign(single.dims.voxels(), 0);
  single.grain_orientations = {{0.3, 0.4, 0.5}};
  const auto s = subvolume_statistics(single);
  CHECK(s.size() == 19);
  CHECK(s[17] == 0.0);
  CHECK(s[18] == doctest::Approx(std::log(2.0)));

  Mve checker;
  checker.dims = {4, 4, 4};
  checker.grain_orientations = {{0, 0, 0}, {1, 1, 1}};
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) checker.grain_id.push_back(static_cast<std::uint32_t>((x + y + z) % 2));
  CHECK(interface_density(checker) == 1.0);
}

TEST_CASE("crop statistics track the parent for fine grains") {
  CorpusSpec spec;
  spec.grain_sizes = {4};
  spec.seeds_per_size = 6;
  spec.textured_count = 6;
  spec.seed = 3;
  const auto corpus = generate_corpus(spec);
  Rng rng(4);
  double same = 0.0, other = 0.0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const std::size_t a = uniform_index(rng, corpus.size());
    std::size_t b = uniform_index(rng, corpus.size() - 1);
    if (b >= a) ++b;
    const auto parent = subvolume_statistics(corpus[a]);
    same += (subvolume_statistics(random_crop(corpus[a], 16, rng)) - parent).norm();
    other += (subvolume_statistics(random_crop(corpus[b], 16, rng)) - parent).norm();
  }
  CHECK(same < other);
}

TEST_CASE("min-max normalization") {
  FeatureMatrix f;
  f.ids = {"a", "b", "c"};
  f.values.resize(3, 2);
  f.values << 2, 3, 4, 3, 3, 3;
  const auto n = normalize_features(f);
  CHECK(n.values(0, 0) == 0.0);
  CHECK(n.values(1, 0) == 1.0);
  CHECK(n.values(2, 0) == 0.5);
  for (int i = 0; i < 3; ++i) CHECK(n.values(i, 1) == 0.5);
  REQUIRE(n.normalization);

  const auto r = normalize_features(random_features(40, 5, 1));
  CHECK(r.values.minCoeff() >= 0.0);
  CHECK(r.values.maxCoeff() <= 1.0);
  CHECK(normalize_features(r).values == r.values);

  CHECK_THROWS_AS(normalize_features(f.subset({0})), InvalidArgument);
}

TEST_CASE("distance matrix against a double loop") {
  const auto f = random_features(50, 7, 2);
  const auto d = distance_matrix(f);
  for (Eigen::Index i = 0; i < 50; ++i)
    for (Eigen::Index j = 0; j < 50; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < 7; ++k) s += (f.values(i, k) - f.values(j, k)) * (f.values(i, k) - f.values(j, k));
      CHECK(std::abs(d(i, j) - std::sqrt(s)) < 1e-12);
    }
  FeatureMatrix e;
  e.ids = {"x", "y", "z"};
  e.values = RowMatrix::Zero(3, 4);
  e.values(0, 0) = 1;
  e.values(1, 1) = 1;
  e.values(2, 1) = 1;
  const auto de = distance_matrix(e);
  CHECK(de(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(de(1, 2) == 0.0);

  // Row permutation permutes the matrix.
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const auto dp = distance_matrix(f.subset(perm));
  for (std::size_t i = 0; i < 50; ++i)
    for (std::size_t j = 0; j < 50; ++j)
      CHECK(dp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            d(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j])));
}

TEST_CASE("feature files round trip bit-exactly") {
  const auto dir = temp_dir("features");
  auto f = random_features(12, 512, 3);
  f.values(0, 0) = 1e-300;
  f.values(1, 1) = -0.0;
  save_features_csv(dir / "f.csv", f, {"h", "t"});
  const auto c = load_features(dir / "f.csv", FeatureFormat::Csv);
  CHECK(c.ids == f.ids);
  CHECK(c.values == f.values);
  save_features_binary(dir / "f.bin", f);
  const auto b = load_features(dir / "f.bin", FeatureFormat::Binary);
  CHECK(b.values == f.values);
  CHECK(b.ids.front() == "0");
}

TEST_CASE("malformed feature files") {
  const auto dir = temp_dir("features_bad");
  io::write_text(dir / "nan.csv", "id,f0,f1\na,1,2\nb,nan,3\n");
  try {
    load_features(dir / "nan.csv", FeatureFormat::Csv);
    FAIL("expected throw");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("id 'b'") != std::string::npos);
  }
  io::write_text(dir / "short.csv", "id,f0,f1\na,1,2\nb,3\n");
  CHECK_THROWS_AS(load_features(dir / "short.csv", FeatureFormat::Csv), FormatError);
  io::write_text(dir / "dup.csv", "id,f0\na,1\na,2\n");
  CHECK_THROWS_AS(load_features(dir / "dup.csv", FeatureFormat::Csv), FormatError);
  io::write_text(dir / "hdr.csv", "name,x\na,1\n");
  CHECK_THROWS_AS(load_features(dir / "hdr.csv", FeatureFormat::Csv), FormatError);
  CHECK_THROWS_AS(load_features(dir / "none.csv", FeatureFormat::Csv), Error);
}

TEST_CASE("non-finite values are rejected by distances") {
  auto f = random_features(4, 2, 4);
  f.values(2, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(distance_matrix(f));
}

} // TEST_SUITE
