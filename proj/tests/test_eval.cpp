#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "mvedoe/error.hpp"
#include "mvedoe/eval.hpp"

using namespace mvedoe;

namespace {

RowMatrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform01(rng);
  return m;
}

RowMatrix knn_brute(const RowMatrix& tx, const RowMatrix& ty, const RowMatrix& qx, int k) {
  RowMatrix out(qx.rows(), ty.cols());
  for (Eigen::Index q = 0; q < qx.rows(); ++q) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index t = 0; t < tx.rows(); ++t) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < tx.cols(); ++c) s += (tx(t, c) - qx(q, c)) * (tx(t, c) - qx(q, c));
      all.emplace_back(s, t);
    }
    std::sort(all.begin(), all.end());
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(ty.cols());
    double wsum = 0.0;
    for (int j = 0; j < k; ++j) {
      acc += ty.row(all[static_cast<std::size_t>(j)].second) / all[static_cast<std::size_t>(j)].first;
      wsum += 1.0 / all[static_cast<std::size_t>(j)].first;
    }
    out.row(q) = acc / wsum;
  }
  return out;
}

struct Synthetic {
  std::vector<int> strata;
  RowMatrix x;
  RowMatrix y;
};

Synthetic synthetic(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Synthetic s;
  s.x = random_matrix(static_cast<Eigen::Index>(n), 3, rng);
  s.y.resize(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    s.y(i, 0) = std::sin(4 * s.x(i, 0)) + s.x(i, 1);
    s.y(i, 1) = s.x(i, 2) * s.x(i, 2);
    s.strata.push_back(static_cast<int>(i % 4));
  }
  return s;
}

} // namespace

TEST_SUITE("eval") {

TEST_CASE("split pool") {
  std::vector<int> strata;
  for (int i = 0; i < 120; ++i) strata.push_back(4 + i % 6);
  const auto a = split_pool(strata, 0.2, 1);
  CHECK(a.validation.size() == 24);
  CHECK(a.pool.size() == 96);
  const auto b = split_pool(strata, 0.2, 1);
  CHECK(a.validation == b.validation);
  CHECK(a.pool == b.pool);
  CHECK(split_pool(strata, 0.2, 2).validation != a.validation);
  a.validate(120);
  std::set<int> val_strata, pool_strata;
  for (auto i : a.validation) val_strata.insert(strata[i]);
  for (auto i : a.pool) pool_strata.insert(strata[i]);
  CHECK(val_strata.size() == 6);
  CHECK(pool_strata.size() == 6);

  // Uneven strata still appear on both sides.
  std::vector<int> uneven(50, 0);
  uneven[0] = uneven[1] = 1;
  const auto u = split_pool(uneven, 0.2, 3);
  CHECK(u.validation.size() == 10);
  CHECK(std::count_if(u.validation.begin(), u.validation.end(), [&](std::size_t i) { return uneven[i] == 1; }) == 1);
  CHECK_THROWS_AS(split_pool(strata, 0.0, 1), InvalidArgument);
}

TEST_CASE("knn against brute force") {
  Rng rng(2);
  const RowMatrix tx = random_matrix(100, 4, rng), ty = random_matrix(100, 3, rng), qx = random_matrix(30, 4, rng);
  for (int k : {1, 3, 8, 100}) {
    const RowMatrix a = knn_predict(tx, ty, qx, k), b = knn_brute(tx, ty, qx, k);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
  // Exact match returns the stored target.
  const RowMatrix hit = knn_predict(tx, ty, tx.topRows(5), 8);
  CHECK(hit == ty.topRows(5));
  // Equidistant neighbours average uniformly.
  RowMatrix sx(4, 2);
  sx << 1, 0, -1, 0, 0, 1, 0, -1;
  RowMatrix sy(4, 1);
  sy << 1, 2, 3, 6;
  CHECK(knn_predict(sx, sy, RowMatrix::Zero(1, 2), 4)(0, 0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(knn_predict(sx, sy, RowMatrix::Zero(1, 2), 5), InvalidArgument);
}

TEST_CASE("adding a training point keeps exact-match predictions") {
  Rng rng(3);
  const RowMatrix tx = random_matrix(20, 3, rng), ty = random_matrix(20, 2, rng);
  const RowMatrix q = tx.middleRows(4, 3);
  RowMatrix tx2(21, 3), ty2(21, 2);
  tx2 << tx, random_matrix(1, 3, rng);
  ty2 << ty, random_matrix(1, 2, rng);
  CHECK(knn_predict(tx, ty, q, 5) == knn_predict(tx2, ty2, q, 5));
}

TEST_CASE("target scaling") {
  RowMatrix y(4, 2);
  y << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto s = TargetScaling::fit(y);
  CHECK(s.scale[1] == 1.0);
  CHECK(s.scale[0] == doctest::Approx(std::sqrt(1.25)));
  const auto z = s.apply(y);
  CHECK(z.col(1).isZero(0.0));
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
}

TEST_CASE("evaluate design") {
  const auto s = synthetic(200, 4);
  SplitPlan plan = split_pool(s.strata, 0.2, 5);
  const double full = evaluate_design(plan.pool, s.x, s.y, plan);
  CHECK(full == evaluate_design(plan.pool, s.x, s.y, plan));
  CHECK(full >= 0.0);
  std::vector<std::size_t> few(plan.pool.begin(), plan.pool.begin() + 10);
  CHECK(evaluate_design(few, s.x, s.y, plan) >= 0.0);
  CHECK(evaluate_design(few, s.x, s.y, plan) > full);

  SplitPlan shuffled = plan;
  std::reverse(shuffled.validation.begin(), shuffled.validation.end());
  CHECK(evaluate_design(plan.pool, s.x, s.y, shuffled) == doctest::Approx(full).epsilon(1e-14));

  std::vector<std::size_t> bad{plan.validation.front()};
  CHECK_THROWS_AS(evaluate_design(bad, s.x, s.y, plan), InvalidArgument);
}

TEST_CASE("memorized validation rows give zero loss") {
  // Every validation row has an identical twin in the pool.
  Rng rng(6);
  const RowMatrix base = random_matrix(20, 3, rng), ty = random_matrix(20, 2, rng);
  RowMatrix x(40, 3), y(40, 2);
  x << base, base;
  y << ty, ty;
  SplitPlan plan;
  for (std::size_t i = 0; i < 20; ++i) plan.validation.push_back(i);
  for (std::size_t i = 20; i < 40; ++i) plan.pool.push_back(i);
  CHECK(evaluate_design(plan.pool, x, y, plan) == 0.0);
}

TEST_CASE("bootstrap std") {
  const std::vector<double> constant(10, 3.0);
  CHECK(bootstrap_std(constant, 500, 1) == 0.0);
  std::vector<double> v;
  Rng rng(7);
  for (int i = 0; i < 50; ++i) v.push_back(standard_normal(rng));
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 50.0;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  const double expect = std::sqrt(var / 50.0) / std::sqrt(50.0);
  CHECK(bootstrap_std(v, 20000, 2) == doctest::Approx(expect).epsilon(0.05));
  CHECK(bootstrap_std(v, 1000, 3) == bootstrap_std(v, 1000, 3));
}

TEST_CASE("improvement report") {
  const auto s = synthetic(240, 8);
  SplitPlan plan = split_pool(s.strata, 0.2, 9);
  plan.fractions = {0.1, 0.25};
  plan.replicates = 10;
  FeatureMatrix f;
  f.values = s.x;
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) f.ids.push_back(std::to_string(i));
  const std::vector<NamedFeatures> sets{{"a", f}, {"b", f}};
  ReportConfig rc;
  rc.seed = 10;
  const auto rows = improvement_report(sets, s.y, plan, rc, 2);
  CHECK(rows.size() == 2 * 4 * 2 * 10);
  const auto again = improvement_report(sets, s.y, plan, rc, 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].loss_design == again[i].loss_design);
    CHECK(rows[i].improvement_pct == again[i].improvement_pct);
    CHECK(rows[i].bootstrap_std == again[i].bootstrap_std);
  }
  for (const auto& cell : summarize(rows)) {
    if (cell.criterion != Criterion::Random) continue;
    CHECK(std::abs(cell.mean_improvement_pct) < 3.0 * cell.bootstrap_std);
  }
  // Twin is built once per cell.
  for (const auto& r : rows)
    if (r.criterion == Criterion::Twin) {
      const auto& first = *std::find_if(rows.begin(), rows.end(), [&](const EvalRecord& o) {
        return o.criterion == Criterion::Twin && o.feature_set == r.feature_set && o.fraction == r.fraction;
      });
      CHECK(r.loss_design == first.loss_design);
    }

  const auto path = std::filesystem::temp_directory_path() / "mvedoe_test_eval" / "report.csv";
  write_report_csv(path, rows);
  const auto back = read_report_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].feature_set == rows[i].feature_set);
    CHECK(back[i].criterion == rows[i].criterion);
    CHECK(back[i].loss_design == rows[i].loss_design);
    CHECK(back[i].bootstrap_std == rows[i].bootstrap_std);
  }

  FeatureMatrix short_f = f.subset({0, 1, 2});
  const std::vector<NamedFeatures> bad{{"short", short_f}};
  CHECK_THROWS_AS(improvement_report(bad, s.y, plan, rc), InvalidArgument);
}

} // TEST_SUITE
