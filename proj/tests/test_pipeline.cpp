#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "mvedoe/error.hpp"
#include "mvedoe/pipeline.hpp"

using namespace mvedoe;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mvedoe_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig tiny(const fs::path& out) {
  RunConfig c = parse_config(R"({
    "seed": 5,
    "corpus": {"dims": [24, 24, 24], "grain_sizes": [4, 6, 12], "seeds_per_size": 4, "textured_count": 12},
    "embedding": {"epochs": 3},
    "design": {"fractions": [0.25], "replicates": 3, "random_baseline": 2, "bootstrap": 50}
  })");
  c.output = out;
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MVEDOE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config parsing") {
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_NOTHROW(parse_config("{}", false));
  CHECK_THROWS_AS(parse_config("{\"seed\": 1, \"bogus\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": 1, \"design\": {\"criteria\": [\"best\"]}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": -1}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": 1, \"features\": [\"external:/no/such/file.csv\"]}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": 1, \"corpus\": {\"grain_sizes\": [40]}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"seed\": 1, \"oracle\": {\"c11\": 100, \"c12\": 150}}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{seed: 1}"), ConfigError);

  const auto c = parse_config(R"({"seed": 42, "evaluation": {"k": 5}, "design": {"criteria": ["twin"]}})");
  CHECK(c.seed == 42);
  CHECK(c.k == 5);
  CHECK(c.criteria == std::vector<Criterion>{Criterion::Twin});
  CHECK(c.corpus.total() == 6825);
}

TEST_CASE("config hash ignores the output directory") {
  RunConfig a = desk_config(1), b = desk_config(1);
  b.output = "/elsewhere";
  CHECK(a.hash() == b.hash());
  b.k = 3;
  CHECK(a.hash() != b.hash());
  CHECK(desk_config(1).hash() != desk_config(2).hash());
  CHECK(desk_config().corpus.total() == 600);
}

TEST_CASE("overrides") {
  RunConfig c = desk_config();
  ConfigOverrides o;
  o.criterion = "maxpro";
  o.fraction = 0.3;
  o.k = 4;
  o.features = "classic";
  o.seed = 9;
  apply_overrides(c, o);
  CHECK(c.criteria == std::vector<Criterion>{Criterion::MaxPro});
  CHECK(c.fractions == std::vector<double>{0.3});
  CHECK(c.k == 4);
  CHECK(c.features == std::vector<std::string>{"classic"});
  CHECK(c.seed == 9);
  ConfigOverrides bad;
  bad.criterion = "nope";
  CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
}

TEST_CASE("stages report missing upstream artifacts") {
  const auto dir = temp_dir("pipeline_missing");
  Pipeline p(tiny(dir), 1, false);
  CHECK_THROWS_AS(p.featurize(), MissingArtifact);
  CHECK_THROWS_AS(p.design(), MissingArtifact);
  CHECK_THROWS_AS(p.evaluate(), MissingArtifact);
  CHECK_THROWS_AS(p.report(), MissingArtifact);
  CHECK_THROWS_AS(p.embed(), MissingArtifact);
  p.gen();
  CHECK_THROWS_AS(p.design(), MissingArtifact);
  CHECK_THROWS_AS(p.embed(), MissingArtifact);
}

TEST_CASE("end-to-end run is deterministic") {
  const auto a = temp_dir("pipeline_a"), b = temp_dir("pipeline_b");
  Pipeline(tiny(a), 1, false).run_all();
  Pipeline(tiny(b), 3, false).run_all();
  std::size_t compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    REQUIRE(fs::exists(b / rel));
    CHECK_MESSAGE(io::read_text(e.path()) == io::read_text(b / rel), rel.string());
    ++compared;
  }
  CHECK(compared > 40);
  Pipeline p(tiny(a), 1, false);
  const auto records = read_report_csv(p.report_path());
  CHECK(records.size() == 2 * 4 * 1 * 3);
  const std::string head = io::read_text(p.feature_path("classic")).substr(0, 120);
  CHECK(head.find("config=" + tiny(a).hash()) != std::string::npos);

  // Rerunning a stage overwrites its outputs with identical bytes.
  const std::string before = io::read_text(p.feature_path("contrastive"));
  p.featurize();
  CHECK(io::read_text(p.feature_path("contrastive")) == before);
}

TEST_CASE("external features are ingested by id") {
  const auto dir = temp_dir("pipeline_external");
  RunConfig c = tiny(dir);
  c.features = {"classic"};
  Pipeline p(c, 1, false);
  p.gen();
  p.featurize();
  // Write the classic features in reverse row order and ingest them.
  FeatureMatrix f = load_features(p.feature_path("classic"), FeatureFormat::Csv);
  std::vector<std::size_t> rev(f.rows());
  for (std::size_t i = 0; i < rev.size(); ++i) rev[i] = rev.size() - 1 - i;
  save_features_csv(dir / "latents.csv", f.subset(rev));
  c.features = {"external:" + (dir / "latents.csv").string()};
  Pipeline q(c, 1, false);
  q.featurize();
  const auto ext = q.load_feature_set("external");
  CHECK(ext.values == f.values);
  q.design();
  CHECK(fs::exists(q.designs_dir() / "external"));

  save_features_csv(dir / "partial.csv", f.subset({0, 1}));
  c.features = {"external:" + (dir / "partial.csv").string()};
  CHECK_THROWS_AS(Pipeline(c, 1, false).featurize(), FormatError);
}

TEST_CASE("demo-fig5 writes twelve designs") {
  const auto dir = temp_dir("pipeline_fig5");
  RunConfig c = desk_config(3);
  c.output = dir;
  Pipeline p(c, 1, false);
  p.demo_fig5();
  std::size_t designs = 0;
  for (const auto& e : fs::directory_iterator(p.fig5_dir())) designs += e.path().extension() == ".design";
  CHECK(designs == 12);
  CHECK(fs::exists(p.fig5_dir() / "diagnostics.csv"));
  const auto cloud = fig5_cloud(1);
  CHECK(cloud.rows() == 1500);
  CHECK(cloud.values.topRows(1000).cwiseAbs().maxCoeff() <= 5.0);
}

TEST_CASE("cli exit codes") {
  const auto dir = temp_dir("cli");
  CHECK(run_cli("gen") == 2);
  CHECK(run_cli("frobnicate --seed 1") == 2);
  CHECK(run_cli("gen --config " + (dir / "none.json").string()) == 2);
  io::write_text(dir / "bad.json", "{\"seed\": 1, \"nope\": true}");
  CHECK(run_cli("gen --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("design --seed 1 --out " + (dir / "out").string()) == 3);
  CHECK(run_cli("demo-fig5 --seed 1 -q --out " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "fig5" / "cmm_n010.design"));
}

} // TEST_SUITE
