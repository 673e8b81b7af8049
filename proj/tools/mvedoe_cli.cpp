#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "mvedoe/error.hpp"
#include "mvedoe/pipeline.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kMissingArtifact = 3;

} // namespace

int main(int argc, char** argv) {
  using namespace mvedoe;

  CLI::App app{"Design of experiments over synthetic polycrystal corpora"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string features;
  std::string criterion;
  double fraction = 0.0;
  int k = 0;
  bool quiet = false;

  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_out = app.add_option("--out", out_dir, "Output directory (overrides config.output)");
  auto* o_seed = app.add_option("--seed", seed, "Master seed (overrides config.seed)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* o_features = app.add_option("--features", features, "classic, contrastive or external:PATH (comma-separated)");
  auto* o_criterion = app.add_option("--criterion", criterion, "cmm, maxpro, twin or random");
  auto* o_fraction = app.add_option("--fraction", fraction, "Design fraction of the candidate pool");
  auto* o_k = app.add_option("--k", k, "Neighbours in the k-NN surrogate");
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");

  const std::map<std::string, std::string> help{
      {"gen", "Generate the MVE corpus"},
      {"featurize", "Compute the configured feature sets"},
      {"embed-train", "Train the contrastive embedding"},
      {"embed", "Embed the corpus with a trained model"},
      {"design", "Build designs for every feature set, criterion and fraction"},
      {"oracle", "Evaluate iso-strain stress summaries"},
      {"evaluate", "Score designs with the k-NN surrogate"},
      {"report", "Summarize the evaluation report"},
      {"demo-fig5", "Designs on the 1000 uniform + 500 normal comparison cloud"},
      {"all", "gen, featurize, design, oracle, evaluate, report"}};
  for (const auto& [name, desc] : help) app.add_subcommand(name, desc)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    const bool seed_given = o_seed->count() > 0;
    RunConfig config;
    if (o_config->count())
      config = load_config(config_path, !seed_given);
    else if (sub != "demo-fig5" && !seed_given)
      throw ConfigError("no --config given; pass --config PATH or at least --seed");

    ConfigOverrides ov;
    if (o_out->count()) ov.output = out_dir;
    if (seed_given) ov.seed = seed;
    if (o_features->count()) ov.features = features;
    if (o_criterion->count()) ov.criterion = criterion;
    if (o_fraction->count()) ov.fraction = fraction;
    if (o_k->count()) ov.k = k;
    apply_overrides(config, ov);

    Pipeline p(config, jobs, !quiet);
    if (sub == "gen") p.gen();
    else if (sub == "featurize") p.featurize();
    else if (sub == "embed-train") p.embed_train();
    else if (sub == "embed") p.embed();
    else if (sub == "design") p.design();
    else if (sub == "oracle") p.oracle();
    else if (sub == "evaluate") p.evaluate();
    else if (sub == "report") p.report();
    else if (sub == "demo-fig5") p.demo_fig5();
    else p.run_all();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingArtifact;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
