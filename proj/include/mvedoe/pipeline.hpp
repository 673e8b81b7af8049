#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mvedoe/contrastive.hpp"
#include "mvedoe/design.hpp"
#include "mvedoe/elastic.hpp"
#include "mvedoe/eval.hpp"
#include "mvedoe/features.hpp"
#include "mvedoe/mve.hpp"

namespace mvedoe {

/// Declarative run description, read from a JSON file:
///
///   {
///     "seed": 2024,                                  required
///     "output": "out",
///     "corpus": {"dims": [32,32,32], "grain_sizes": [4,...], "seeds_per_size": 8,
///                "textured_count": 496, "perturbation_deg": 10},
///     "features": ["classic", "contrastive", "external:latents.csv"],
///     "embedding": {"epochs": 300, "batch": 32, "learning_rate": 0.2, "margin": 0.5,
///                   "triplets_per_epoch": 0, "holdout_fraction": 0.1, "heldout_triplets": 512},
///     "design": {"criteria": ["cmm","maxpro","twin","random"], "fractions": [0.1,0.25,0.5],
///                "replicates": 10, "random_baseline": 10, "bootstrap": 1000, "maxpro_k": 2},
///     "evaluation": {"val_fraction": 0.2, "k": 8},
///     "oracle": {"c11": 199, "c12": 128, "c44": 99, "applied": [0,0,50,0,0,0],
///                "smoothing": false, "write_fields": false}
///   }
///
/// Every section and key except "seed" is optional.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  CorpusSpec corpus;
  std::vector<std::string> features{"classic", "contrastive"};
  TrainConfig embedding;
  std::vector<Criterion> criteria{Criterion::Cmm, Criterion::MaxPro, Criterion::Twin, Criterion::Random};
  std::vector<double> fractions{0.10, 0.25, 0.50};
  int replicates = 10;
  int random_baseline = 10;
  int bootstrap = 1000;
  double maxpro_k = 2.0;
  double val_fraction = 0.2;
  int k = 8;
  OracleConfig oracle;
  bool write_fields = false;

  /// Canonical JSON of everything that affects outputs (not the output dir).
  std::string canonical_json() const;
  std::string hash() const;
  Provenance provenance() const { return {hash(), std::string(kToolVersion)}; }

  std::uint64_t corpus_seed() const { return derive_seed(seed, {0xc0}); }
  std::uint64_t embedding_seed() const { return derive_seed(seed, {0xe3}); }
  std::uint64_t split_seed() const { return derive_seed(seed, {0x5b}); }
  std::uint64_t report_seed() const { return derive_seed(seed, {0x4e}); }
  std::uint64_t fig5_seed() const { return derive_seed(seed, {0xf5}); }
};

/// Throws ConfigError for malformed input or a missing seed.
RunConfig parse_config(const std::string& json_text, bool require_seed = true);
RunConfig load_config(const std::filesystem::path& path, bool require_seed = true);

/// Scalar overrides from the command line.
struct ConfigOverrides {
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> features;  // comma-separated
  std::optional<std::string> criterion;
  std::optional<double> fraction;
  std::optional<int> k;
};
void apply_overrides(RunConfig& config, const ConfigOverrides& o);

/// Compact configuration used by the acceptance suite and README walkthrough:
/// ~600 MVEs, mostly textured, with grain sizes 4..16.
RunConfig desk_config(std::uint64_t seed = 2024);

struct CorpusIndexEntry {
  std::string id;
  int grain_size = 0;
  std::string texture;
  std::string file;
};

/// Stage runner. Each stage reads its inputs from, and writes its outputs
/// under, config.output; a missing input raises MissingArtifact.
class Pipeline {
public:
  Pipeline(RunConfig config, int jobs = 1, bool verbose = true);

  void gen();
  void featurize();
  void embed_train();
  void embed();
  void design();
  void oracle();
  void evaluate();
  void report();
  void demo_fig5();

  /// gen, featurize, design, oracle, evaluate, report.
  void run_all();

  const RunConfig& config() const { return config_; }
  std::filesystem::path out() const { return config_.output; }

  std::filesystem::path corpus_index_path() const { return out() / "corpus" / "index.csv"; }
  std::filesystem::path model_path() const { return out() / "model" / "embedding.model"; }
  /// Corpus rows held out from embedding training.
  std::filesystem::path heldout_path() const { return out() / "model" / "heldout.csv"; }
  std::filesystem::path feature_path(const std::string& name) const { return out() / "features" / (name + ".csv"); }
  std::filesystem::path summaries_path() const { return out() / "oracle" / "summaries.csv"; }
  std::filesystem::path split_path() const { return out() / "eval" / "split.csv"; }
  std::filesystem::path report_path() const { return out() / "eval" / "report.csv"; }
  std::filesystem::path summary_path() const { return out() / "eval" / "summary.csv"; }
  std::filesystem::path designs_dir() const { return out() / "designs"; }
  std::filesystem::path fig5_dir() const { return out() / "fig5"; }

  std::vector<CorpusIndexEntry> read_corpus_index() const;
  std::vector<Mve> load_corpus() const;
  /// Feature matrix for a configured feature set, rows in corpus order.
  FeatureMatrix load_feature_set(const std::string& name) const;
  RowMatrix load_targets() const;
  SplitPlan make_split(const std::vector<CorpusIndexEntry>& index) const;
  std::vector<std::size_t> read_heldout_rows() const;

  /// Short name of a feature-set spec ("external:path" -> "external").
  static std::string feature_set_name(const std::string& spec);

private:
  void log(const std::string& msg) const;

  RunConfig config_;
  int jobs_;
  bool verbose_;
  Provenance prov_;
};

/// The comparison cloud: 1000 Unif(-5,5)^3 points followed by 500 N(0,1)^3.
FeatureMatrix fig5_cloud(std::uint64_t seed);

} // namespace mvedoe
