#include "mvedoe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mvedoe/error.hpp"
#include "mvedoe/parallel.hpp"

namespace mvedoe {

using nlohmann::json;

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ConfigError("unknown config key '" + section + (section.empty() ? "" : ".") + key + "'");
  }
}

std::string pad(std::size_t i, int width = 5) {
  std::string s = std::to_string(i);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

std::string fraction_label(double f) {
  return pad(static_cast<std::size_t>(std::lround(f * 1000.0)), 4);
}

void validate_config(const RunConfig& c) {
  try {
    c.corpus.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (c.features.empty()) throw ConfigError("at least one feature set is required");
  for (const auto& f : c.features) {
    if (f == "classic" || f == "contrastive") continue;
    if (f.rfind("external:", 0) == 0 && f.size() > 9) {
      if (!std::filesystem::exists(f.substr(9))) throw ConfigError("external feature file not found: " + f.substr(9));
      continue;
    }
    throw ConfigError("unknown feature set '" + f + "' (classic, contrastive, external:PATH)");
  }
  if (c.criteria.empty()) throw ConfigError("at least one design criterion is required");
  if (c.fractions.empty()) throw ConfigError("at least one design fraction is required");
  for (double f : c.fractions)
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("design fractions must lie in (0, 1]");
  if (c.replicates < 1) throw ConfigError("design.replicates must be >= 1");
  if (c.random_baseline < 1) throw ConfigError("design.random_baseline must be >= 1");
  if (c.bootstrap < 0) throw ConfigError("design.bootstrap must be >= 0");
  if (!(c.maxpro_k > 0.0)) throw ConfigError("design.maxpro_k must be positive");
  if (!(c.val_fraction > 0.0 && c.val_fraction < 1.0)) throw ConfigError("evaluation.val_fraction must lie in (0, 1)");
  if (c.k < 1) throw ConfigError("evaluation.k must be >= 1");
  if (c.embedding.epochs < 1 || c.embedding.batch < 1 || !(c.embedding.learning_rate > 0.0) ||
      !(c.embedding.margin > 0.0) || c.embedding.triplets_per_epoch < 0 || c.embedding.heldout_triplets < 1 ||
      !(c.embedding.holdout_fraction > 0.0 && c.embedding.holdout_fraction < 1.0))
    throw ConfigError("invalid embedding settings");
  try {
    cubic_stiffness(c.oracle.constants);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

} // namespace

std::string RunConfig::canonical_json() const {
  json j;
  j["seed"] = seed;
  j["corpus"] = {{"dims", {corpus.dims.nx, corpus.dims.ny, corpus.dims.nz}},
                 {"grain_sizes", corpus.grain_sizes},
                 {"seeds_per_size", corpus.seeds_per_size},
                 {"textured_count", corpus.textured_count},
                 {"perturbation_deg", corpus.texture_perturbation_deg}};
  j["features"] = features;
  j["embedding"] = {{"epochs", embedding.epochs},
                    {"batch", embedding.batch},
                    {"learning_rate", embedding.learning_rate},
                    {"margin", embedding.margin},
                    {"triplets_per_epoch", embedding.triplets_per_epoch},
                    {"holdout_fraction", embedding.holdout_fraction},
                    {"heldout_triplets", embedding.heldout_triplets}};
  std::vector<std::string> crit;
  for (auto c : criteria) crit.push_back(to_string(c));
  j["design"] = {{"criteria", crit},         {"fractions", fractions},           {"replicates", replicates},
                 {"random_baseline", random_baseline}, {"bootstrap", bootstrap}, {"maxpro_k", maxpro_k}};
  j["evaluation"] = {{"val_fraction", val_fraction}, {"k", k}};
  j["oracle"] = {{"c11", oracle.constants.c11},
                 {"c12", oracle.constants.c12},
                 {"c44", oracle.constants.c44},
                 {"applied", std::vector<double>(oracle.applied.data(), oracle.applied.data() + 6)},
                 {"smoothing", oracle.smoothing},
                 {"write_fields", write_fields}};
  return j.dump();
}

std::string RunConfig::hash() const { return io::hex64(io::fnv1a64(canonical_json())); }

RunConfig parse_config(const std::string& json_text, bool require_seed) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_keys(j, "", {"seed", "output", "corpus", "features", "embedding", "design", "evaluation", "oracle"});
  RunConfig c;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  } else if (require_seed) {
    throw ConfigError("config has no 'seed'; every run needs an explicit master seed");
  }
  c.output = get_or<std::string>(j, "output", c.output.string());

  if (j.contains("corpus")) {
    const auto& s = j["corpus"];
    check_keys(s, "corpus", {"dims", "grain_sizes", "seeds_per_size", "textured_count", "perturbation_deg"});
    if (s.contains("dims")) {
      const auto d = get_or<std::vector<int>>(s, "dims", {});
      if (d.size() != 3) throw ConfigError("corpus.dims needs three integers");
      c.corpus.dims = {d[0], d[1], d[2]};
    }
    c.corpus.grain_sizes = get_or(s, "grain_sizes", c.corpus.grain_sizes);
    c.corpus.seeds_per_size = get_or(s, "seeds_per_size", c.corpus.seeds_per_size);
    c.corpus.textured_count = get_or(s, "textured_count", c.corpus.textured_count);
    c.corpus.texture_perturbation_deg = get_or(s, "perturbation_deg", c.corpus.texture_perturbation_deg);
  }
  c.features = get_or(j, "features", c.features);
  if (j.contains("embedding")) {
    const auto& s = j["embedding"];
    check_keys(s, "embedding",
               {"epochs", "batch", "learning_rate", "margin", "triplets_per_epoch", "holdout_fraction", "heldout_triplets"});
    auto& e = c.embedding;
    e.epochs = get_or(s, "epochs", e.epochs);
    e.batch = get_or(s, "batch", e.batch);
    e.learning_rate = get_or(s, "learning_rate", e.learning_rate);
    e.margin = get_or(s, "margin", e.margin);
    e.triplets_per_epoch = get_or(s, "triplets_per_epoch", e.triplets_per_epoch);
    e.holdout_fraction = get_or(s, "holdout_fraction", e.holdout_fraction);
    e.heldout_triplets = get_or(s, "heldout_triplets", e.heldout_triplets);
  }
  if (j.contains("design")) {
    const auto& s = j["design"];
    check_keys(s, "design", {"criteria", "fractions", "replicates", "random_baseline", "bootstrap", "maxpro_k"});
    if (s.contains("criteria")) {
      c.criteria.clear();
      for (const auto& name : get_or<std::vector<std::string>>(s, "criteria", {})) {
        try {
          c.criteria.push_back(parse_criterion(name));
        } catch (const InvalidArgument& e) {
          throw ConfigError(e.what());
        }
      }
    }
    c.fractions = get_or(s, "fractions", c.fractions);
    c.replicates = get_or(s, "replicates", c.replicates);
    c.random_baseline = get_or(s, "random_baseline", c.random_baseline);
    c.bootstrap = get_or(s, "bootstrap", c.bootstrap);
    c.maxpro_k = get_or(s, "maxpro_k", c.maxpro_k);
  }
  if (j.contains("evaluation")) {
    const auto& s = j["evaluation"];
    check_keys(s, "evaluation", {"val_fraction", "k"});
    c.val_fraction = get_or(s, "val_fraction", c.val_fraction);
    c.k = get_or(s, "k", c.k);
  }
  if (j.contains("oracle")) {
    const auto& s = j["oracle"];
    check_keys(s, "oracle", {"c11", "c12", "c44", "applied", "smoothing", "write_fields"});
    c.oracle.constants.c11 = get_or(s, "c11", c.oracle.constants.c11);
    c.oracle.constants.c12 = get_or(s, "c12", c.oracle.constants.c12);
    c.oracle.constants.c44 = get_or(s, "c44", c.oracle.constants.c44);
    if (s.contains("applied")) {
      const auto a = get_or<std::vector<double>>(s, "applied", {});
      if (a.size() != 6) throw ConfigError("oracle.applied needs six Voigt components");
      for (int i = 0; i < 6; ++i) c.oracle.applied[i] = a[static_cast<std::size_t>(i)];
    }
    c.oracle.smoothing = get_or(s, "smoothing", c.oracle.smoothing);
    c.write_fields = get_or(s, "write_fields", c.write_fields);
  }
  validate_config(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, bool require_seed) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
  return parse_config(io::read_text(path), require_seed);
}

void apply_overrides(RunConfig& c, const ConfigOverrides& o) {
  if (o.output) c.output = *o.output;
  if (o.seed) c.seed = *o.seed;
  if (o.features) {
    c.features.clear();
    for (const auto& f : io::split(*o.features, ','))
      if (!io::trim(f).empty()) c.features.emplace_back(io::trim(f));
  }
  if (o.criterion) {
    try {
      c.criteria = {parse_criterion(*o.criterion)};
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  }
  if (o.fraction) c.fractions = {*o.fraction};
  if (o.k) c.k = *o.k;
  validate_config(c);
}

RunConfig desk_config(std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.corpus.grain_sizes = {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  c.corpus.seeds_per_size = 8;
  c.corpus.textured_count = 496;
  return c;
}

FeatureMatrix fig5_cloud(std::uint64_t seed) {
  FeatureMatrix f;
  f.values.resize(1500, 3);
  Rng rng(seed);
  for (Eigen::Index i = 0; i < 1000; ++i)
    for (Eigen::Index d = 0; d < 3; ++d) f.values(i, d) = uniform(rng, -5.0, 5.0);
  for (Eigen::Index i = 1000; i < 1500; ++i)
    for (Eigen::Index d = 0; d < 3; ++d) f.values(i, d) = standard_normal(rng);
  f.ids.reserve(1500);
  for (std::size_t i = 0; i < 1500; ++i) f.ids.push_back(std::to_string(i));
  return f;
}

Pipeline::Pipeline(RunConfig config, int jobs, bool verbose)
    : config_(std::move(config)), jobs_(std::max(1, jobs)), verbose_(verbose), prov_(config_.provenance()) {
  config_.corpus.seed = config_.corpus_seed();
  config_.embedding.seed = config_.embedding_seed();
}

void Pipeline::log(const std::string& msg) const {
  if (verbose_) std::clog << "[mvedoe] " << msg << '\n';
}

std::string Pipeline::feature_set_name(const std::string& spec) {
  return spec.rfind("external:", 0) == 0 ? "external" : spec;
}

void Pipeline::gen() {
  const auto& spec = config_.corpus;
  log("generating " + std::to_string(spec.total()) + " MVEs");
  const auto dir = out() / "corpus";
  std::filesystem::create_directories(dir);
  std::vector<CorpusIndexEntry> index(spec.total());
  parallel_for(spec.total(), jobs_, [&](std::size_t i) {
    const Mve m = generate_corpus_entry(spec, i);
    auto& e = index[i];
    e.id = "mve_" + pad(i);
    e.grain_size = m.meta.target_grain_size;
    e.texture = m.meta.texture.kind_name();
    e.file = e.id + ".mve";
    write_mve(dir / e.file, m, prov_);
  });
  std::ostringstream os;
  os << "# corpus config=" << prov_.config_hash << " tool=" << prov_.tool_version << '\n'
     << "id,grain_size,texture,file\n";
  for (const auto& e : index) os << e.id << ',' << e.grain_size << ',' << e.texture << ',' << e.file << '\n';
  io::write_text(corpus_index_path(), os.str());
}

std::vector<CorpusIndexEntry> Pipeline::read_corpus_index() const {
  io::require_file(corpus_index_path(), "gen");
  std::istringstream in(io::read_text(corpus_index_path()));
  std::vector<CorpusIndexEntry> index;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto cells = io::split(line, ',');
    if (cells.size() != 4) throw FormatError("corpus index: malformed line '" + line + "'");
    index.push_back({cells[0], static_cast<int>(io::parse_int(cells[1])), cells[2], cells[3]});
  }
  if (index.empty()) throw FormatError("corpus index is empty");
  return index;
}

std::vector<Mve> Pipeline::load_corpus() const {
  const auto index = read_corpus_index();
  std::vector<Mve> corpus(index.size());
  parallel_for(index.size(), jobs_, [&](std::size_t i) {
    const auto path = out() / "corpus" / index[i].file;
    io::require_file(path, "gen");
    corpus[i] = read_mve(path);
  });
  return corpus;
}

void Pipeline::featurize() {
  const auto index = read_corpus_index();
  std::vector<std::string> ids;
  for (const auto& e : index) ids.push_back(e.id);
  std::optional<std::vector<Mve>> corpus;
  for (const auto& spec : config_.features) {
    const auto name = feature_set_name(spec);
    if (name == "classic") {
      if (!corpus) corpus = load_corpus();
      log("classic descriptors");
      FeatureMatrix f;
      f.kind = FeatureKind::Classic;
      f.ids = ids;
      f.values.resize(static_cast<Eigen::Index>(corpus->size()), static_cast<Eigen::Index>(gsh_retained_count() + 1));
      parallel_for(corpus->size(), jobs_,
                   [&](std::size_t i) { f.values.row(static_cast<Eigen::Index>(i)) = classic_descriptor((*corpus)[i]); });
      save_features_csv(feature_path(name), f, prov_);
    } else if (name == "contrastive") {
      if (!std::filesystem::exists(model_path())) embed_train();
      embed();
    } else {
      const std::filesystem::path src = spec.substr(9);
      if (!std::filesystem::exists(src)) throw ConfigError("external feature file not found: " + src.string());
      log("ingesting " + src.string());
      FeatureMatrix raw = load_features(src, src.extension() == ".bin" ? FeatureFormat::Binary : FeatureFormat::Csv);
      std::map<std::string, std::size_t> row_of;
      for (std::size_t i = 0; i < raw.ids.size(); ++i) row_of[raw.ids[i]] = i;
      std::vector<std::size_t> rows;
      std::string missing;
      for (const auto& id : ids) {
        const auto it = row_of.find(id);
        if (it == row_of.end())
          missing += (missing.empty() ? "" : ", ") + id;
        else
          rows.push_back(it->second);
      }
      if (!missing.empty()) throw FormatError("external features lack corpus ids: " + missing);
      FeatureMatrix f = raw.subset(rows);
      f.kind = FeatureKind::External;
      save_features_csv(feature_path(name), f, prov_);
    }
  }
}

void Pipeline::embed_train() {
  const auto corpus = load_corpus();
  log("training contrastive embedding (" + std::to_string(config_.embedding.epochs) + " epochs)");
  std::vector<LossRecord> history;
  EmbeddingModel model;
  std::vector<std::size_t> heldout;
  try {
    auto result = train_embedding(corpus, config_.embedding, jobs_);
    history = std::move(result.history);
    model = std::move(result.model);
    heldout = std::move(result.heldout_members);
  } catch (const TrainingDiverged& e) {
    write_loss_history_csv(out() / "model" / "loss_history.csv", e.history(), prov_);
    throw;
  }
  write_model(model_path(), model, prov_);
  write_loss_history_csv(out() / "model" / "loss_history.csv", history, prov_);
  {
    const auto index = read_corpus_index();
    std::ostringstream os;
    os << "# heldout config=" << prov_.config_hash << " tool=" << prov_.tool_version << "\nid,row\n";
    for (auto r : heldout) os << index[r].id << ',' << r << '\n';
    io::write_text(heldout_path(), os.str());
  }
  if (!history.empty())
    log("held-out triplet loss " + io::format_double(history.front().heldout_loss) + " -> " +
        io::format_double(history.back().heldout_loss));
}

void Pipeline::embed() {
  io::require_file(model_path(), "embed-train");
  const EmbeddingModel model = read_model(model_path());
  const auto index = read_corpus_index();
  const auto corpus = load_corpus();
  log("embedding corpus");
  FeatureMatrix f;
  f.kind = FeatureKind::Contrastive;
  for (const auto& e : index) f.ids.push_back(e.id);
  f.values.resize(static_cast<Eigen::Index>(corpus.size()), model.latent_dim());
  parallel_for(corpus.size(), jobs_,
               [&](std::size_t i) { f.values.row(static_cast<Eigen::Index>(i)) = mvedoe::embed(model, corpus[i]); });
  save_features_csv(feature_path("contrastive"), f, prov_);
}

FeatureMatrix Pipeline::load_feature_set(const std::string& name) const {
  const auto path = feature_path(name);
  io::require_file(path, "featurize");
  FeatureMatrix f = load_features(path, FeatureFormat::Csv, name == "external" ? FeatureKind::External
                                                                               : parse_feature_kind(name));
  const auto index = read_corpus_index();
  if (f.rows() != index.size()) throw FormatError(path.string() + " does not match the corpus index; rerun featurize");
  for (std::size_t i = 0; i < index.size(); ++i)
    if (f.ids[i] != index[i].id) throw FormatError(path.string() + ": row " + std::to_string(i) + " has id '" +
                                                   f.ids[i] + "', expected '" + index[i].id + "'");
  return f;
}

std::vector<std::size_t> Pipeline::read_heldout_rows() const {
  io::require_file(heldout_path(), "embed-train");
  std::istringstream in(io::read_text(heldout_path()));
  std::vector<std::size_t> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto cells = io::split(line, ',');
    if (cells.size() != 2) throw FormatError("heldout list: malformed line '" + line + "'");
    rows.push_back(static_cast<std::size_t>(io::parse_int(cells[1])));
  }
  return rows;
}

SplitPlan Pipeline::make_split(const std::vector<CorpusIndexEntry>& index) const {
  std::map<std::pair<int, std::string>, int> stratum_of;
  std::vector<int> strata;
  for (const auto& e : index) {
    const auto key = std::make_pair(e.grain_size, e.texture);
    const auto it = stratum_of.emplace(key, static_cast<int>(stratum_of.size())).first;
    strata.push_back(it->second);
  }
  SplitPlan plan = split_pool(strata, config_.val_fraction, config_.split_seed());
  plan.fractions = config_.fractions;
  plan.replicates = config_.replicates;
  return plan;
}

void Pipeline::design() {
  const auto index = read_corpus_index();
  const SplitPlan plan = make_split(index);
  {
    std::ostringstream os;
    os << "# split val_fraction=" << io::format_double(plan.val_fraction) << " config=" << prov_.config_hash
       << " tool=" << prov_.tool_version << '\n'
       << "id,role,position\n";
    for (std::size_t i = 0; i < plan.validation.size(); ++i)
      os << index[plan.validation[i]].id << ",validation," << i << '\n';
    for (std::size_t i = 0; i < plan.pool.size(); ++i) os << index[plan.pool[i]].id << ",pool," << i << '\n';
    io::write_text(split_path(), os.str());
  }
  std::vector<int> pool_sizes;
  for (auto r : plan.pool) pool_sizes.push_back(index[r].grain_size);

  ReportConfig rc;
  rc.criteria = config_.criteria;
  rc.maxpro_k = config_.maxpro_k;
  rc.seed = config_.report_seed();

  std::vector<LabelledDiagnostics> rows;
  for (const auto& spec : config_.features) {
    const auto name = feature_set_name(spec);
    const FeatureMatrix pool = normalize_features(load_feature_set(name).subset(plan.pool));
    log("designs on " + name + " features");
    for (auto c : config_.criteria)
      for (std::size_t fi = 0; fi < config_.fractions.size(); ++fi) {
        const auto designs = cell_designs(pool, c, fi, config_.fractions[fi], plan, rc, name);
        const std::size_t count = c == Criterion::Twin ? 1 : designs.size();
        std::vector<LabelledDiagnostics> cell(count);
        parallel_for(count, jobs_, [&](std::size_t r) {
          const auto diag = design_diagnostics(designs[r], pool, pool_sizes, config_.maxpro_k);
          const std::string label =
              name + "/" + to_string(c) + "_f" + fraction_label(config_.fractions[fi]) + "_r" + pad(r, 2);
          write_design(designs_dir() / (label + ".design"), designs[r], diag, prov_);
          cell[r] = {label, c, designs[r].indices.size(), diag};
        });
        rows.insert(rows.end(), cell.begin(), cell.end());
      }
  }
  write_diagnostics_csv(designs_dir() / "diagnostics.csv", rows, prov_);
}

void Pipeline::oracle() {
  const auto index = read_corpus_index();
  const auto corpus = load_corpus();
  log("iso-strain oracle on " + std::to_string(corpus.size()) + " MVEs");
  std::vector<FieldSummary> summaries(corpus.size());
  parallel_for(corpus.size(), jobs_, [&](std::size_t i) {
    const StressField field = taylor_stress_field(corpus[i], config_.oracle);
    summaries[i] = field_summary(field);
    if (config_.write_fields) write_stress_field(out() / "oracle" / "fields" / (index[i].id + ".stress"), field, prov_);
  });
  std::ostringstream os;
  os << "# oracle units=MPa config=" << prov_.config_hash << " tool=" << prov_.tool_version << '\n' << "id";
  for (const auto& n : field_summary_names()) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    os << index[i].id;
    for (double v : summaries[i]) os << ',' << io::format_double(v);
    os << '\n';
  }
  io::write_text(summaries_path(), os.str());
}

RowMatrix Pipeline::load_targets() const {
  io::require_file(summaries_path(), "oracle");
  const auto index = read_corpus_index();
  std::map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < index.size(); ++i) row_of[index[i].id] = i;
  RowMatrix y = RowMatrix::Constant(static_cast<Eigen::Index>(index.size()), kSummarySize,
                                    std::numeric_limits<double>::quiet_NaN());
  std::vector<bool> seen(index.size(), false);
  std::istringstream in(io::read_text(summaries_path()));
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    const auto cells = io::split(line, ',');
    if (cells.size() != kSummarySize + 1) throw FormatError("oracle summaries: malformed line '" + line + "'");
    const auto it = row_of.find(cells[0]);
    if (it == row_of.end()) throw FormatError("oracle summaries: unknown id '" + cells[0] + "'");
    for (std::size_t c = 0; c < kSummarySize; ++c)
      y(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(c)) = io::parse_double(cells[c + 1]);
    seen[it->second] = true;
  }
  std::string missing;
  for (std::size_t i = 0; i < index.size(); ++i)
    if (!seen[i]) missing += (missing.empty() ? "" : ", ") + index[i].id;
  if (!missing.empty()) throw FormatError("oracle summaries lack ids: " + missing + "; rerun oracle");
  return y;
}

void Pipeline::evaluate() {
  const auto index = read_corpus_index();
  const RowMatrix targets = load_targets();
  std::vector<NamedFeatures> sets;
  for (const auto& spec : config_.features) {
    const auto name = feature_set_name(spec);
    sets.push_back({name, load_feature_set(name)});
  }
  const SplitPlan plan = make_split(index);
  ReportConfig rc;
  rc.criteria = config_.criteria;
  rc.random_baseline = config_.random_baseline;
  rc.bootstrap_resamples = config_.bootstrap;
  rc.k = config_.k;
  rc.maxpro_k = config_.maxpro_k;
  rc.seed = config_.report_seed();
  log("evaluating " + std::to_string(sets.size() * rc.criteria.size() * plan.fractions.size()) + " cells");
  const auto records = improvement_report(sets, targets, plan, rc, jobs_);
  write_report_csv(report_path(), records, prov_);
}

void Pipeline::report() {
  io::require_file(report_path(), "evaluate");
  const auto records = read_report_csv(report_path());
  const auto cells = summarize(records);
  write_summary_csv(summary_path(), cells, prov_);
  if (!verbose_) return;
  std::printf("%-12s %-8s %8s %6s %12s %10s\n", "features", "criterion", "fraction", "n", "improvement%", "boot_std");
  for (const auto& c : cells)
    std::printf("%-12s %-8s %8.3f %6zu %12.3f %10.3f\n", c.feature_set.c_str(), to_string(c.criterion).c_str(),
                c.fraction, c.n_design, c.mean_improvement_pct, c.bootstrap_std);
}

void Pipeline::demo_fig5() {
  FeatureMatrix cloud = normalize_features(fig5_cloud(config_.fig5_seed()));
  cloud.kind = FeatureKind::External;
  {
    const FeatureMatrix raw = fig5_cloud(config_.fig5_seed());
    save_features_csv(fig5_dir() / "cloud.csv", raw, prov_);
  }
  constexpr std::array<std::size_t, 3> sizes{10, 50, 200};
  constexpr std::array<Criterion, 4> criteria{Criterion::Cmm, Criterion::MaxPro, Criterion::Twin, Criterion::Random};
  std::vector<LabelledDiagnostics> rows(criteria.size() * sizes.size());
  parallel_for(rows.size(), jobs_, [&](std::size_t cell) {
    const Criterion c = criteria[cell / sizes.size()];
    const std::size_t n = sizes[cell % sizes.size()];
    const Design d = build_design(c, cloud, n, derive_seed(config_.fig5_seed(), {static_cast<std::uint64_t>(c), n}),
                                  config_.maxpro_k);
    const auto diag = design_diagnostics(d, cloud, {}, config_.maxpro_k);
    const std::string label = to_string(c) + "_n" + pad(n, 3);
    write_design(fig5_dir() / (label + ".design"), d, diag, prov_);
    rows[cell] = {label, c, n, diag};
  });
  write_diagnostics_csv(fig5_dir() / "diagnostics.csv", rows, prov_);
  log("fig5 designs written to " + fig5_dir().string());
}

void Pipeline::run_all() {
  gen();
  featurize();
  design();
  oracle();
  evaluate();
  report();
}

} // namespace mvedoe
