#include "mvedoe/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mvedoe/parallel.hpp"

namespace mvedoe {

namespace {

constexpr double kDistanceFloor = 1e-12;

std::string join(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += io::format_double(v[i]);
  }
  return s;
}

Eigen::VectorXd parse_vector(const std::string& text) {
  const auto cells = io::split(text, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t i = 0; i < cells.size(); ++i) v[static_cast<Eigen::Index>(i)] = io::parse_double(cells[i]);
  return v;
}

} // namespace

Eigen::VectorXd EmbeddingModel::apply(const Eigen::VectorXd& raw_statistics) const {
  return weights * input_normalization.apply(raw_statistics) + bias;
}

void EmbeddingModel::validate() const {
  if (!(margin > 0.0)) throw InvalidArgument("embedding margin must be positive");
  if (bias.size() != weights.rows()) throw InvalidArgument("embedding bias size mismatch");
  if (input_normalization.min.size() != weights.cols() || input_normalization.max.size() != weights.cols())
    throw InvalidArgument("embedding normalization record size mismatch");
  if (!weights.allFinite() || !bias.allFinite()) throw InvalidArgument("embedding parameters are not finite");
}

Triplet sample_triplet(std::span<const Mve> corpus, std::span<const std::size_t> members, Rng& rng, int extent) {
  if (members.size() < 2) throw InvalidArgument("triplet sampling needs at least two MVEs");
  Triplet t;
  const std::size_t a = uniform_index(rng, members.size());
  std::size_t n = uniform_index(rng, members.size() - 1);
  if (n >= a) ++n;
  t.anchor_parent = members[a];
  t.negative_parent = members[n];
  const Mve& parent = corpus[t.anchor_parent];
  t.anchor = subvolume_statistics(random_crop(parent, extent, rng));
  t.positive = subvolume_statistics(random_crop(parent, extent, rng));
  t.negative = subvolume_statistics(random_crop(corpus[t.negative_parent], extent, rng));
  return t;
}

Triplet sample_triplet(std::span<const Mve> corpus, Rng& rng, int extent) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return sample_triplet(corpus, all, rng, extent);
}

double triplet_loss(const Eigen::VectorXd& za, const Eigen::VectorXd& zp, const Eigen::VectorXd& zn,
                    double margin) {
  const double v = (za - zp).norm() - (za - zn).norm() + margin;
  return std::isnan(v) ? v : std::max(0.0, v);
}

ModelGradient triplet_gradient(const EmbeddingModel& model, const Triplet& triplet) {
  const Eigen::VectorXd xa = model.input_normalization.apply(triplet.anchor);
  const Eigen::VectorXd xp = model.input_normalization.apply(triplet.positive);
  const Eigen::VectorXd xn = model.input_normalization.apply(triplet.negative);
  const Eigen::VectorXd za = model.weights * xa + model.bias;
  const Eigen::VectorXd zp = model.weights * xp + model.bias;
  const Eigen::VectorXd zn = model.weights * xn + model.bias;

  ModelGradient g;
  g.weights = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  g.bias = Eigen::VectorXd::Zero(model.bias.size());
  g.loss = triplet_loss(za, zp, zn, model.margin);
  if (!(g.loss > 0.0)) return g;

  const Eigen::VectorXd u_ap = (za - zp) / std::max((za - zp).norm(), kDistanceFloor);
  const Eigen::VectorXd u_an = (za - zn) / std::max((za - zn).norm(), kDistanceFloor);
  const Eigen::VectorXd ga = u_ap - u_an;
  const Eigen::VectorXd gp = -u_ap;
  const Eigen::VectorXd gn = u_an;
  g.weights = ga * xa.transpose() + gp * xp.transpose() + gn * xn.transpose();
  g.bias = ga + gp + gn;
  return g;
}

double mean_triplet_loss(const EmbeddingModel& model, std::span<const Triplet> triplets) {
  if (triplets.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : triplets)
    sum += triplet_loss(model.apply(t.anchor), model.apply(t.positive), model.apply(t.negative), model.margin);
  return sum / static_cast<double>(triplets.size());
}

namespace {

std::vector<Triplet> draw_triplets(std::span<const Mve> corpus, std::span<const std::size_t> members,
                                   std::size_t count, std::uint64_t stream_seed, int jobs) {
  std::vector<Triplet> out(count);
  parallel_for(count, jobs, [&](std::size_t i) {
    Rng rng(derive_seed(stream_seed, {i}));
    out[i] = sample_triplet(corpus, members, rng);
  });
  return out;
}

} // namespace

TrainResult train_embedding(std::span<const Mve> corpus, const TrainConfig& config, int jobs) {
  if (corpus.size() < 10) throw InvalidArgument("embedding training needs at least 10 MVEs");
  if (config.epochs < 0 || config.batch < 1 || !(config.learning_rate > 0.0) || !(config.margin > 0.0))
    throw InvalidArgument("invalid embedding training configuration");

  TrainResult result;
  {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, {0x401d}));
    std::shuffle(order.begin(), order.end(), rng);
    const auto held = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(corpus.size()))), 2,
        corpus.size() - 2);
    result.heldout_members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    result.train_members.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(result.heldout_members.begin(), result.heldout_members.end());
    std::sort(result.train_members.begin(), result.train_members.end());
  }

  // Input normalization from two crops per training MVE.
  const std::size_t h = gsh_retained_count() + 2;
  {
    const auto& members = result.train_members;
    RowMatrix stats(static_cast<Eigen::Index>(2 * members.size()), static_cast<Eigen::Index>(h));
    parallel_for(2 * members.size(), jobs, [&](std::size_t i) {
      Rng rng(derive_seed(config.seed, {0x4e0, i}));
      stats.row(static_cast<Eigen::Index>(i)) =
          subvolume_statistics(random_crop(corpus[members[i / 2]], kCropExtent, rng)).transpose();
    });
    result.model.input_normalization = MinMax::fit(stats);
  }

  EmbeddingModel& model = result.model;
  model.margin = config.margin;
  {
    Rng rng(derive_seed(config.seed, {0x1417}));
    const double scale = 0.1 / std::sqrt(static_cast<double>(h));
    model.weights.resize(kLatentDim, static_cast<Eigen::Index>(h));
    model.bias.resize(kLatentDim);
    for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < model.weights.cols(); ++c) model.weights(r, c) = scale * standard_normal(rng);
    for (Eigen::Index r = 0; r < model.bias.size(); ++r) model.bias[r] = scale * standard_normal(rng);
  }

  const std::vector<Triplet> heldout =
      draw_triplets(corpus, result.heldout_members, static_cast<std::size_t>(std::max(config.heldout_triplets, 1)),
                    derive_seed(config.seed, {0x4e1d}), jobs);
  const std::size_t per_epoch = config.triplets_per_epoch > 0 ? static_cast<std::size_t>(config.triplets_per_epoch)
                                                              : result.train_members.size();

  auto check = [&](double v, int epoch) {
    if (!std::isfinite(v))
      throw TrainingDiverged("embedding training diverged at epoch " + std::to_string(epoch), result.history);
  };

  std::vector<Triplet> stream =
      draw_triplets(corpus, result.train_members, per_epoch, derive_seed(config.seed, {0x57e, 1}), jobs);
  result.history.push_back({0, mean_triplet_loss(model, stream), mean_triplet_loss(model, heldout)});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (epoch > 1)
      stream = draw_triplets(corpus, result.train_members, per_epoch,
                             derive_seed(config.seed, {0x57e, static_cast<std::uint64_t>(epoch)}), jobs);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < stream.size(); start += static_cast<std::size_t>(config.batch)) {
      const std::size_t stop = std::min(stream.size(), start + static_cast<std::size_t>(config.batch));
      Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
      Eigen::VectorXd gb = Eigen::VectorXd::Zero(model.bias.size());
      for (std::size_t i = start; i < stop; ++i) {
        const ModelGradient g = triplet_gradient(model, stream[i]);
        gw += g.weights;
        gb += g.bias;
        epoch_loss += g.loss;
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      model.weights -= config.learning_rate * inv * gw;
      model.bias -= config.learning_rate * inv * gb;
    }
    epoch_loss /= static_cast<double>(stream.size());
    const double held_loss = mean_triplet_loss(model, heldout);
    check(epoch_loss, epoch);
    check(held_loss, epoch);
    if (!model.weights.allFinite() || !model.bias.allFinite())
      throw TrainingDiverged("embedding parameters became non-finite at epoch " + std::to_string(epoch),
                             result.history);
    result.history.push_back({epoch, epoch_loss, held_loss});
  }
  return result;
}

Eigen::VectorXd embed(const EmbeddingModel& model, const Mve& mve) {
  return model.apply(subvolume_statistics(mve));
}

void write_model(const std::filesystem::path& path, const EmbeddingModel& model, const Provenance& prov) {
  model.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << io::make_header("EMBEDDING", {{"version", "1"},
                                       {"h", std::to_string(model.input_dim())},
                                       {"latent", std::to_string(model.latent_dim())},
                                       {"margin", io::format_double(model.margin)},
                                       {"norm_min", join(model.input_normalization.min)},
                                       {"norm_max", join(model.input_normalization.max)},
                                       {"config", prov.config_hash},
                                       {"tool", prov.tool_version}})
      << '\n';
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(model.weights.size()));
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) w.push_back(model.weights(r, c));
  io::write_f64_le(out, w);
  io::write_f64_le(out, std::span<const double>(model.bias.data(), static_cast<std::size_t>(model.bias.size())));
}

EmbeddingModel read_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  const auto hdr = io::parse_header(line, "EMBEDDING");
  if (io::require_field(hdr, "version") != "1") throw FormatError("unsupported embedding model version");
  const auto h = io::parse_int(io::require_field(hdr, "h"));
  const auto latent = io::parse_int(io::require_field(hdr, "latent"));
  if (h <= 0 || latent <= 0) throw FormatError("embedding model shape must be positive");
  EmbeddingModel m;
  m.margin = io::parse_double(io::require_field(hdr, "margin"));
  m.input_normalization.min = parse_vector(io::require_field(hdr, "norm_min"));
  m.input_normalization.max = parse_vector(io::require_field(hdr, "norm_max"));
  std::vector<double> w(static_cast<std::size_t>(h * latent));
  io::read_f64_le(in, w);
  m.weights.resize(latent, h);
  for (Eigen::Index r = 0; r < latent; ++r)
    for (Eigen::Index c = 0; c < h; ++c) m.weights(r, c) = w[static_cast<std::size_t>(r * h + c)];
  m.bias.resize(latent);
  io::read_f64_le(in, std::span<double>(m.bias.data(), static_cast<std::size_t>(latent)));
  try {
    m.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

void write_loss_history_csv(const std::filesystem::path& path, std::span<const LossRecord> history,
                            const Provenance& prov) {
  std::ostringstream out;
  out << "# loss_history config=" << prov.config_hash << " tool=" << prov.tool_version << '\n';
  out << "epoch,train_loss,heldout_loss\n";
  for (const auto& r : history)
    out << r.epoch << ',' << io::format_double(r.train_loss) << ',' << io::format_double(r.heldout_loss) << '\n';
  io::write_text(path, out.str());
}

} // namespace mvedoe
