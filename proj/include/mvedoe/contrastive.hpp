#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvedoe/error.hpp"
#include "mvedoe/features.hpp"
#include "mvedoe/mve.hpp"

namespace mvedoe {

inline constexpr int kLatentDim = 16;
inline constexpr int kCropExtent = 16;

/// Raw sub-volume statistics of an anchor/positive/negative crop triple.
struct Triplet {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  Eigen::VectorXd negative;
  std::size_t anchor_parent = 0;
  std::size_t negative_parent = 0;
};

/// z = W * normalize(x) + b.
struct EmbeddingModel {
  Eigen::MatrixXd weights;  // latent x h
  Eigen::VectorXd bias;     // latent
  MinMax input_normalization;
  double margin = 0.5;

  Eigen::Index input_dim() const { return weights.cols(); }
  Eigen::Index latent_dim() const { return weights.rows(); }
  Eigen::VectorXd apply(const Eigen::VectorXd& raw_statistics) const;
  void validate() const;
};

/// Anchor and positive are independent uniform-origin crops of one randomly
/// chosen MVE; the negative is a crop of a different, uniformly chosen MVE.
Triplet sample_triplet(std::span<const Mve> corpus, Rng& rng, int extent = kCropExtent);

/// Same, restricted to the corpus entries listed in `members`.
Triplet sample_triplet(std::span<const Mve> corpus, std::span<const std::size_t> members, Rng& rng,
                       int extent = kCropExtent);

/// max(0, |za - zp| - |za - zn| + margin).
double triplet_loss(const Eigen::VectorXd& za, const Eigen::VectorXd& zp, const Eigen::VectorXd& zn,
                    double margin);

struct ModelGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  double loss = 0.0;
};

/// Analytic (sub)gradient of the triplet loss with respect to W and b.
/// Distances in the denominators are floored at 1e-12; inactive triplets
/// give an exact zero gradient.
ModelGradient triplet_gradient(const EmbeddingModel& model, const Triplet& triplet);

struct TrainConfig {
  int epochs = 300;
  int batch = 32;
  double learning_rate = 0.2;
  double margin = 0.5;
  std::uint64_t seed = 0;
  /// Triplets drawn per epoch; 0 means one per training MVE.
  int triplets_per_epoch = 0;
  double holdout_fraction = 0.1;
  int heldout_triplets = 512;
};

struct LossRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double heldout_loss = 0.0;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<LossRecord> history;
  std::vector<std::size_t> train_members;
  std::vector<std::size_t> heldout_members;
};

class TrainingDiverged : public Error {
public:
  TrainingDiverged(const std::string& what, std::vector<LossRecord> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<LossRecord>& history() const noexcept { return history_; }

private:
  std::vector<LossRecord> history_;
};

/// Mini-batch gradient descent on the mean triplet loss. history[0] is the
/// initial model; history[e] the mean batch loss during epoch e and the
/// held-out loss after it. Deterministic for a given config.seed and any
/// `jobs`.
TrainResult train_embedding(std::span<const Mve> corpus, const TrainConfig& config, int jobs = 1);

/// Mean loss of `model` over `triplets`.
double mean_triplet_loss(const EmbeddingModel& model, std::span<const Triplet> triplets);

Eigen::VectorXd embed(const EmbeddingModel& model, const Mve& mve);

void write_model(const std::filesystem::path& path, const EmbeddingModel& model, const Provenance& prov = {});
EmbeddingModel read_model(const std::filesystem::path& path);
void write_loss_history_csv(const std::filesystem::path& path, std::span<const LossRecord> history,
                            const Provenance& prov = {});

} // namespace mvedoe
