#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvedoe/io.hpp"
#include "mvedoe/texture.hpp"

namespace mvedoe {

struct Dims {
  int nx = 32;
  int ny = 32;
  int nz = 32;

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
  int min_extent() const { return std::min(nx, std::min(ny, nz)); }
  bool operator==(const Dims&) const = default;
};

struct MveMeta {
  int target_grain_size = 0;
  TextureSpec texture;
  std::uint64_t seed = 0;
};

/// Voxelized polycrystal. Voxel (x, y, z) lives at x + nx * (y + ny * z).
struct Mve {
  Dims dims;
  std::vector<std::uint32_t> grain_id;
  std::vector<Orientation> grain_orientations;
  MveMeta meta;

  std::size_t voxel_count() const { return grain_id.size(); }
  std::size_t grain_count() const { return grain_orientations.size(); }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims.nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.ny) * z);
  }
  /// Voxels per grain label.
  std::vector<std::size_t> grain_voxel_counts() const;

  /// Throws FormatError when labels are out of range, not contiguous, or the
  /// voxel array does not match dims.
  void validate() const;
};

/// Periodic Voronoi polycrystal with round(voxels / d^3) uniformly random
/// seeds; each voxel goes to the seed at minimum periodic distance (lowest
/// seed index on ties). Seeds that capture no voxel are dropped and labels
/// compacted in seed order.
Mve generate_mve(const Dims& dims, int target_grain_size, const TextureSpec& texture, std::uint64_t seed);

/// Number of Voronoi seeds generate_mve places for these arguments.
std::size_t voronoi_seed_count(const Dims& dims, int target_grain_size);

struct CorpusSpec {
  Dims dims;
  std::vector<int> grain_sizes{4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  int seeds_per_size = 100;
  int textured_count = 5625;
  double texture_perturbation_deg = 10.0;
  std::uint64_t seed = 0;

  /// Untextured block size: one MVE per (grain size, seed index).
  std::size_t untextured_count() const {
    return grain_sizes.size() * static_cast<std::size_t>(std::max(seeds_per_size, 0));
  }
  std::size_t total() const { return untextured_count() + static_cast<std::size_t>(std::max(textured_count, 0)); }
  void validate() const;
};

/// Untextured MVEs come first (grain sizes outer, seed index inner), then the
/// textured block. Each MVE derives its own seed from (spec.seed, index), so
/// the result does not depend on `jobs`.
std::vector<Mve> generate_corpus(const CorpusSpec& spec, int jobs = 1);

/// Generates only corpus entry `index`.
Mve generate_corpus_entry(const CorpusSpec& spec, std::size_t index);

/// Non-wrapping crop; grain labels are compacted in ascending order of the
/// parent label.
Mve crop_subvolume(const Mve& mve, const std::array<int, 3>& origin, const std::array<int, 3>& extent);

/// Crop at a uniformly random origin (all valid origins equally likely).
Mve random_crop(const Mve& mve, int extent, Rng& rng);

void write_mve(const std::filesystem::path& path, const Mve& mve, const Provenance& prov = {});
Mve read_mve(const std::filesystem::path& path);

} // namespace mvedoe
