#include "mvedoe/mve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mvedoe/error.hpp"
#include "mvedoe/parallel.hpp"

namespace mvedoe {

std::vector<std::size_t> Mve::grain_voxel_counts() const {
  std::vector<std::size_t> counts(grain_orientations.size(), 0);
  for (auto g : grain_id) ++counts[g];
  return counts;
}

void Mve::validate() const {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw FormatError("MVE dims must be positive");
  if (grain_id.size() != dims.voxels()) throw FormatError("MVE voxel array does not match dims");
  std::vector<bool> used(grain_orientations.size(), false);
  for (auto g : grain_id) {
    if (g >= grain_orientations.size()) throw FormatError("grain id without orientation entry");
    used[g] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end())
    throw FormatError("grain labels are not contiguous");
}

std::size_t voronoi_seed_count(const Dims& dims, int target_grain_size) {
  const double d = static_cast<double>(target_grain_size);
  return static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(dims.voxels()) / (d * d * d))));
}

namespace {

/// Squared periodic distance from every voxel centre on one axis to every seed.
std::vector<double> axis_distance_table(const std::vector<double>& coords, int n) {
  const std::size_t k = coords.size();
  std::vector<double> table(k * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = i + 0.5;
    for (std::size_t s = 0; s < k; ++s) {
      double d = std::abs(c - coords[s]);
      d = std::min(d, n - d);
      table[static_cast<std::size_t>(i) * k + s] = d * d;
    }
  }
  return table;
}

} // namespace

Mve generate_mve(const Dims& dims, int target_grain_size, const TextureSpec& texture, std::uint64_t seed) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) throw InvalidArgument("MVE dims must be positive");
  if (target_grain_size < 2 || 2 * target_grain_size > dims.min_extent())
    throw InvalidArgument("target grain size " + std::to_string(target_grain_size) +
                          " outside [2, " + std::to_string(dims.min_extent() / 2) + "]");
  texture.validate();

  Rng rng(seed);
  const std::size_t k = voronoi_seed_count(dims, target_grain_size);
  std::vector<double> sx(k), sy(k), sz(k);
  for (std::size_t s = 0; s < k; ++s) {
    sx[s] = uniform(rng, 0.0, dims.nx);
    sy[s] = uniform(rng, 0.0, dims.ny);
    sz[s] = uniform(rng, 0.0, dims.nz);
  }
  std::vector<Orientation> seed_orientation(k);
  for (auto& o : seed_orientation) o = sample_orientation(texture, rng);

  const auto tx = axis_distance_table(sx, dims.nx);
  const auto ty = axis_distance_table(sy, dims.ny);
  const auto tz = axis_distance_table(sz, dims.nz);

  std::vector<std::uint32_t> owner(dims.voxels());
  std::vector<double> yz(k);
  std::size_t v = 0;
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      const double* rz = &tz[static_cast<std::size_t>(z) * k];
      const double* ry = &ty[static_cast<std::size_t>(y) * k];
      for (std::size_t s = 0; s < k; ++s) yz[s] = ry[s] + rz[s];
      for (int x = 0; x < dims.nx; ++x, ++v) {
        const double* rx = &tx[static_cast<std::size_t>(x) * k];
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t s = 0; s < k; ++s) {
          const double d = rx[s] + yz[s];
          if (d < best) {
            best = d;
            arg = static_cast<std::uint32_t>(s);
          }
        }
        owner[v] = arg;
      }
    }
  }

  std::vector<std::uint32_t> relabel(k, std::numeric_limits<std::uint32_t>::max());
  for (auto s : owner) relabel[s] = 0;
  Mve mve;
  mve.dims = dims;
  mve.meta = {target_grain_size, texture, seed};
  for (std::size_t s = 0; s < k; ++s) {
    if (relabel[s] == 0) {
      relabel[s] = static_cast<std::uint32_t>(mve.grain_orientations.size());
      mve.grain_orientations.push_back(seed_orientation[s]);
    }
  }
  mve.grain_id.resize(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) mve.grain_id[i] = relabel[owner[i]];
  return mve;
}

void CorpusSpec::validate() const {
  if (seeds_per_size < 0 || textured_count < 0) throw InvalidArgument("corpus counts must be >= 0");
  if (total() > 0 && grain_sizes.empty()) throw InvalidArgument("corpus needs at least one grain size");
  for (int d : grain_sizes)
    if (d < 2 || 2 * d > dims.min_extent())
      throw InvalidArgument("corpus grain size " + std::to_string(d) + " outside [2, " +
                            std::to_string(dims.min_extent() / 2) + "]");
  if (!(texture_perturbation_deg >= 0.0)) throw InvalidArgument("texture perturbation must be >= 0");
}

Mve generate_corpus_entry(const CorpusSpec& spec, std::size_t index) {
  const std::size_t untextured = spec.untextured_count();
  if (index >= spec.total()) throw InvalidArgument("corpus index out of range");
  if (index < untextured) {
    const int size = spec.grain_sizes[index / static_cast<std::size_t>(spec.seeds_per_size)];
    return generate_mve(spec.dims, size, TextureSpec::uniform(), derive_seed(spec.seed, {0, index}));
  }
  Rng rng(derive_seed(spec.seed, {1, index}));
  const int size = spec.grain_sizes[uniform_index(rng, spec.grain_sizes.size())];
  const Eigen::Vector3d c = random_unit_vector(rng);
  const Eigen::Vector3d s = random_unit_vector(rng);
  return generate_mve(spec.dims, size, TextureSpec::fiber(c, s, spec.texture_perturbation_deg),
                      derive_seed(spec.seed, {2, index}));
}

std::vector<Mve> generate_corpus(const CorpusSpec& spec, int jobs) {
  spec.validate();
  std::vector<Mve> corpus(spec.total());
  parallel_for(corpus.size(), jobs, [&](std::size_t i) { corpus[i] = generate_corpus_entry(spec, i); });
  return corpus;
}

Mve crop_subvolume(const Mve& mve, const std::array<int, 3>& origin, const std::array<int, 3>& extent) {
  const std::array<int, 3> n{mve.dims.nx, mve.dims.ny, mve.dims.nz};
  for (int a = 0; a < 3; ++a) {
    if (origin[a] < 0 || extent[a] < 1 || origin[a] + extent[a] > n[a])
      throw InvalidArgument("crop [" + std::to_string(origin[a]) + ", " + std::to_string(origin[a] + extent[a]) +
                            ") exceeds axis " + std::to_string(a) + " of length " + std::to_string(n[a]));
  }
  Mve out;
  out.dims = {extent[0], extent[1], extent[2]};
  out.meta = mve.meta;
  out.grain_id.resize(out.dims.voxels());
  std::size_t v = 0;
  for (int z = 0; z < extent[2]; ++z)
    for (int y = 0; y < extent[1]; ++y)
      for (int x = 0; x < extent[0]; ++x)
        out.grain_id[v++] = mve.grain_id[mve.index(origin[0] + x, origin[1] + y, origin[2] + z)];

  std::vector<std::uint32_t> relabel(mve.grain_count(), std::numeric_limits<std::uint32_t>::max());
  for (auto g : out.grain_id) relabel[g] = 0;
  for (std::size_t g = 0; g < relabel.size(); ++g) {
    if (relabel[g] == 0) {
      relabel[g] = static_cast<std::uint32_t>(out.grain_orientations.size());
      out.grain_orientations.push_back(mve.grain_orientations[g]);
    }
  }
  for (auto& g : out.grain_id) g = relabel[g];
  return out;
}

Mve random_crop(const Mve& mve, int extent, Rng& rng) {
  std::array<int, 3> origin{};
  const std::array<int, 3> n{mve.dims.nx, mve.dims.ny, mve.dims.nz};
  for (int a = 0; a < 3; ++a) {
    if (extent > n[a]) throw InvalidArgument("crop extent larger than MVE");
    origin[a] = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(n[a] - extent + 1)));
  }
  return crop_subvolume(mve, origin, {extent, extent, extent});
}

// ---------------------------------------------------------------------------

namespace {

std::string join_doubles(std::initializer_list<double> vals) {
  std::string s;
  for (double v : vals) {
    if (!s.empty()) s += ',';
    s += io::format_double(v);
  }
  return s;
}

} // namespace

void write_mve(const std::filesystem::path& path, const Mve& mve, const Provenance& prov) {
  mve.validate();
  const auto& t = mve.meta.texture;
  io::HeaderFields h{
      {"version", "1"},
      {"dims", std::to_string(mve.dims.nx) + "," + std::to_string(mve.dims.ny) + "," + std::to_string(mve.dims.nz)},
      {"grains", std::to_string(mve.grain_count())},
      {"texture", t.kind_name()},
      {"perturb_deg", io::format_double(t.perturbation_deg)},
      {"seed", std::to_string(mve.meta.seed)},
      {"grain_size", std::to_string(mve.meta.target_grain_size)},
      {"config", prov.config_hash},
      {"tool", prov.tool_version},
  };
  if (t.kind == TextureSpec::Kind::Fiber) {
    h["fiber"] = join_doubles({t.crystal_axis.x(), t.crystal_axis.y(), t.crystal_axis.z(), t.sample_axis.x(),
                               t.sample_axis.y(), t.sample_axis.z()});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << io::make_header("MVE", h) << '\n';
  io::write_u32_le(out, mve.grain_id);
  std::vector<double> angles;
  angles.reserve(3 * mve.grain_count());
  for (const auto& o : mve.grain_orientations) angles.insert(angles.end(), {o.phi1, o.Phi, o.phi2});
  io::write_f64_le(out, angles);
}

Mve read_mve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  const auto h = io::parse_header(line, "MVE");
  if (io::require_field(h, "version") != "1") throw FormatError("unsupported MVE version");

  Mve mve;
  const auto d = io::split(io::require_field(h, "dims"), ',');
  if (d.size() != 3) throw FormatError("MVE dims must have three entries");
  mve.dims = {static_cast<int>(io::parse_int(d[0])), static_cast<int>(io::parse_int(d[1])),
              static_cast<int>(io::parse_int(d[2]))};
  if (mve.dims.nx <= 0 || mve.dims.ny <= 0 || mve.dims.nz <= 0) throw FormatError("MVE dims must be positive");
  const auto grains = static_cast<std::size_t>(io::parse_int(io::require_field(h, "grains")));
  mve.meta.seed = static_cast<std::uint64_t>(std::stoull(io::require_field(h, "seed")));
  mve.meta.target_grain_size = static_cast<int>(io::parse_int(io::require_field(h, "grain_size")));
  mve.meta.texture.perturbation_deg = io::parse_double(io::require_field(h, "perturb_deg"));
  const auto& kind = io::require_field(h, "texture");
  if (kind == "fiber") {
    const auto f = io::split(io::require_field(h, "fiber"), ',');
    if (f.size() != 6) throw FormatError("fiber parameters must have six entries");
    mve.meta.texture.kind = TextureSpec::Kind::Fiber;
    mve.meta.texture.crystal_axis = {io::parse_double(f[0]), io::parse_double(f[1]), io::parse_double(f[2])};
    mve.meta.texture.sample_axis = {io::parse_double(f[3]), io::parse_double(f[4]), io::parse_double(f[5])};
  } else if (kind != "uniform") {
    throw FormatError("unknown texture kind '" + kind + "'");
  }

  mve.grain_id.resize(mve.dims.voxels());
  io::read_u32_le(in, mve.grain_id);
  std::vector<double> angles(3 * grains);
  io::read_f64_le(in, angles);
  mve.grain_orientations.resize(grains);
  for (std::size_t g = 0; g < grains; ++g)
    mve.grain_orientations[g] = {angles[3 * g], angles[3 * g + 1], angles[3 * g + 2]};
  mve.validate();
  return mve;
}

} // namespace mvedoe
