#include "mvedoe/elastic.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/LU>

#include "mvedoe/error.hpp"

namespace mvedoe {

Stiffness cubic_stiffness(double c11, double c12, double c44) {
  if (!(c11 > std::abs(c12)) || !(c11 + 2.0 * c12 > 0.0) || !(c44 > 0.0))
    throw InvalidArgument("cubic elastic constants violate stability (C11 > |C12|, C11 + 2 C12 > 0, C44 > 0)");
  Stiffness c = Stiffness::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c(i, j) = i == j ? c11 : c12;
  for (int i = 3; i < 6; ++i) c(i, i) = c44;
  return c;
}

double zener_ratio(const CubicConstants& c) { return 2.0 * c.c44 / (c.c11 - c.c12); }

Stiffness rotate_stiffness(const Stiffness& c, const Eigen::Matrix3d& r) {
  if (!(r.transpose() * r).isApprox(Eigen::Matrix3d::Identity(), 1e-9) || std::abs(r.determinant() - 1.0) > 1e-9)
    throw InvalidArgument("rotate_stiffness: matrix is not a proper rotation");
  const auto a = [&](int i, int j) { return r(i, j); };
  Stiffness m;
  // Rows/cols follow Voigt order (11, 22, 33, 23, 13, 12).
  constexpr int vi[6] = {0, 1, 2, 1, 0, 0};
  constexpr int vj[6] = {0, 1, 2, 2, 2, 1};
  for (int p = 0; p < 6; ++p) {
    const int i = vi[p], j = vj[p];
    for (int q = 0; q < 6; ++q) {
      const int k = vi[q], l = vj[q];
      m(p, q) = q < 3 ? a(i, k) * a(j, l) : a(i, k) * a(j, l) + a(i, l) * a(j, k);
    }
  }
  return m * c * m.transpose();
}

std::pair<double, double> stiffness_invariants(const Stiffness& c) {
  const double bulk = c.topLeftCorner<3, 3>().sum();
  const double shear = c.topLeftCorner<3, 3>().trace() + 2.0 * c.bottomRightCorner<3, 3>().trace();
  return {bulk, shear};
}

Voigt6 StressField::volume_average() const {
  Voigt6 sum = Voigt6::Zero();
  const std::size_t n = values.size() / 6;
  for (std::size_t v = 0; v < n; ++v) sum += at(v);
  return sum / static_cast<double>(n);
}

StressField taylor_stress_field(const Mve& mve, const OracleConfig& config) {
  const Stiffness crystal = cubic_stiffness(config.constants);
  const auto counts = mve.grain_voxel_counts();
  std::vector<Stiffness> grain_c(mve.grain_count());
  Stiffness mean = Stiffness::Zero();
  const double volume = static_cast<double>(mve.voxel_count());
  for (std::size_t g = 0; g < grain_c.size(); ++g) {
    grain_c[g] = rotate_stiffness(crystal, euler_to_rotation(mve.grain_orientations[g]).transpose());
    mean += (static_cast<double>(counts[g]) / volume) * grain_c[g];
  }
  const Eigen::FullPivLU<Stiffness> lu(mean);
  if (!lu.isInvertible()) throw InvalidArgument("volume-averaged stiffness is singular");
  const Voigt6 strain = lu.solve(config.applied);

  std::vector<Voigt6> grain_stress(grain_c.size());
  for (std::size_t g = 0; g < grain_c.size(); ++g) grain_stress[g] = grain_c[g] * strain;

  StressField field;
  field.dims = mve.dims;
  field.applied = config.applied;
  field.values.resize(6 * mve.voxel_count());
  for (std::size_t v = 0; v < mve.voxel_count(); ++v)
    Eigen::Map<Voigt6>(field.values.data() + 6 * v) = grain_stress[mve.grain_id[v]];
  return config.smoothing ? smooth_periodic(field) : field;
}

StressField smooth_periodic(const StressField& field) {
  StressField out = field;
  const auto& d = field.dims;
  auto idx = [&](int x, int y, int z) {
    x = (x + d.nx) % d.nx;
    y = (y + d.ny) % d.ny;
    z = (z + d.nz) % d.nz;
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(d.nx) * (static_cast<std::size_t>(y) + static_cast<std::size_t>(d.ny) * z);
  };
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        Voigt6 sum = Voigt6::Zero();
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) sum += field.at(idx(x + dx, y + dy, z + dz));
        Eigen::Map<Voigt6>(out.values.data() + 6 * idx(x, y, z)) = sum / 27.0;
      }
  return out;
}

double von_mises(const Voigt6& s) {
  const double d1 = s[0] - s[1], d2 = s[1] - s[2], d3 = s[2] - s[0];
  return std::sqrt(0.5 * (d1 * d1 + d2 * d2 + d3 * d3) + 3.0 * (s[3] * s[3] + s[4] * s[4] + s[5] * s[5]));
}

const std::array<std::string, kSummarySize>& field_summary_names() {
  static const std::array<std::string, kSummarySize> names{
      "mean_s11", "mean_s22", "mean_s33", "mean_s23", "mean_s13", "mean_s12", "std_s11",
      "std_s22",  "std_s33",  "std_s23",  "std_s13",  "std_s12",  "mean_von_mises"};
  return names;
}

FieldSummary field_summary(const StressField& field) {
  // Welford update per component.
  const std::size_t n = field.values.size() / 6;
  if (n == 0) throw InvalidArgument("empty stress field");
  std::array<double, 6> mean{}, m2{};
  double vm = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    const Voigt6 s = field.at(v);
    const double k = static_cast<double>(v + 1);
    for (int c = 0; c < 6; ++c) {
      const double delta = s[c] - mean[c];
      mean[c] += delta / k;
      m2[c] += delta * (s[c] - mean[c]);
    }
    vm += (von_mises(s) - vm) / k;
  }
  FieldSummary out{};
  for (int c = 0; c < 6; ++c) {
    out[c] = mean[c];
    out[6 + c] = std::sqrt(std::max(0.0, m2[c] / static_cast<double>(n)));
  }
  out[12] = vm;
  return out;
}

void write_stress_field(const std::filesystem::path& path, const StressField& field, const Provenance& prov) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  std::string applied;
  for (int c = 0; c < 6; ++c) applied += (c ? "," : "") + io::format_double(field.applied[c]);
  out << io::make_header("STRESS", {{"version", "1"},
                                    {"dims", std::to_string(field.dims.nx) + "," + std::to_string(field.dims.ny) +
                                                 "," + std::to_string(field.dims.nz)},
                                    {"applied", applied},
                                    {"units", "MPa"},
                                    {"config", prov.config_hash},
                                    {"tool", prov.tool_version}})
      << '\n';
  io::write_f64_le(out, field.values);
}

StressField read_stress_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  std::getline(in, line);
  const auto h = io::parse_header(line, "STRESS");
  StressField f;
  const auto d = io::split(io::require_field(h, "dims"), ',');
  const auto a = io::split(io::require_field(h, "applied"), ',');
  if (d.size() != 3 || a.size() != 6) throw FormatError("malformed stress field header");
  f.dims = {static_cast<int>(io::parse_int(d[0])), static_cast<int>(io::parse_int(d[1])),
            static_cast<int>(io::parse_int(d[2]))};
  for (int c = 0; c < 6; ++c) f.applied[c] = io::parse_double(a[static_cast<std::size_t>(c)]);
  f.values.resize(6 * f.dims.voxels());
  io::read_f64_le(in, f.values);
  return f;
}

} // namespace mvedoe
