#include "mvedoe/features.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "mvedoe/error.hpp"

namespace mvedoe {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Classic: return "classic";
    case FeatureKind::Contrastive: return "contrastive";
    case FeatureKind::External: return "external";
  }
  return "external";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "classic") return FeatureKind::Classic;
  if (name == "contrastive") return FeatureKind::Contrastive;
  if (name == "external") return FeatureKind::External;
  throw InvalidArgument("unknown feature kind '" + name + "'");
}

Eigen::VectorXd MinMax::apply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double span = max[j] - min[j];
    out[j] = span > 0.0 ? (x[j] - min[j]) / span : 0.5;
  }
  return out;
}

RowMatrix MinMax::apply(const RowMatrix& x) const {
  RowMatrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double span = max[j] - min[j];
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out(i, j) = span > 0.0 ? (x(i, j) - min[j]) / span : 0.5;
  }
  return out;
}

MinMax MinMax::fit(const RowMatrix& x) {
  if (x.rows() == 0) throw InvalidArgument("cannot fit a min-max record on zero rows");
  return {x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
}

void FeatureMatrix::validate() const {
  if (ids.size() != rows()) throw FormatError("feature ids do not match row count");
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!seen.insert(ids[i]).second) throw FormatError("duplicate feature id '" + ids[i] + "'");
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (!std::isfinite(values(i, j)))
        throw FormatError("non-finite feature value at row " + std::to_string(i) + " (id '" + ids[i] +
                          "'), column f" + std::to_string(j));
  if (normalization) {
    if (normalization->min.size() != values.cols() || normalization->max.size() != values.cols())
      throw FormatError("normalization record has the wrong dimension");
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      if (!(normalization->max[j] >= normalization->min[j]))
        throw FormatError("normalization record has max < min in column f" + std::to_string(j));
  }
}

FeatureMatrix FeatureMatrix::subset(const std::vector<std::size_t>& rows_to_keep) const {
  FeatureMatrix out;
  out.kind = kind;
  out.values.resize(static_cast<Eigen::Index>(rows_to_keep.size()), values.cols());
  out.ids.reserve(rows_to_keep.size());
  for (std::size_t r = 0; r < rows_to_keep.size(); ++r) {
    if (rows_to_keep[r] >= rows()) throw InvalidArgument("feature subset row out of range");
    out.values.row(static_cast<Eigen::Index>(r)) = values.row(static_cast<Eigen::Index>(rows_to_keep[r]));
    out.ids.push_back(ids[rows_to_keep[r]]);
  }
  return out;
}

// ---------------------------------------------------------------------------

const std::array<bool, 18>& gsh_retained_mask() {
  static const std::array<bool, 18> mask = [] {
    std::array<double, 18> peak{};
    Rng rng(0x6a09e667f3bcc908ULL);
    for (int s = 0; s < 10000; ++s) {
      const GshVector t = gsh_basis(uniform_orientation(rng));
      for (int k = 0; k < kGshTerms; ++k) {
        peak[k] = std::max(peak[k], std::abs(t[k].real()));
        peak[k + kGshTerms] = std::max(peak[k + kGshTerms], std::abs(t[k].imag()));
      }
    }
    std::array<bool, 18> m{};
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = peak[k] >= 1e-10;
    return m;
  }();
  return mask;
}

std::size_t gsh_retained_count() {
  const auto& m = gsh_retained_mask();
  return static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
}

Eigen::VectorXd gsh_feature_block(const Mve& mve) {
  const GshVector f = gsh_coefficients(mve);
  const auto& mask = gsh_retained_mask();
  Eigen::VectorXd out(static_cast<Eigen::Index>(gsh_retained_count()));
  Eigen::Index j = 0;
  for (int k = 0; k < kGshTerms; ++k)
    if (mask[k]) out[j++] = f[k].real();
  for (int k = 0; k < kGshTerms; ++k)
    if (mask[k + kGshTerms]) out[j++] = f[k].imag();
  return out;
}

Eigen::VectorXd classic_descriptor(const Mve& mve) {
  const Eigen::VectorXd gsh = gsh_feature_block(mve);
  Eigen::VectorXd out(gsh.size() + 1);
  out << gsh, kGrainSizeScale * mve.meta.target_grain_size;
  return out;
}

double interface_density(const Mve& mve) {
  const auto& d = mve.dims;
  std::size_t pairs = 0, differing = 0;
  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const auto g = mve.grain_id[mve.index(x, y, z)];
        if (x + 1 < d.nx) { ++pairs; differing += g != mve.grain_id[mve.index(x + 1, y, z)]; }
        if (y + 1 < d.ny) { ++pairs; differing += g != mve.grain_id[mve.index(x, y + 1, z)]; }
        if (z + 1 < d.nz) { ++pairs; differing += g != mve.grain_id[mve.index(x, y, z + 1)]; }
      }
  return pairs == 0 ? 0.0 : static_cast<double>(differing) / static_cast<double>(pairs);
}

Eigen::VectorXd subvolume_statistics(const Mve& mve) {
  const Eigen::VectorXd gsh = gsh_feature_block(mve);
  const auto counts = mve.grain_voxel_counts();
  const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
  Eigen::VectorXd out(gsh.size() + 2);
  out << gsh, interface_density(mve), std::log1p(static_cast<double>(present));
  return out;
}

FeatureMatrix normalize_features(const FeatureMatrix& f) {
  if (f.rows() < 2) throw InvalidArgument("normalization needs at least two rows");
  f.validate();
  FeatureMatrix out = f;
  out.normalization = MinMax::fit(f.values);
  out.values = out.normalization->apply(f.values);
  return out;
}

Eigen::MatrixXd distance_matrix(const FeatureMatrix& f) {
  for (Eigen::Index i = 0; i < f.values.size(); ++i)
    if (!std::isfinite(f.values.data()[i])) throw InvalidArgument("distance_matrix: non-finite feature value");
  const Eigen::Index n = f.values.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (f.values.row(i) - f.values.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

// ---------------------------------------------------------------------------

namespace {

std::string provenance_comment(const Provenance& prov, const FeatureMatrix& f) {
  return "# features kind=" + to_string(f.kind) + " config=" + prov.config_hash + " tool=" + prov.tool_version +
         "\n";
}

} // namespace

void save_features_csv(const std::filesystem::path& path, const FeatureMatrix& f, const Provenance& prov) {
  f.validate();
  std::ostringstream out;
  out << provenance_comment(prov, f);
  out << "id";
  for (std::size_t j = 0; j < f.cols(); ++j) out << ",f" << j;
  out << '\n';
  for (std::size_t i = 0; i < f.rows(); ++i) {
    if (f.ids[i].find_first_of(",\n\r") != std::string::npos)
      throw InvalidArgument("feature id '" + f.ids[i] + "' contains a separator");
    out << f.ids[i];
    for (std::size_t j = 0; j < f.cols(); ++j)
      out << ',' << io::format_double(f.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  io::write_text(path, out.str());
}

void save_features_binary(const std::filesystem::path& path, const FeatureMatrix& f, const Provenance& prov) {
  f.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << io::make_header("FEATURES", {{"N", std::to_string(f.rows())},
                                      {"p", std::to_string(f.cols())},
                                      {"config", prov.config_hash},
                                      {"tool", prov.tool_version}})
      << '\n';
  io::write_f64_le(out, std::span<const double>(f.values.data(), static_cast<std::size_t>(f.values.size())));
}

FeatureMatrix load_features(const std::filesystem::path& path, FeatureFormat format, FeatureKind kind) {
  FeatureMatrix f;
  f.kind = kind;
  if (format == FeatureFormat::Binary) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    const auto h = io::parse_header(line, "FEATURES");
    const auto n = io::parse_int(io::require_field(h, "N"));
    const auto p = io::parse_int(io::require_field(h, "p"));
    if (n < 0 || p < 0) throw FormatError("negative feature matrix shape");
    f.values.resize(n, p);
    io::read_f64_le(in, std::span<double>(f.values.data(), static_cast<std::size_t>(f.values.size())));
    for (std::int64_t i = 0; i < n; ++i) f.ids.push_back(std::to_string(i));
    f.validate();
    return f;
  }

  std::istringstream in(io::read_text(path));
  std::string line;
  std::size_t line_no = 0;
  std::ptrdiff_t width = -1;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = io::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cells = io::split(text, ',');
    if (width < 0) {
      if (cells.empty() || io::trim(cells[0]) != "id") throw FormatError(path.string() + ": header must start with 'id'");
      width = static_cast<std::ptrdiff_t>(cells.size()) - 1;
      continue;
    }
    const std::string id(io::trim(cells[0]));
    const std::string where = path.string() + ": row " + std::to_string(rows.size()) + " (line " +
                              std::to_string(line_no) + ", id '" + id + "')";
    if (static_cast<std::ptrdiff_t>(cells.size()) - 1 != width)
      throw FormatError(where + ": expected " + std::to_string(width) + " values, found " +
                        std::to_string(cells.size() - 1));
    std::vector<double> row;
    row.reserve(static_cast<std::size_t>(width));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      double v = 0.0;
      try {
        v = io::parse_double(cells[j]);
      } catch (const FormatError&) {
        throw FormatError(where + ": column f" + std::to_string(j - 1) + " is not a number");
      }
      if (!std::isfinite(v)) throw FormatError(where + ": non-finite value in column f" + std::to_string(j - 1));
      row.push_back(v);
    }
    f.ids.push_back(id);
    rows.push_back(std::move(row));
  }
  if (width < 0) throw FormatError(path.string() + ": missing header");
  f.values.resize(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::ptrdiff_t j = 0; j < width; ++j) f.values(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < f.ids.size(); ++i)
    if (!seen.insert(f.ids[i]).second)
      throw FormatError(path.string() + ": row " + std::to_string(i) + ": duplicate id '" + f.ids[i] + "'");
  return f;
}

} // namespace mvedoe
