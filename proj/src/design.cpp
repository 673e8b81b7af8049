#include "mvedoe/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "mvedoe/error.hpp"

namespace mvedoe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGapFloor = 1e-12;

void check_request(const FeatureMatrix& f, std::size_t n) {
  if (!f.normalization) throw InvalidArgument("designs require min-max normalized features");
  if (n < 1) throw InvalidArgument("design size must be >= 1");
  if (n > f.rows())
    throw InvalidArgument("design size " + std::to_string(n) + " exceeds candidate count " + std::to_string(f.rows()));
}

std::size_t resolve_start(const FeatureMatrix& f, const DesignStart& start) {
  if (start.index) {
    if (*start.index >= f.rows()) throw InvalidArgument("design start index out of range");
    return *start.index;
  }
  Rng rng(start.seed);
  return uniform_index(rng, f.rows());
}

double distance(const RowMatrix& x, Eigen::Index i, Eigen::Index j) { return (x.row(i) - x.row(j)).norm(); }

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

double maxpro_term(const RowMatrix& x, Eigen::Index i, Eigen::Index j, double k) {
  double s = 0.0;
  for (Eigen::Index l = 0; l < x.cols(); ++l) s += std::log(std::max(std::abs(x(i, l) - x(j, l)), kGapFloor));
  return -k * s;
}

/// Extends `design` to `n` points by maximin steps over unselected rows.
void maximin_fill(const RowMatrix& x, std::vector<std::size_t>& design, std::vector<bool>& selected,
                  std::size_t n, std::vector<double>& trace) {
  const auto rows = static_cast<std::size_t>(x.rows());
  std::vector<double> nearest(rows, kInf);
  for (std::size_t c = 0; c < rows; ++c)
    for (auto s : design)
      nearest[c] = std::min(nearest[c], distance(x, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)));
  while (design.size() < n) {
    std::size_t best = rows;
    double best_d = -1.0;
    for (std::size_t c = 0; c < rows; ++c)
      if (!selected[c] && nearest[c] > best_d) {
        best_d = nearest[c];
        best = c;
      }
    design.push_back(best);
    selected[best] = true;
    trace.push_back(best_d);
    for (std::size_t c = 0; c < rows; ++c)
      nearest[c] =
          std::min(nearest[c], distance(x, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(best)));
  }
}

} // namespace

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::Cmm: return "cmm";
    case Criterion::MaxPro: return "maxpro";
    case Criterion::Twin: return "twin";
    case Criterion::Random: return "random";
  }
  return "random";
}

Criterion parse_criterion(const std::string& name) {
  if (name == "cmm") return Criterion::Cmm;
  if (name == "maxpro") return Criterion::MaxPro;
  if (name == "twin") return Criterion::Twin;
  if (name == "random") return Criterion::Random;
  throw InvalidArgument("unknown design criterion '" + name + "'");
}

Design cmm_greedy(const FeatureMatrix& f, std::size_t n, DesignStart start) {
  check_request(f, n);
  Design d;
  d.criterion = Criterion::Cmm;
  d.provenance = f.kind;
  d.seed = start.index ? 0 : start.seed;
  std::vector<bool> selected(f.rows(), false);
  const std::size_t first = resolve_start(f, start);
  d.indices.push_back(first);
  selected[first] = true;
  d.trace.push_back(kInf);
  maximin_fill(f.values, d.indices, selected, n, d.trace);
  return d;
}

Design maxpro_greedy(const FeatureMatrix& f, std::size_t n, DesignStart start, double k) {
  check_request(f, n);
  if (f.cols() < 1) throw InvalidArgument("maxPro needs at least one feature dimension");
  if (!(k > 0.0)) throw InvalidArgument("maxPro exponent must be positive");
  Design d;
  d.criterion = Criterion::MaxPro;
  d.provenance = f.kind;
  d.seed = start.index ? 0 : start.seed;
  const auto rows = f.rows();
  std::vector<bool> selected(rows, false);
  std::vector<double> log_cost(rows, -kInf);
  std::size_t current = resolve_start(f, start);
  d.indices.push_back(current);
  selected[current] = true;
  d.trace.push_back(-kInf);
  while (d.indices.size() < n) {
    for (std::size_t c = 0; c < rows; ++c)
      if (!selected[c])
        log_cost[c] = log_add_exp(
            log_cost[c], maxpro_term(f.values, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(current), k));
    std::size_t best = rows;
    double best_cost = kInf;
    for (std::size_t c = 0; c < rows; ++c)
      if (!selected[c] && (best == rows || log_cost[c] < best_cost)) {
        best_cost = log_cost[c];
        best = c;
      }
    current = best;
    d.indices.push_back(current);
    selected[current] = true;
    d.trace.push_back(best_cost);
  }
  return d;
}

Design twin_design(const FeatureMatrix& f, std::size_t n) {
  check_request(f, n);
  const RowMatrix& x = f.values;
  const auto rows = f.rows();
  const std::size_t r =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(static_cast<double>(rows) / static_cast<double>(n))));

  Design d;
  d.criterion = Criterion::Twin;
  d.provenance = f.kind;
  std::vector<bool> assigned(rows, false), selected(rows, false);
  std::size_t remaining = rows;

  auto nearest_unassigned = [&](const Eigen::RowVectorXd& target) {
    std::size_t best = rows;
    double best_d = kInf;
    for (std::size_t c = 0; c < rows; ++c) {
      if (assigned[c]) continue;
      const double dist = (x.row(static_cast<Eigen::Index>(c)) - target).norm();
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    return best;
  };

  std::size_t current = nearest_unassigned(x.colwise().mean());
  std::vector<std::pair<double, std::size_t>> candidates;
  while (d.indices.size() < n && remaining > 0) {
    d.indices.push_back(current);
    selected[current] = true;
    assigned[current] = true;
    --remaining;

    candidates.clear();
    for (std::size_t c = 0; c < rows; ++c)
      if (!assigned[c])
        candidates.emplace_back(distance(x, static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(current)), c);
    const std::size_t take = std::min(r - 1, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end());

    Eigen::RowVectorXd centroid = x.row(static_cast<Eigen::Index>(current));
    double radius = 0.0;
    for (std::size_t t = 0; t < take; ++t) {
      assigned[candidates[t].second] = true;
      centroid += x.row(static_cast<Eigen::Index>(candidates[t].second));
      radius = std::max(radius, candidates[t].first);
    }
    remaining -= take;
    d.trace.push_back(radius);
    if (remaining == 0) break;
    centroid /= static_cast<double>(take + 1);
    current = nearest_unassigned(centroid);
  }
  if (d.indices.size() < n) maximin_fill(x, d.indices, selected, n, d.trace);
  return d;
}

Design random_design(const FeatureMatrix& f, std::size_t n, std::uint64_t seed) {
  if (n < 1 || n > f.rows())
    throw InvalidArgument("design size " + std::to_string(n) + " outside [1, " + std::to_string(f.rows()) + "]");
  Design d;
  d.criterion = Criterion::Random;
  d.provenance = f.kind;
  d.seed = seed;
  std::vector<std::size_t> perm(f.rows());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, perm.size() - i);
    std::swap(perm[i], perm[j]);
  }
  d.indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n));
  return d;
}

Design build_design(Criterion criterion, const FeatureMatrix& f, std::size_t n, std::uint64_t seed,
                    double maxpro_k) {
  switch (criterion) {
    case Criterion::Cmm: return cmm_greedy(f, n, DesignStart::seeded(seed));
    case Criterion::MaxPro: return maxpro_greedy(f, n, DesignStart::seeded(seed), maxpro_k);
    case Criterion::Twin: return twin_design(f, n);
    case Criterion::Random: return random_design(f, n, seed);
  }
  throw InvalidArgument("unknown criterion");
}

// ---------------------------------------------------------------------------

double DesignDiagnostics::worst_projected_spacing() const {
  if (min_projected_spacing.empty()) return kInf;
  return *std::min_element(min_projected_spacing.begin(), min_projected_spacing.end());
}

namespace {

double mean_cross_distance(const RowMatrix& a, const RowMatrix& b) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) sum += (a.row(i) - b.row(j)).norm();
  return sum / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

double mean_self_distance(const RowMatrix& a) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = i + 1; j < a.rows(); ++j) sum += (a.row(i) - a.row(j)).norm();
  return 2.0 * sum / (static_cast<double>(a.rows()) * static_cast<double>(a.rows()));
}

} // namespace

double energy_distance(const RowMatrix& a, const RowMatrix& b) {
  if (a.rows() == 0 || b.rows() == 0) throw InvalidArgument("energy distance needs non-empty samples");
  if (a.cols() != b.cols()) throw InvalidArgument("energy distance dimension mismatch");
  const double e = 2.0 * mean_cross_distance(a, b) - mean_self_distance(a) - mean_self_distance(b);
  return std::max(0.0, e);
}

std::optional<double> maxpro_log_criterion(const RowMatrix& x, double k) {
  if (x.rows() < 2) return std::nullopt;
  double acc = -kInf;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) acc = log_add_exp(acc, maxpro_term(x, i, j, k));
  return acc;
}

std::optional<double> min_pairwise_distance(const RowMatrix& x) {
  if (x.rows() < 2) return std::nullopt;
  double best = kInf;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) best = std::min(best, distance(x, i, j));
  return best;
}

std::vector<double> min_projected_spacing(const RowMatrix& x) {
  std::vector<double> out;
  if (x.rows() < 2) return out;
  std::vector<double> col(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index l = 0; l < x.cols(); ++l) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) col[static_cast<std::size_t>(i)] = x(i, l);
    std::sort(col.begin(), col.end());
    double gap = kInf;
    for (std::size_t i = 1; i < col.size(); ++i) gap = std::min(gap, col[i] - col[i - 1]);
    out.push_back(gap);
  }
  return out;
}

double grain_size_tv_distance(std::span<const std::size_t> design, std::span<const int> grain_sizes,
                              std::vector<GrainSizeBin>* histogram) {
  if (design.empty() || grain_sizes.empty()) throw InvalidArgument("grain-size histogram needs data");
  std::map<int, GrainSizeBin> bins;
  for (int s : grain_sizes) {
    auto& b = bins[s];
    b.grain_size = s;
    ++b.pool_count;
  }
  for (auto i : design) {
    if (i >= grain_sizes.size()) throw InvalidArgument("design index outside grain-size table");
    ++bins[grain_sizes[i]].design_count;
  }
  double tv = 0.0;
  for (const auto& [size, b] : bins)
    tv += std::abs(static_cast<double>(b.design_count) / static_cast<double>(design.size()) -
                   static_cast<double>(b.pool_count) / static_cast<double>(grain_sizes.size()));
  if (histogram) {
    histogram->clear();
    for (const auto& [size, b] : bins) histogram->push_back(b);
  }
  return 0.5 * tv;
}

DesignDiagnostics design_diagnostics(const Design& design, const FeatureMatrix& f, std::span<const int> grain_sizes,
                                     double maxpro_k) {
  for (auto i : design.indices)
    if (i >= f.rows()) throw InvalidArgument("design index out of range");
  RowMatrix x(static_cast<Eigen::Index>(design.indices.size()), f.values.cols());
  for (std::size_t r = 0; r < design.indices.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = f.values.row(static_cast<Eigen::Index>(design.indices[r]));

  DesignDiagnostics diag;
  diag.min_pairwise_distance = min_pairwise_distance(x);
  diag.maxpro_log_criterion = maxpro_log_criterion(x, maxpro_k);
  diag.energy_distance_to_pool = energy_distance(x, f.values);
  diag.min_projected_spacing = min_projected_spacing(x);
  if (!grain_sizes.empty()) {
    if (grain_sizes.size() != f.rows()) throw InvalidArgument("grain-size table does not match candidate count");
    diag.grain_size_tv_distance = grain_size_tv_distance(design.indices, grain_sizes, &diag.grain_size_histogram);
  }
  return diag;
}

// ---------------------------------------------------------------------------

namespace {

std::string opt(const std::optional<double>& v) { return v ? io::format_double(*v) : "nan"; }

template <class T, class F>
std::string join(const std::vector<T>& v, F&& fmt) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += fmt(v[i]);
  }
  return s;
}

} // namespace

void write_design(const std::filesystem::path& path, const Design& design, const DesignDiagnostics& diag,
                  const Provenance& prov) {
  std::ostringstream out;
  out << "# mvedoe design\n";
  out << "version=1\n";
  out << "tool=" << prov.tool_version << '\n';
  out << "config=" << prov.config_hash << '\n';
  out << "criterion=" << to_string(design.criterion) << '\n';
  out << "provenance=" << to_string(design.provenance) << '\n';
  out << "n=" << design.indices.size() << '\n';
  out << "seed=" << design.seed << '\n';
  out << "indices=" << join(design.indices, [](std::size_t i) { return std::to_string(i); }) << '\n';
  out << "trace=" << join(design.trace, [](double v) { return io::format_double(v); }) << '\n';
  out << "[diagnostics]\n";
  out << "min_pairwise_distance=" << opt(diag.min_pairwise_distance) << '\n';
  out << "maxpro_log_criterion=" << opt(diag.maxpro_log_criterion) << '\n';
  out << "energy_distance_to_pool=" << io::format_double(diag.energy_distance_to_pool) << '\n';
  out << "min_projected_spacing=" << join(diag.min_projected_spacing, [](double v) { return io::format_double(v); })
      << '\n';
  if (diag.grain_size_tv_distance) {
    out << "grain_size_tv_distance=" << io::format_double(*diag.grain_size_tv_distance) << '\n';
    out << "grain_size_histogram=" << join(diag.grain_size_histogram, [](const GrainSizeBin& b) {
      return std::to_string(b.grain_size) + ":" + std::to_string(b.design_count) + ":" + std::to_string(b.pool_count);
    }) << '\n';
  }
  io::write_text(path, out.str());
}

Design read_design(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError(path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(path.string() + ": missing '" + key + "'");
    return it->second;
  };
  Design d;
  d.criterion = parse_criterion(need("criterion"));
  d.provenance = parse_feature_kind(need("provenance"));
  d.seed = std::stoull(need("seed"));
  std::istringstream idx(need("indices"));
  for (std::string tok; idx >> tok;) d.indices.push_back(static_cast<std::size_t>(io::parse_int(tok)));
  std::istringstream tr(need("trace"));
  for (std::string tok; tr >> tok;) d.trace.push_back(io::parse_double(tok));
  if (d.indices.size() != static_cast<std::size_t>(io::parse_int(need("n"))))
    throw FormatError(path.string() + ": index count does not match n");
  return d;
}

void write_diagnostics_csv(const std::filesystem::path& path, std::span<const LabelledDiagnostics> rows,
                           const Provenance& prov) {
  std::ostringstream out;
  out << "# design_diagnostics config=" << prov.config_hash << " tool=" << prov.tool_version << '\n';
  out << "label,criterion,n,min_pairwise_distance,maxpro_log_criterion,energy_distance_to_pool,"
         "worst_projected_spacing,grain_size_tv_distance\n";
  for (const auto& r : rows) {
    const auto& d = r.diagnostics;
    out << r.label << ',' << to_string(r.criterion) << ',' << r.n << ',' << opt(d.min_pairwise_distance) << ','
        << opt(d.maxpro_log_criterion) << ',' << io::format_double(d.energy_distance_to_pool) << ','
        << io::format_double(d.worst_projected_spacing()) << ',' << opt(d.grain_size_tv_distance) << '\n';
  }
  io::write_text(path, out.str());
}

} // namespace mvedoe
