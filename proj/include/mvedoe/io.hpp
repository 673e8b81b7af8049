#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvedoe {

#ifdef MVEDOE_VERSION
inline constexpr std::string_view kToolVersion = MVEDOE_VERSION;
#else
inline constexpr std::string_view kToolVersion = "0.0.0";
#endif

/// Provenance stamped into every artifact header.
struct Provenance {
  std::string config_hash = "none";
  std::string tool_version = std::string(kToolVersion);
};

namespace io {

/// Shortest text that parses back to the same double ("inf", "-inf", "nan"
/// for non-finite values).
std::string format_double(double v);
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);

/// Header lines are "MAGIC key=value key=value ...". Values must not contain
/// spaces.
using HeaderFields = std::map<std::string, std::string>;
std::string make_header(std::string_view magic, const HeaderFields& fields);
HeaderFields parse_header(std::string_view line, std::string_view magic);
const std::string& require_field(const HeaderFields& h, const std::string& key);

void write_u32_le(std::ostream& os, std::span<const std::uint32_t> values);
void write_f64_le(std::ostream& os, std::span<const double> values);
void read_u32_le(std::istream& is, std::span<std::uint32_t> out);
void read_f64_le(std::istream& is, std::span<double> out);

/// Throws MissingArtifact naming `producer` if `path` does not exist.
void require_file(const std::filesystem::path& path, std::string_view producer);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

} // namespace io
} // namespace mvedoe
