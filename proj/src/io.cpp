#include "mvedoe/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mvedoe/error.hpp"

namespace mvedoe::io {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const char* first = text.data();
  if (!text.empty() && text.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FormatError("not a number: '" + std::string(text) + "'");
  return v;
}

std::int64_t parse_int(std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FormatError("not an integer: '" + std::string(text) + "'");
  return v;
}

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return buf.data();
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      return out;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::string make_header(std::string_view magic, const HeaderFields& fields) {
  std::string line(magic);
  for (const auto& [k, v] : fields) {
    if (v.find_first_of(" \t\n") != std::string::npos)
      throw Error("header value for '" + k + "' contains whitespace");
    line += ' ';
    line += k;
    line += '=';
    line += v;
  }
  return line;
}

HeaderFields parse_header(std::string_view line, std::string_view magic) {
  line = trim(line);
  std::istringstream in{std::string(line)};
  std::string token;
  in >> token;
  if (token != magic)
    throw FormatError("expected header '" + std::string(magic) + "', found '" + token + "'");
  HeaderFields fields;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw FormatError("malformed header token '" + token + "'");
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return fields;
}

const std::string& require_field(const HeaderFields& h, const std::string& key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("header field '" + key + "' missing");
  return it->second;
}

namespace {

template <class T>
T to_le(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void write_le(std::ostream& os, std::span<const T> values) {
  for (T v : values) {
    const auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(to_le(v));
    os.write(bytes.data(), bytes.size());
  }
  if (!os) throw Error("binary write failed");
}

template <class T>
void read_le(std::istream& is, std::span<T> out) {
  for (T& v : out) {
    std::array<char, sizeof(T)> bytes{};
    is.read(bytes.data(), bytes.size());
    if (is.gcount() != static_cast<std::streamsize>(bytes.size()))
      throw FormatError("binary payload truncated");
    v = to_le(std::bit_cast<T>(bytes));
  }
}

} // namespace

void write_u32_le(std::ostream& os, std::span<const std::uint32_t> values) { write_le(os, values); }
void write_f64_le(std::ostream& os, std::span<const double> values) { write_le(os, values); }
void read_u32_le(std::istream& is, std::span<std::uint32_t> out) { read_le(is, out); }
void read_f64_le(std::istream& is, std::span<double> out) { read_le(is, out); }

void require_file(const std::filesystem::path& path, std::string_view producer) {
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string(), std::string(producer));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

} // namespace mvedoe::io
