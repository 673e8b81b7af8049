#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "mvedoe/error.hpp"
#include "mvedoe/io.hpp"
#include "mvedoe/rng.hpp"

using namespace mvedoe;

TEST_SUITE("io") {

TEST_CASE("format_double round trips") {
  Rng rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = std::ldexp(uniform(rng, -1, 1), static_cast<int>(uniform(rng, -60, 60)));
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isnan(io::parse_double(io::format_double(std::nan("")))));
  CHECK_THROWS_AS(io::parse_double("1.5x"), FormatError);
  CHECK_THROWS_AS(io::parse_int("12a"), FormatError);
}

TEST_CASE("headers") {
  const auto line = io::make_header("MAGIC", {{"b", "2"}, {"a", "x"}});
  const auto h = io::parse_header(line, "MAGIC");
  CHECK(h.at("a") == "x");
  CHECK(h.at("b") == "2");
  CHECK_THROWS_AS(io::parse_header(line, "OTHER"), FormatError);
  CHECK_THROWS_AS(io::require_field(h, "c"), FormatError);
}

TEST_CASE("little-endian payloads") {
  std::stringstream ss;
  const std::vector<double> d{1.5, -0.0, 3e300};
  const std::vector<std::uint32_t> u{1, 0xdeadbeef};
  io::write_f64_le(ss, d);
  io::write_u32_le(ss, u);
  const std::string raw = ss.str();
  REQUIRE(raw.size() == 3 * 8 + 2 * 4);
  CHECK(static_cast<unsigned char>(raw[24]) == 1);
  CHECK(static_cast<unsigned char>(raw[28]) == 0xef);
  std::vector<double> d2(3);
  std::vector<std::uint32_t> u2(2);
  io::read_f64_le(ss, d2);
  io::read_u32_le(ss, u2);
  CHECK(d2 == d);
  CHECK(std::signbit(d2[1]));
  CHECK(u2 == u);
  CHECK_THROWS_AS(io::read_u32_le(ss, u2), FormatError);
}

TEST_CASE("missing artifact names the producer") {
  try {
    io::require_file("/nonexistent/x.csv", "gen");
    FAIL("expected throw");
  } catch (const MissingArtifact& e) {
    CHECK(std::string(e.what()).find("gen") != std::string::npos);
    CHECK(e.path() == "/nonexistent/x.csv");
  }
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

} // TEST_SUITE
