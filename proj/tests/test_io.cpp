#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>

#include "artrd/common.hpp"
#include "artrd/csv.hpp"
#include "artrd/sha1.hpp"
#include "artrd/svg.hpp"

using namespace artrd;

TEST_CASE("sha1 standard vectors") {
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "84983e441c3bd26ebaae4aa1f95129e5e54670f1");
  CHECK(sha1_hex("The quick brown fox jumps over the lazy dog") ==
        "2fd4e1c67a2d28fced849ee1bb76e7391b93eb12");
  CHECK(sha1_hex(std::string(1000000, 'a')) == "34aa973cd4c4daa4f61eeb2bdbad27316534016f");
  // Length crossing a block boundary (64-byte blocks, 55/56 are the edge).
  CHECK(sha1_hex(std::string(55, 'x')) != sha1_hex(std::string(56, 'x')));
}

TEST_CASE("git blob hashes match git's own") {
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash("x") != sha1_hex("x"));  // the header must be included
}

TEST_CASE("csv cells round-trip doubles exactly") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 1234567890.123456789, 0.0, -2.5e17}) {
    CHECK(csv_number(csv_cell(v)) == v);
  }
  CHECK(csv_cell(static_cast<long long>(42)) == "42");
  CHECK(csv_number("7") == 7.0);
  CHECK_THROWS_AS(csv_number("7abc"), Error);
  CHECK_THROWS_AS(csv_number(""), Error);
}

TEST_CASE("csv format and parse round trip") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows.push_back({"1", "2.5", "x"});
  t.rows.push_back({"-3", "0.125", "y"});
  const std::string text = csv_format(t);
  const CsvTable u = csv_parse(text);
  CHECK(u.header == t.header);
  REQUIRE(u.rows.size() == 2);
  CHECK(u.rows[1][0] == "-3");
  CHECK(csv_column(u, "b") == 1);
  CHECK_THROWS_AS(csv_column(u, "missing"), Error);
}

TEST_CASE("csv parser accepts CRLF and rejects ragged rows") {
  const CsvTable t = csv_parse("a,b\r\n1,2\r\n");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][1] == "2");
  CHECK_THROWS_AS(csv_parse("a,b\n1\n"), Error);
}

TEST_CASE("svg charts are well formed") {
  SvgSeries s1{"first", {{0, 0}, {1, 1}, {2, 0.5}}};
  SvgSeries s2{"second", {{0, 2}, {1, 1.5}, {2, 3}}};
  const std::string chart = svg_line_chart("title here", "steps", "return", {s1, s2});
  CHECK(chart.find("<svg") != std::string::npos);
  CHECK(chart.find("</svg>") != std::string::npos);
  CHECK(chart.find("title here") != std::string::npos);
  CHECK(chart.find("first") != std::string::npos);
  CHECK(chart.find("second") != std::string::npos);
  CHECK(chart.find("polyline") != std::string::npos);
  CHECK(chart.find("nan") == std::string::npos);

  const std::string scatter =
      svg_scatter("dots", "x", "y", {{0.5, 1.0}, {1.5, -1.0}, {2.0, 0.0}});
  CHECK(scatter.find("<circle") != std::string::npos);
  CHECK(scatter.find("nan") == std::string::npos);
}

TEST_CASE("svg survives degenerate data") {
  SvgSeries lone{"lone", {{1.0, 1.0}}};
  const std::string chart = svg_line_chart("one point", "x", "y", {lone});
  CHECK(chart.find("<svg") != std::string::npos);
  CHECK(chart.find("nan") == std::string::npos);
  CHECK(chart.find("inf") == std::string::npos);

  const std::string empty = svg_line_chart("empty", "x", "y", {});
  CHECK(empty.find("<svg") != std::string::npos);
}

TEST_CASE("atomic writes create parent directories and leave no temp files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "artrd_io_test";
  fs::remove_all(dir);
  const fs::path target = dir / "a" / "b" / "out.txt";
  write_file_atomic(target, "payload");
  CHECK(read_file(target) == "payload");
  int entries = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  write_file_atomic(target, "replaced");
  CHECK(read_file(target) == "replaced");
  CHECK_THROWS_AS(read_file(dir / "missing.txt"), Error);
  fs::remove_all(dir);
}
