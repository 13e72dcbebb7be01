#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "kdv/csv.hpp"
#include "kdv/error.hpp"

using namespace kdv::csv;

TEST_CASE("numbers round-trip exactly") {
  for (double v : {0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_number(v)) == v);
  }
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("parse and column access") {
  const Table t = parse("a,b\n1,2.5\n3,-4\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  CHECK(t.numbers("b") == std::vector<double>{2.5, -4.0});
  CHECK(t.column("a") == 0);
  CHECK_THROWS_AS(t.column("c"), kdv::Error);
}

TEST_CASE("malformed input is reported with its line") {
  try {
    parse("a,b\n1,2\n3\n", "demo.csv");
    FAIL("expected an error");
  } catch (const kdv::Error& e) {
    CHECK(std::string(e.what()).find("demo.csv:3") != std::string::npos);
  }
  const Table t = parse("a\nx\n");
  CHECK_THROWS_AS(t.numbers("a"), kdv::Error);
}

TEST_CASE("writer and reader agree") {
  const auto path = std::filesystem::temp_directory_path() / "kdv_csv_roundtrip.csv";
  {
    Writer w(path, {"name", "value"});
    w.row("pi", M_PI);
    w.row(std::string("e"), std::exp(1.0));
  }
  const Table t = read(path);
  CHECK(t.rows.size() == 2);
  CHECK(t.numbers("value")[0] == M_PI);
  CHECK(t.rows[1][0] == "e");
  std::filesystem::remove(path);
  CHECK_THROWS_AS(read(path), kdv::Error);
}
