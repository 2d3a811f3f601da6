#include <string>

#include "doctest.h"

#include "berrygrip/config.hpp"
#include "berrygrip/csv.hpp"

using namespace berrygrip;

TEST_CASE("format_g9 prints nine significant digits") {
  CHECK(format_g9(1.0) == "1");
  CHECK(format_g9(0.123456789) == "0.123456789");
  CHECK(format_g9(4.92) == "4.92");
  CHECK(format_g9(1.0 / 3.0) == "0.333333333");
  CHECK(format_g9(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("csv writer and parser round trip") {
  CsvWriter w({"a", "b", "c"});
  w.add_row({"1", "2.5", "x"});
  w.add_row({"-3", "", "hello"});
  const CsvTable t = parse_csv(w.str());
  REQUIRE(t.header.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "2.5");
  CHECK(t.rows[1][1] == "");
  CHECK(t.rows[1][2] == "hello");
  CHECK(t.column("c") == 2);
  CHECK(t.column("missing") == -1);
  CHECK(t.has_column("a"));
}

TEST_CASE("csv parser skips comments and blank lines") {
  const CsvTable t = parse_csv("# heading\n\nx,y\n1,2\n# mid comment\n3,4\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == "3");
}

TEST_CASE("csv parser rejects ragged rows") {
  CHECK_THROWS(parse_csv("a,b\n1,2,3\n"));
}

TEST_CASE("parse_number accepts scientific notation and rejects junk") {
  CHECK(parse_number("1.5e-3") == doctest::Approx(0.0015));
  CHECK(parse_number("-42") == -42.0);
  CHECK_THROWS(parse_number("abc"));
  CHECK_THROWS(parse_number(""));
  CHECK_THROWS(parse_number("1.5x"));
}

TEST_CASE("config parses sections, comments, and typed getters") {
  const Config cfg = Config::parse_string(
      "top = 1\n"
      "[sensor]\n"
      "# comment\n"
      "preset = field2020  ; trailing comment\n"
      "noise_std_v = 0.004\n"
      "use_adc = yes\n"
      "[controller]\n"
      "kp = 3500\n"
      "seed = 18446744073709551615\n");
  CHECK(cfg.get_double("", "top", 0.0) == 1.0);
  CHECK(cfg.get_string("sensor", "preset", "procedure") == "field2020");
  CHECK(cfg.get_double("sensor", "noise_std_v", 0.005) == 0.004);
  CHECK(cfg.get_bool("sensor", "use_adc", false) == true);
  CHECK(cfg.get_int("controller", "kp", 4000) == 3500);
  CHECK(cfg.get_u64("controller", "seed", 0) == 18446744073709551615ULL);
  CHECK(cfg.get_double("controller", "missing", 7.5) == 7.5);
  CHECK(cfg.get_string("nosection", "nokey", "fb") == "fb");
  CHECK(cfg.has("sensor", "preset"));
  CHECK(!cfg.has("sensor", "nope"));
}

TEST_CASE("config rejects malformed input") {
  CHECK_THROWS(Config::parse_string("[open\nk = v\n"));
  CHECK_THROWS(Config::parse_string("novalue\n"));
  const Config cfg = Config::parse_string("[a]\nx = notanumber\nb = maybe\n");
  CHECK_THROWS(cfg.get_double("a", "x", 0.0));
  CHECK_THROWS(cfg.get_bool("a", "b", false));
}
