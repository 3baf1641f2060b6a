#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include "chainrec/spec_io.hpp"

using namespace chainrec;
using nlohmann::json;

TEST_CASE("spec document: triples, strings and decimals") {
  json j = json::parse(R"({
    "name": "banded",
    "head_rows": [[[1, 1, 1]]],
    "tail_stencil": [[-1, 7, 12], [1, "3/12"], [2, 0.16666666666666666]]
  })");
  ChainSpec spec = load_spec_json(j, "inline");
  CHECK(spec.name == "banded");
  CHECK(spec.prob(5, 4) == Rational(7, 12));
  CHECK(spec.prob(5, 6) == Rational(1, 4));
  CHECK(spec.prob(5, 7) == Rational(1, 6));
}

TEST_CASE("spec document: period-2 stencil list") {
  json j = json::parse(R"({
    "head_rows": [[[1, 1, 1]], [[0, 1, 2], [2, 1, 2]]],
    "tail_stencil": [
      [[-2, 1, 3], [2, 2, 3]],
      [[-2, 1, 2], [2, 1, 2]]
    ]
  })");
  ChainSpec spec = load_spec_json(j, "inline");
  CHECK(spec.period() == 2);
  CHECK(spec.prob(2, 0) == Rational(1, 3));
  CHECK(spec.prob(3, 1) == Rational(1, 2));
  CHECK(spec.prob(4, 2) == Rational(1, 3));
}

TEST_CASE("spec document: geometric tail via params") {
  json j = json::parse(R"({
    "head_rows": [
      [[1, 1, 1]],
      [[0, 7, 10], [2, 3, 20], [3, 3, 40], [4, 3, 40]]
    ],
    "tail_stencil": [[-1, 9, 20], [-2, 1, 4]],
    "params": {"c": [3, 10], "r": [1, 2]}
  })");
  ChainSpec spec = load_spec_json(j, "inline");
  REQUIRE(spec.tail.size() == 1);
  CHECK(spec.tail[0].has_geo_tail);
  CHECK(spec.prob(5, 7) == Rational(3, 40));  // c r^2
  CHECK(spec.tail[0].mass() == Rational(1));
}

TEST_CASE("spec document: builtin selector") {
  json j = json::parse(R"({"builtin": "ex1-A", "params": {"lambda": 1, "mu": 2}})");
  ChainSpec spec = load_spec_json(j, "inline");
  CHECK(spec.prob(3, 2) == Rational(2, 3));
}

TEST_CASE("spec document: errors cite the offending field") {
  json bad_row = json::parse(R"({"head_rows": [[[1, 1]]], "tail_stencil": []})");
  try {
    load_spec_json(json::parse(R"({"head_rows": [17]})"), "doc");
    FAIL("expected a throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("head_rows[0]") != std::string::npos);
  }
  CHECK_THROWS_AS(load_spec_json(json::parse(R"({"params": 3})"), "doc"),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_spec_file("/nonexistent/path.json"), std::invalid_argument);

  // sums are validated on load
  json not_stochastic = json::parse(R"({
    "head_rows": [[[1, 1, 2]]],
    "tail_stencil": [[-1, 1, 2], [1, 1, 2]]
  })");
  CHECK_THROWS_AS(load_spec_json(not_stochastic, "doc"), std::invalid_argument);
}

TEST_CASE("csv writers are deterministic") {
  std::vector<TracePoint> trace = {{1, -0.5, -0.5}, {2, -1.0, -0.02}};
  std::string p1 = "/tmp/chainrec_test_trace1.csv";
  std::string p2 = "/tmp/chainrec_test_trace2.csv";
  write_trace_csv(p1, trace);
  write_trace_csv(p2, trace);
  std::ifstream a(p1), b(p2);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
  CHECK(sa.find("n,log_t,log_sum") == 0);
}
