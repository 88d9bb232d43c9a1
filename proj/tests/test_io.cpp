#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "perinet/csv.hpp"
#include "perinet/serialize.hpp"

using namespace perinet;

namespace {

void put(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("count tables round trip byte for byte") {
  testutil::TempDir dir("counts");
  const std::string original = "t,a,b\n4,1,2\n5,0,3\n6,7,4\n";
  put(dir.file("in.csv"), original);

  const CountSeries series = load_counts(dir.file("in.csv"));
  CHECK(series.t0 == 4);
  CHECK(series.steps() == 3);
  CHECK(series.dimension() == 2);
  REQUIRE(series.node_names.size() == 2);
  CHECK(series.node_names[0] == "a");
  CHECK(series.node_names[1] == "b");
  CHECK(series.counts(0, 0) == 1);
  CHECK(series.counts(2, 1) == 4);

  write_counts(dir.file("out.csv"), series);
  CHECK(slurp(dir.file("out.csv")) == original);
}

TEST_CASE("unnamed series write under generated node names") {
  testutil::TempDir dir("counts");
  CountSeries series;
  series.counts = CountMatrix::Zero(2, 3);
  series.counts(1, 2) = 9;
  series.t0 = -1;
  write_counts(dir.file("plain.csv"), series);
  CHECK(slurp(dir.file("plain.csv")) == "t,node_1,node_2,node_3\n-1,0,0,0\n0,0,0,9\n");

  const CountSeries back = load_counts(dir.file("plain.csv"));
  CHECK(back.t0 == -1);
  CHECK((back.counts - series.counts).cwiseAbs().maxCoeff() == 0);
  CHECK(back.node_names[2] == "node_3");
}

TEST_CASE("count parse errors name the offending cell") {
  testutil::TempDir dir("counts");

  put(dir.file("neg.csv"), "t,a\n1,3\n2,-1\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("neg.csv")),
                       doctest::Contains("row 3, column 2 (a)"), io_error);
  CHECK_THROWS_WITH_AS(load_counts(dir.file("neg.csv")),
                       doctest::Contains("'-1' is negative"), io_error);

  put(dir.file("alpha.csv"), "t,a\n1,x\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("alpha.csv")),
                       doctest::Contains("'x' is not an integer"), io_error);

  put(dir.file("frac.csv"), "t,a\n1,2.5\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("frac.csv")),
                       doctest::Contains("is not an integer"), io_error);

  put(dir.file("ragged.csv"), "t,a\n1,2,3\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("ragged.csv")),
                       doctest::Contains("has 3 cells, expected 2"), io_error);

  put(dir.file("gap.csv"), "t,a\n1,0\n3,1\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("gap.csv")),
                       doctest::Contains("t jumps from 1 to 3"), io_error);

  put(dir.file("empty.csv"), "");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("empty.csv")), doctest::Contains("empty file"),
                       io_error);

  put(dir.file("head.csv"), "time,a\n1,2\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("head.csv")),
                       doctest::Contains("header must start with 't'"), io_error);

  put(dir.file("norows.csv"), "t,a\n");
  CHECK_THROWS_WITH_AS(load_counts(dir.file("norows.csv")),
                       doctest::Contains("no data rows"), io_error);

  CHECK_THROWS_AS(load_counts(dir.file("missing.csv")), io_error);
}

TEST_CASE("intensity tables mirror the count layout") {
  testutil::TempDir dir("intens");
  CountSeries series;
  series.counts = CountMatrix::Zero(2, 1);
  series.intensities = Matrix::Zero(2, 1);
  series.intensities << 1.5, 2.25;
  series.node_names = {"hub"};
  write_intensities(dir.file("lam.csv"), series);
  CHECK(slurp(dir.file("lam.csv")) == "t,hub\n1,1.5\n2,2.25\n");

  CountSeries bare;
  bare.counts = CountMatrix::Zero(2, 1);
  CHECK_THROWS_WITH_AS(write_intensities(dir.file("none.csv"), bare),
                       "write_intensities: series carries no aligned intensities",
                       config_error);
}

TEST_CASE("edge lists resolve names, indices, and symmetry") {
  testutil::TempDir dir("adj");

  put(dir.file("pair.csv"), "src,dst\na,b\nb,a\n");
  const NetworkSpec pair = load_adjacency(dir.file("pair.csv"), 2);
  CHECK(pair.adjacency()(0, 1) == 1);
  CHECK(pair.adjacency()(1, 0) == 1);
  CHECK(pair.adjacency()(0, 0) == 0);
  CHECK(pair.node_names()[0] == "a");
  CHECK(pair.node_names()[1] == "b");
  CHECK(pair.weights()(0, 1) == 1.0);

  put(dir.file("half.csv"), "src,dst\na,b\n");
  const NetworkSpec sym = load_adjacency(dir.file("half.csv"), 2, true);
  CHECK(sym.adjacency()(0, 1) == 1);
  CHECK(sym.adjacency()(1, 0) == 1);

  put(dir.file("idx.csv"), "src,dst\n1,3\n3,2\n");
  const NetworkSpec idx = load_adjacency(dir.file("idx.csv"), 3);
  CHECK(idx.adjacency()(0, 2) == 1);
  CHECK(idx.adjacency()(2, 1) == 1);
  CHECK(idx.node_names().empty());

  put(dir.file("none.csv"), "src,dst\n");
  const NetworkSpec empty = load_adjacency(dir.file("none.csv"), 4);
  CHECK(empty.size() == 4);
  CHECK(empty.adjacency().sum() == 0);

  // First appearance fixes the index order.
  put(dir.file("order.csv"), "src,dst\nb,a\nc,a\n");
  const NetworkSpec order = load_adjacency(dir.file("order.csv"), 3);
  CHECK(order.node_names()[0] == "b");
  CHECK(order.node_names()[1] == "a");
  CHECK(order.node_names()[2] == "c");
  CHECK(order.adjacency()(0, 1) == 1);
  CHECK(order.adjacency()(2, 1) == 1);

  // A supplied name list pins the order instead.
  put(dir.file("fixed.csv"), "src,dst\ny,x\n");
  const NetworkSpec fixed =
      load_adjacency(dir.file("fixed.csv"), 2, false, {"x", "y"});
  CHECK(fixed.adjacency()(1, 0) == 1);
  CHECK(fixed.adjacency()(0, 1) == 0);
}

TEST_CASE("edge list errors are specific") {
  testutil::TempDir dir("adj");

  put(dir.file("range.csv"), "src,dst\n1,3\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("range.csv"), 2),
                       doctest::Contains("index 3 outside 1..2"), io_error);

  put(dir.file("unknown.csv"), "src,dst\nx,z\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("unknown.csv"), 2, false, {"x", "y"}),
                       doctest::Contains("unknown node name 'z'"), io_error);

  put(dir.file("short.csv"), "src,dst\na,b\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("short.csv"), 3),
                       doctest::Contains("names cover 2 of 3"), io_error);

  put(dir.file("crowd.csv"), "src,dst\na,b\nc,d\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("crowd.csv"), 3),
                       doctest::Contains("more than 3 distinct node names"), io_error);

  put(dir.file("mixed.csv"), "src,dst\na,2\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("mixed.csv"), 2),
                       doctest::Contains("mixes node names with numeric indices"), io_error);

  put(dir.file("loop.csv"), "src,dst\na,a\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("loop.csv"), 2),
                       doctest::Contains("self-loop on 'a'"), io_error);

  put(dir.file("narrow.csv"), "src,dst\na\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("narrow.csv"), 2),
                       doctest::Contains("expected 2 cells"), io_error);

  put(dir.file("badhead.csv"), "from,to\na,b\n");
  CHECK_THROWS_WITH_AS(load_adjacency(dir.file("badhead.csv"), 2),
                       doctest::Contains("expected a 'src,dst' header"), io_error);
}

TEST_CASE("written edge lists are sorted and reload identically") {
  testutil::TempDir dir("adj");
  put(dir.file("in.csv"), "src,dst\nc,a\na,b\nc,b\nb,a\n");
  const NetworkSpec net = load_adjacency(dir.file("in.csv"), 3);
  write_adjacency(dir.file("out.csv"), net);
  const std::string bytes = slurp(dir.file("out.csv"));

  const NetworkSpec back = load_adjacency(dir.file("out.csv"), 3);
  CHECK((back.adjacency() - net.adjacency()).cwiseAbs().maxCoeff() == 0);
  write_adjacency(dir.file("again.csv"), back);
  CHECK(slurp(dir.file("again.csv")) == bytes);

  // First appearance ordered the nodes c, a, b; rows come out in index order.
  CHECK(bytes == "src,dst\nc,a\nc,b\na,b\nb,a\n");

  // Nameless networks write 1-based indices.
  put(dir.file("nums.csv"), "src,dst\n2,1\n1,3\n");
  const NetworkSpec nums = load_adjacency(dir.file("nums.csv"), 3);
  write_adjacency(dir.file("nums_out.csv"), nums);
  CHECK(slurp(dir.file("nums_out.csv")) == "src,dst\n1,3\n2,1\n");
}

TEST_CASE("the packaged district graph is a usable symmetric map") {
  const std::string path = std::string(TEST_DATA_DIR) + "/berlin_adjacency.csv";
  const NetworkSpec net = load_adjacency(path, 12, true);
  REQUIRE(net.size() == 12);
  CHECK(net.adjacency().diagonal().cwiseAbs().sum() == 0);
  CHECK((net.adjacency() - net.adjacency().transpose()).cwiseAbs().maxCoeff() == 0);
  for (int i = 0; i < 12; ++i) {
    CHECK(net.degree(i) >= 2);
    CHECK(net.weights().row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Reachability from node 0 covers the whole city.
  std::vector<bool> seen(12, false);
  std::deque<int> queue{0};
  seen[0] = true;
  int covered = 1;
  while (!queue.empty()) {
    const int at = queue.front();
    queue.pop_front();
    for (int j = 0; j < 12; ++j) {
      if (net.adjacency()(at, j) == 1 && !seen[j]) {
        seen[j] = true;
        ++covered;
        queue.push_back(j);
      }
    }
  }
  CHECK(covered == 12);
}

TEST_CASE("numeric tables print headers, labels, and shortest values") {
  testutil::TempDir dir("table");
  Matrix values(2, 2);
  values << 0.5, 1.0, 2.25, -3.0;
  write_table(dir.file("t.csv"), {"name", "lo", "hi"}, {"first", "second"}, values);
  CHECK(slurp(dir.file("t.csv")) == "name,lo,hi\nfirst,0.5,1\nsecond,2.25,-3\n");

  write_table(dir.file("bare.csv"), {"lo", "hi"}, {}, values);
  CHECK(slurp(dir.file("bare.csv")) == "lo,hi\n0.5,1\n2.25,-3\n");

  CHECK_THROWS_AS(write_table(dir.file("bad.csv"), {"lo"}, {}, values), config_error);
  CHECK_THROWS_AS(write_table(dir.file("bad.csv"), {"name", "lo", "hi"}, {"only"}, values),
                  config_error);
}

TEST_CASE("printed doubles parse back to the same bits") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> scale(-12, 12);
  for (int i = 0; i < 100; ++i) {
    const double x = mantissa(gen) * std::pow(10.0, scale(gen));
    const double back = std::stod(format_double(x));
    CHECK(back == x);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-0.0) == "-0");
}

TEST_CASE("json files round trip and failures carry the path") {
  testutil::TempDir dir("json");
  Json payload;
  payload["name"] = "run";
  payload["values"] = {1, 2, 3};
  payload["nested"] = {{"ok", true}};
  write_json_file(dir.file("spec.json"), payload);
  const Json back = load_json_file(dir.file("spec.json"));
  CHECK(back == payload);

  CHECK_THROWS_AS(load_json_file(dir.file("missing.json")), io_error);

  put(dir.file("broken.json"), "{\"name\": ");
  CHECK_THROWS_AS(load_json_file(dir.file("broken.json")), config_error);

  CHECK_THROWS_AS(parse_json("not json", "inline"), config_error);
  CHECK(parse_json("{\"a\": 1}")["a"] == 1);
}
