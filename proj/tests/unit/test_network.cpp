#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "hdplpcm/errors.hpp"
#include "hdplpcm/network.hpp"

using namespace hdplpcm;

TEST_CASE("empty stream with declared sizes gives an all-zero network") {
  std::istringstream in("");
  const auto net = load_edge_list(in, 3, 2);
  CHECK(net.n() == 3);
  CHECK(net.T() == 2);
  CHECK(net.edge_count() == 0);
  net.validate();
}

TEST_CASE("records are symmetric and idempotent") {
  std::istringstream in("1,1,2\n1 2 1\n");
  const auto net = load_edge_list(in, 3, 1);
  CHECK(net(0, 0, 1) == 1);
  CHECK(net(0, 1, 0) == 1);
  CHECK(net.edge_count() == 1);
  CHECK(net(0, 0, 2) == 0);
  CHECK(net(0, 1, 2) == 0);
}

TEST_CASE("self-loop records are rejected with a line number") {
  std::istringstream in("1,2,3\n1,1,1\n");
  try {
    load_edge_list(in, 3, 1);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 2);
  }
}

TEST_CASE("malformed and out-of-range records") {
  {
    std::istringstream in("1,1\n");
    CHECK_THROWS_AS(load_edge_list(in, 3, 1), ParseError);
  }
  {
    std::istringstream in("x,1,2\n");  // looks like a header, then nothing
    CHECK_THROWS_AS(load_edge_list(in), ParseError);
  }
  {
    std::istringstream in("3,1,2\n");
    CHECK_THROWS_AS(load_edge_list(in, 3, 2), ParseError);  // t > T
  }
  {
    std::istringstream in("1,1,5\n");
    CHECK_THROWS_AS(load_edge_list(in, 3, 1), ParseError);  // actor > n
  }
  {
    std::istringstream in("1,4,-1\n");
    CHECK_THROWS_AS(load_edge_list(in, std::nullopt, 1), ParseError);
  }
}

TEST_CASE("header, comments and weights") {
  std::istringstream in(
      "time,from,to,weight\n"
      "# a comment\n"
      "1,1,2,3.5\n"
      "1,2,3,0\n");
  const auto net = load_edge_list(in, 3, 1);
  CHECK(net(0, 0, 1) == 1);  // weight binarized
  CHECK(net(0, 1, 2) == 0);  // zero weight ignored
}

TEST_CASE("named actors map by first appearance") {
  std::istringstream in("1,france,uk\n2,uk,italy\n");
  const auto net = load_edge_list(in);
  CHECK(net.n() == 3);
  CHECK(net.T() == 2);
  CHECK(net.actor_names()[0] == "france");
  CHECK(net.actor_names()[1] == "uk");
  CHECK(net.actor_names()[2] == "italy");
  CHECK(net(0, 0, 1) == 1);
  CHECK(net(1, 1, 2) == 1);
}

TEST_CASE("export then load is the identity") {
  std::istringstream in("1,1,2\n2,2,3\n2,1,4\n");
  const auto net = load_edge_list(in, 4, 2);
  std::ostringstream out;
  export_edge_list(net, out);
  std::istringstream back(out.str());
  const auto net2 = load_edge_list(back, 4, 2);
  for (int t = 0; t < 2; ++t)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(net(t, i, j) == net2(t, i, j));
}

TEST_CASE("window aggregation") {
  std::istringstream in("3,1,2\n");
  const auto net = load_edge_list(in, 3, 6);

  SUBCASE("window of one is the identity") {
    const auto w = window_aggregate(net, 1);
    CHECK(w.T() == 6);
    CHECK(w(2, 0, 1) == 1);
    CHECK(w.edge_count() == net.edge_count());
  }
  SUBCASE("edge at t=3 lands in the first 5-wide window") {
    const auto w = window_aggregate(net, 5);
    CHECK(w.T() == 2);
    CHECK(w(0, 0, 1) == 1);
    CHECK(w(1, 0, 1) == 0);
  }
  SUBCASE("window of T ORs all slices") {
    std::istringstream in2("1,1,2\n4,2,3\n");
    const auto net2 = load_edge_list(in2, 3, 4);
    const auto w = window_aggregate(net2, 4);
    CHECK(w.T() == 1);
    CHECK(w(0, 0, 1) == 1);
    CHECK(w(0, 1, 2) == 1);
    CHECK(w(0, 0, 2) == 0);
  }
  SUBCASE("uneven last window") {
    std::istringstream in3("4,1,2\n");
    const auto net3 = load_edge_list(in3, 2, 4);
    const auto w = window_aggregate(net3, 3);
    CHECK(w.T() == 2);
    CHECK(w(0, 0, 1) == 0);
    CHECK(w(1, 0, 1) == 1);
  }
  CHECK_THROWS_AS(window_aggregate(net, 0), InvalidArgument);
}

TEST_CASE("degree filtering") {
  SUBCASE("dmin=0 keeps everyone") {
    std::istringstream in("1,1,2\n");
    const auto net = load_edge_list(in, 3, 1);
    const auto res = filter_min_degree(net, 0);
    CHECK(res.net.n() == 3);
    CHECK(res.kept == std::vector<int>{0, 1, 2});
  }
  SUBCASE("an always-isolated actor is removed at dmin=1") {
    std::istringstream in("1,1,2\n2,1,2\n");
    const auto net = load_edge_list(in, 3, 2);
    const auto res = filter_min_degree(net, 1);
    CHECK(res.net.n() == 2);
    CHECK(res.kept == std::vector<int>{0, 1});
  }
  SUBCASE("star keeps only its center at dmin=2") {
    std::istringstream in("1,1,2\n1,1,3\n1,1,4\n");
    const auto net = load_edge_list(in, 4, 2);
    const auto res = filter_min_degree(net, 2);
    CHECK(res.net.n() == 1);
    CHECK(res.kept == std::vector<int>{0});
    CHECK(res.net.edge_count() == 0);
  }
  SUBCASE("removing everyone is an error") {
    std::istringstream in("1,1,2\n");
    const auto net = load_edge_list(in, 2, 1);
    CHECK_THROWS_AS(filter_min_degree(net, 5), EmptyResult);
  }
  SUBCASE("retained actors kept their original degrees") {
    // degrees are computed on the original network, single pass
    std::istringstream in("1,1,2\n1,2,3\n1,3,4\n");
    const auto net = load_edge_list(in, 4, 1);
    const auto res = filter_min_degree(net, 2);
    // actors 2,3 have degree 2; actors 1,4 have degree 1
    CHECK(res.kept == std::vector<int>{1, 2});
    // the chosen rule: original degree >= dmin in some slice, exactly
    for (int idx : res.kept) {
      int best = 0;
      for (int t = 0; t < net.T(); ++t)
        best = std::max(best, net.degree(t, idx));
      CHECK(best >= 2);
    }
  }
}
