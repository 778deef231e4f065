#include <doctest.h>

#include "cqwalk/graph.hpp"

using namespace cqwalk;

TEST_CASE("make_cycle builds the expected setup") {
    WalkSetup s = make_cycle(6);
    CHECK(s.graph.order == 6);
    CHECK(s.graph.edges.size() == 6);
    CHECK(s.source == 0);
    CHECK(s.target == 3);
    CHECK(s.sink() == 6);
    CHECK(s.graph.has_edge(0, 1));
    CHECK(s.graph.has_edge(5, 0));
    CHECK_FALSE(s.graph.has_edge(0, 3));

    CHECK(make_cycle(4).target == 2);
    CHECK_THROWS_AS(make_cycle(5), std::invalid_argument);
    CHECK_THROWS_AS(make_cycle(2), std::invalid_argument);
}

TEST_CASE("cycle vertices all have degree 2") {
    Graph g = Graph::cycle(8);
    for (int v = 0; v < 8; ++v) CHECK(g.degree(v) == 2);
}

TEST_CASE("adjacency matrix structure") {
    Eigen::MatrixXd a4 = adjacency_matrix(Graph::cycle(4));
    Eigen::VectorXd row0(4);
    row0 << 0, 1, 0, 1;
    CHECK(a4.row(0).transpose() == row0);

    Graph pair = Graph::from_edges(2, {{0, 1}}, "edges:2:0-1");
    Eigen::MatrixXd a2 = adjacency_matrix(pair);
    CHECK(a2(0, 1) == 1.0);
    CHECK(a2(1, 0) == 1.0);
    CHECK(a2(0, 0) == 0.0);

    Eigen::MatrixXd a6 = adjacency_matrix(Graph::cycle(6));
    CHECK(a6 == a6.transpose());
    CHECK(a6.diagonal().isZero());
}

TEST_CASE("transition matrix is column-stochastic") {
    Eigen::MatrixXd t6 = transition_matrix(Graph::cycle(6));
    for (int k = 0; k < 6; ++k)
        for (int m = 0; m < 6; ++m)
            if (t6(m, k) != 0.0) CHECK(t6(m, k) == 0.5);
    CHECK((t6.array() != 0.0).count() == 12);

    Eigen::MatrixXd t8 = transition_matrix(Graph::cycle(8));
    for (int k = 0; k < 8; ++k) CHECK(t8.col(k).sum() == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::MatrixXd tp = transition_matrix(Graph::from_edges(2, {{0, 1}}, "path2"));
    CHECK(tp(0, 1) == 1.0);
    CHECK(tp(1, 0) == 1.0);

    Graph isolated = Graph::from_edges(3, {{0, 1}}, "iso");
    CHECK_THROWS_AS(transition_matrix(isolated), std::invalid_argument);
}

TEST_CASE("pad_matrix embeds and round-trips") {
    Eigen::MatrixXd a = adjacency_matrix(Graph::cycle(6));
    Eigen::MatrixXd padded = pad_matrix(a, 14);
    CHECK(padded.rows() == 14);
    CHECK(padded.topLeftCorner(6, 6) == a);
    CHECK(padded.bottomRightCorner(8, 8).isZero());
    CHECK(pad_matrix(a, 6) == a);
    CHECK_THROWS_AS(pad_matrix(a, 5), std::invalid_argument);
}

TEST_CASE("graph validation rejects malformed inputs") {
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 0}}, "loop"), std::invalid_argument);
    CHECK_THROWS_AS(Graph::from_edges(3, {{0, 5}}, "range"), std::invalid_argument);
    // duplicates collapse silently in from_edges
    Graph g = Graph::from_edges(3, {{0, 1}, {1, 0}, {1, 2}}, "dup");
    CHECK(g.edges.size() == 2);
}

TEST_CASE("descriptor parsing") {
    Graph c = parse_graph("cycle:10");
    CHECK(c.order == 10);
    CHECK(c.kind == "cycle:10");

    Graph e = parse_graph("edges:3:0-1,1-2");
    CHECK(e.order == 3);
    CHECK(e.edges.size() == 2);

    CHECK_THROWS_AS(parse_graph("ring:6"), std::invalid_argument);
    CHECK_THROWS_AS(parse_graph("cycle:x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_graph("edges:3:01"), std::invalid_argument);

    WalkSetup s = parse_setup("cycle:8");
    CHECK(s.target == 4);
    WalkSetup custom = parse_setup("edges:4:0-1,1-2,2-3", 0, 2);
    CHECK(custom.target == 2);
}
