#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace cqwalk {

/// Simple undirected unweighted graph. Edges are stored normalized
/// (min,max), sorted and deduplicated. `kind` is a provenance tag such
/// as "cycle:6" used for dataset splits.
struct Graph {
    int order = 0;
    std::vector<std::pair<int, int>> edges;
    std::string kind;

    int degree(int v) const;
    bool has_edge(int a, int b) const;

    /// Throws std::invalid_argument on self-loops, duplicate edges or
    /// out-of-range endpoints.
    void validate() const;

    static Graph cycle(int n);
    static Graph from_edges(int n, std::vector<std::pair<int, int>> edges, std::string kind);
};

/// A transfer problem instance: walk from `source` towards `target`,
/// detection modeled by a virtual sink vertex with index graph.order.
struct WalkSetup {
    Graph graph;
    int source = 0;
    int target = 0;

    int sink() const { return graph.order; }
    void validate() const;
};

/// Cycle setup with source 0 and target at the opposite vertex n/2.
/// Rejects odd n (no unique opposite vertex) and n < 4.
WalkSetup make_cycle(int n);

Eigen::MatrixXd adjacency_matrix(const Graph& g);

/// Column-stochastic hop matrix T[m][k] = A[m][k] / degree(k).
/// Throws on isolated vertices.
Eigen::MatrixXd transition_matrix(const Graph& g);

/// Embed an n-by-n matrix in the top-left block of an n_max-by-n_max
/// zero matrix.
Eigen::MatrixXd pad_matrix(const Eigen::MatrixXd& a, int n_max);

/// Parse "cycle:<n>" or "edges:<n>:<m1>-<k1>,<m2>-<k2>,...".
Graph parse_graph(const std::string& descriptor);

/// Setup from a descriptor. Cycles get source 0, target n/2; explicit
/// edge lists default to source 0, target n-1 unless overridden.
WalkSetup parse_setup(const std::string& descriptor, int source = -1, int target = -1);

}  // namespace cqwalk
