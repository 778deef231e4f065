#include "cqwalk/graph.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace cqwalk {

namespace {

int parse_int(std::string_view s, const std::string& what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::invalid_argument("invalid " + what + ": '" + std::string(s) + "'");
    return value;
}

}  // namespace

int Graph::degree(int v) const {
    int d = 0;
    for (const auto& [a, b] : edges)
        if (a == v || b == v) ++d;
    return d;
}

bool Graph::has_edge(int a, int b) const {
    std::pair<int, int> e{std::min(a, b), std::max(a, b)};
    return std::find(edges.begin(), edges.end(), e) != edges.end();
}

void Graph::validate() const {
    if (order <= 0) throw std::invalid_argument("graph order must be positive");
    for (const auto& [a, b] : edges) {
        if (a == b) throw std::invalid_argument("self-loop on vertex " + std::to_string(a));
        if (a < 0 || b < 0 || a >= order || b >= order)
            throw std::invalid_argument("edge endpoint out of range");
        if (a > b) throw std::invalid_argument("edges must be stored normalized");
    }
    auto sorted = edges;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("duplicate edge");
}

Graph Graph::cycle(int n) {
    if (n < 3) throw std::invalid_argument("cycle needs at least 3 vertices");
    Graph g;
    g.order = n;
    g.kind = "cycle:" + std::to_string(n);
    for (int k = 0; k < n; ++k) {
        int next = (k + 1) % n;
        g.edges.emplace_back(std::min(k, next), std::max(k, next));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.validate();
    return g;
}

Graph Graph::from_edges(int n, std::vector<std::pair<int, int>> edges, std::string kind) {
    Graph g;
    g.order = n;
    g.kind = std::move(kind);
    for (auto& [a, b] : edges)
        if (a > b) std::swap(a, b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);
    g.validate();
    return g;
}

void WalkSetup::validate() const {
    graph.validate();
    if (source == target) throw std::invalid_argument("source and target must differ");
    if (source < 0 || source >= graph.order || target < 0 || target >= graph.order)
        throw std::invalid_argument("source/target out of range");
}

WalkSetup make_cycle(int n) {
    if (n < 4) throw std::invalid_argument("cycle transfer setup needs n >= 4");
    if (n % 2 != 0)
        throw std::invalid_argument("odd cycle has no unique opposite vertex; n must be even");
    WalkSetup s;
    s.graph = Graph::cycle(n);
    s.source = 0;
    s.target = n / 2;
    s.validate();
    return s;
}

Eigen::MatrixXd adjacency_matrix(const Graph& g) {
    g.validate();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.order, g.order);
    for (const auto& [m, k] : g.edges) {
        a(m, k) = 1.0;
        a(k, m) = 1.0;
    }
    return a;
}

Eigen::MatrixXd transition_matrix(const Graph& g) {
    Eigen::MatrixXd a = adjacency_matrix(g);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(g.order, g.order);
    for (int k = 0; k < g.order; ++k) {
        double deg = a.col(k).sum();
        if (deg == 0.0)
            throw std::invalid_argument("isolated vertex " + std::to_string(k));
        t.col(k) = a.col(k) / deg;
    }
    return t;
}

Eigen::MatrixXd pad_matrix(const Eigen::MatrixXd& a, int n_max) {
    if (a.rows() != a.cols()) throw std::invalid_argument("pad_matrix expects a square matrix");
    if (a.rows() > n_max)
        throw std::invalid_argument("matrix order exceeds padding size");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_max, n_max);
    out.topLeftCorner(a.rows(), a.cols()) = a;
    return out;
}

Graph parse_graph(const std::string& descriptor) {
    std::string_view s(descriptor);
    if (s.starts_with("cycle:")) {
        return Graph::cycle(parse_int(s.substr(6), "cycle order"));
    }
    if (s.starts_with("edges:")) {
        s.remove_prefix(6);
        auto colon = s.find(':');
        if (colon == std::string_view::npos)
            throw std::invalid_argument("edges descriptor needs 'edges:<n>:<list>'");
        int n = parse_int(s.substr(0, colon), "vertex count");
        s.remove_prefix(colon + 1);
        std::vector<std::pair<int, int>> edges;
        while (!s.empty()) {
            auto comma = s.find(',');
            std::string_view item = s.substr(0, comma);
            auto dash = item.find('-');
            if (dash == std::string_view::npos)
                throw std::invalid_argument("edge must look like '<m>-<k>'");
            edges.emplace_back(parse_int(item.substr(0, dash), "edge endpoint"),
                               parse_int(item.substr(dash + 1), "edge endpoint"));
            if (comma == std::string_view::npos) break;
            s.remove_prefix(comma + 1);
        }
        return Graph::from_edges(n, std::move(edges), descriptor);
    }
    throw std::invalid_argument("unknown graph descriptor: '" + descriptor + "'");
}

WalkSetup parse_setup(const std::string& descriptor, int source, int target) {
    WalkSetup s;
    s.graph = parse_graph(descriptor);
    if (s.graph.kind.starts_with("cycle:")) {
        int n = s.graph.order;
        if (n < 4 || n % 2 != 0)
            throw std::invalid_argument("cycle transfer setup needs even n >= 4");
        s.source = 0;
        s.target = n / 2;
    } else {
        s.source = 0;
        s.target = s.graph.order - 1;
    }
    if (source >= 0) s.source = source;
    if (target >= 0) s.target = target;
    s.validate();
    return s;
}

}  // namespace cqwalk
