#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cqwalk/efficiency.hpp"
#include "cqwalk/graph.hpp"

namespace cqwalk {

struct LabeledExample {
    std::string graph_kind;
    int n = 0;
    Eigen::MatrixXd a_padded;  // n_max x n_max, zero outside the n x n block
    double p = 0.0;
    int label = 0;
    std::optional<double> t_quantum;
    std::optional<double> t_classical;
};

/// Convention flags stamped on every dataset so an experiment can be
/// reproduced from the file alone.
struct DatasetFlags {
    int n_max = 14;
    std::uint64_t seed = 0;
    double gamma = 1.0;
    double dt = 0.01;
    double t_max = 0.0;
    double horizon_factor = 30.0;
    double log_base = 0.0;
    RateConvention convention = RateConvention::Amplitude;

    bool operator==(const DatasetFlags&) const = default;
    IntegrationParams integration_params() const;
};

struct Dataset {
    std::vector<LabeledExample> examples;
    DatasetFlags flags;
};

struct GenerationReport {
    int requested = 0;
    int generated = 0;
    std::vector<std::string> failures;  // "graph_kind p=... : message"
};

/// Sample `samples_per_graph` decoherence values per setup uniformly in
/// [0,1] from a generator seeded with `seed`, label each configuration
/// and return the examples sorted by (graph_kind, p). Failed labelings
/// (horizon exceeded) are dropped and listed in the report.
Dataset generate(const std::vector<WalkSetup>& setups, int samples_per_graph,
                 std::uint64_t seed, const IntegrationParams& params, int n_max,
                 int workers = 1, GenerationReport* report = nullptr);

/// JSONL: a metadata line followed by one example object per line.
void save(const Dataset& ds, const std::filesystem::path& path);
Dataset load(const std::filesystem::path& path);

/// Leave-one-graph-out split: (train = kind != excluded, test = rest).
std::pair<Dataset, Dataset> split_exclude(const Dataset& ds, const std::string& excluded_kind);

}  // namespace cqwalk
