#include "cqwalk/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "cqwalk/util.hpp"

namespace cqwalk {

using ordered_json = nlohmann::ordered_json;

IntegrationParams DatasetFlags::integration_params() const {
    IntegrationParams params;
    params.gamma = gamma;
    params.dt = dt;
    params.t_max = t_max;
    params.horizon_factor = horizon_factor;
    params.log_base = log_base;
    params.convention = convention;
    return params;
}

namespace {

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const ordered_json& rows) {
    auto n_rows = rows.size();
    if (n_rows == 0) throw std::runtime_error("empty matrix");
    auto n_cols = rows.at(0).size();
    Eigen::MatrixXd m(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (rows.at(i).size() != n_cols) throw std::runtime_error("ragged matrix rows");
        for (std::size_t j = 0; j < n_cols; ++j) m(i, j) = rows.at(i).at(j).get<double>();
    }
    return m;
}

ordered_json example_to_json(const LabeledExample& ex) {
    ordered_json j;
    j["graph"] = ex.graph_kind;
    j["n"] = ex.n;
    j["p"] = ex.p;
    j["label"] = ex.label;
    if (ex.t_quantum) j["t_q"] = *ex.t_quantum; else j["t_q"] = nullptr;
    if (ex.t_classical) j["t_c"] = *ex.t_classical; else j["t_c"] = nullptr;
    j["A"] = matrix_to_json(ex.a_padded);
    return j;
}

LabeledExample example_from_json(const ordered_json& j) {
    LabeledExample ex;
    ex.graph_kind = j.at("graph").get<std::string>();
    ex.n = j.at("n").get<int>();
    ex.p = j.at("p").get<double>();
    ex.label = j.at("label").get<int>();
    if (!j.at("t_q").is_null()) ex.t_quantum = j.at("t_q").get<double>();
    if (!j.at("t_c").is_null()) ex.t_classical = j.at("t_c").get<double>();
    ex.a_padded = matrix_from_json(j.at("A"));
    return ex;
}

}  // namespace

Dataset generate(const std::vector<WalkSetup>& setups, int samples_per_graph,
                 std::uint64_t seed, const IntegrationParams& params, int n_max,
                 int workers, GenerationReport* report) {
    if (samples_per_graph < 1) throw std::invalid_argument("samples_per_graph must be >= 1");
    for (const auto& s : setups) {
        s.validate();
        if (s.graph.order > n_max)
            throw std::invalid_argument("graph order exceeds n_max");
    }

    // All p values are drawn upfront from one stream so the sample set
    // never depends on the worker count.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    struct Job {
        const WalkSetup* setup;
        double p;
    };
    std::vector<Job> jobs;
    jobs.reserve(setups.size() * samples_per_graph);
    for (const auto& s : setups)
        for (int i = 0; i < samples_per_graph; ++i) jobs.push_back({&s, uniform(rng)});

    std::vector<std::optional<LabeledExample>> results(jobs.size());
    std::vector<std::string> failures(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        const Job& job = jobs[i];
        try {
            TransferOutcome out = label_walk(*job.setup, job.p, params);
            LabeledExample ex;
            ex.graph_kind = job.setup->graph.kind;
            ex.n = job.setup->graph.order;
            ex.a_padded = pad_matrix(adjacency_matrix(job.setup->graph), n_max);
            ex.p = job.p;
            ex.label = out.label;
            ex.t_quantum = out.t_quantum;
            ex.t_classical = out.t_classical;
            results[i] = std::move(ex);
        } catch (const IntegrationError& e) {
            std::ostringstream msg;
            msg << job.setup->graph.kind << " p=" << job.p << " : " << e.what();
            failures[i] = msg.str();
        }
    });

    Dataset ds;
    ds.flags.n_max = n_max;
    ds.flags.seed = seed;
    ds.flags.gamma = params.gamma;
    ds.flags.dt = params.dt;
    ds.flags.t_max = params.t_max;
    ds.flags.horizon_factor = params.horizon_factor;
    ds.flags.log_base = params.log_base;
    ds.flags.convention = params.convention;
    for (auto& r : results)
        if (r) ds.examples.push_back(std::move(*r));
    std::sort(ds.examples.begin(), ds.examples.end(), [](const auto& a, const auto& b) {
        return std::tie(a.graph_kind, a.p) < std::tie(b.graph_kind, b.p);
    });

    if (report) {
        report->requested = static_cast<int>(jobs.size());
        report->generated = static_cast<int>(ds.examples.size());
        for (auto& f : failures)
            if (!f.empty()) report->failures.push_back(std::move(f));
    }
    return ds;
}

void save(const Dataset& ds, const std::filesystem::path& path) {
    std::ostringstream out;
    ordered_json meta;
    meta["n_max"] = ds.flags.n_max;
    meta["seed"] = ds.flags.seed;
    meta["gamma"] = ds.flags.gamma;
    meta["dt"] = ds.flags.dt;
    meta["t_max"] = ds.flags.t_max;
    meta["horizon_factor"] = ds.flags.horizon_factor;
    meta["log_base"] = ds.flags.log_base;
    meta["rate_convention"] = to_string(ds.flags.convention);
    out << ordered_json{{"meta", meta}}.dump() << '\n';
    for (const auto& ex : ds.examples) out << example_to_json(ex).dump() << '\n';
    atomic_write(path, out.str());
}

Dataset load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Dataset ds;
    std::string line;
    int line_no = 0;
    bool have_meta = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": parse error: " + e.what());
        }
        try {
            if (!have_meta) {
                const auto& meta = j.at("meta");
                ds.flags.n_max = meta.at("n_max").get<int>();
                ds.flags.seed = meta.at("seed").get<std::uint64_t>();
                ds.flags.gamma = meta.at("gamma").get<double>();
                ds.flags.dt = meta.at("dt").get<double>();
                ds.flags.t_max = meta.at("t_max").get<double>();
                ds.flags.horizon_factor = meta.at("horizon_factor").get<double>();
                ds.flags.log_base = meta.at("log_base").get<double>();
                ds.flags.convention =
                    rate_convention_from_string(meta.at("rate_convention").get<std::string>());
                have_meta = true;
            } else {
                ds.examples.push_back(example_from_json(j));
            }
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": invalid record: " + e.what());
        }
    }
    if (!have_meta)
        throw std::runtime_error(path.string() + ":1: missing dataset metadata line");
    return ds;
}

std::pair<Dataset, Dataset> split_exclude(const Dataset& ds, const std::string& excluded_kind) {
    Dataset train, test;
    train.flags = ds.flags;
    test.flags = ds.flags;
    for (const auto& ex : ds.examples)
        (ex.graph_kind == excluded_kind ? test : train).examples.push_back(ex);
    return {std::move(train), std::move(test)};
}

}  // namespace cqwalk
