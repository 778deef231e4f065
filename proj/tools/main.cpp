#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "cqwalk/cqcnn.hpp"
#include "cqwalk/dataset.hpp"
#include "cqwalk/dynamics.hpp"
#include "cqwalk/efficiency.hpp"
#include "cqwalk/graph.hpp"
#include "cqwalk/util.hpp"

using namespace cqwalk;
using ordered_json = nlohmann::ordered_json;

namespace {

struct CommonFlags {
    double gamma = 1.0;
    double dt = 0.01;
    double t_max = 0.0;
    double horizon_factor = 30.0;
    double log_base = 0.0;
    std::string convention = "amplitude";
    int workers = 1;

    IntegrationParams params() const {
        IntegrationParams p;
        p.gamma = gamma;
        p.dt = dt;
        p.t_max = t_max;
        p.horizon_factor = horizon_factor;
        p.log_base = log_base;
        p.convention = rate_convention_from_string(convention);
        return p;
    }

    ordered_json to_json() const {
        return {{"gamma", gamma},          {"dt", dt},
                {"t_max", t_max},          {"horizon_factor", horizon_factor},
                {"log_base", log_base},    {"rate_convention", convention},
                {"workers", workers}};
    }
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--gamma", f.gamma, "Target-to-sink coupling")
        ->capture_default_str()->check(CLI::NonNegativeNumber);
    cmd->add_option("--dt", f.dt, "RK4 step size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--t-max", f.t_max,
                    "Integration horizon; 0 means horizon-factor * n")
        ->capture_default_str();
    cmd->add_option("--horizon-factor", f.horizon_factor,
                    "Horizon multiplier used when --t-max is 0")
        ->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--log-base", f.log_base,
                    "Base of the 1/log(n) detection threshold; 0 means natural log")
        ->capture_default_str();
    cmd->add_option("--rate-convention", f.convention,
                    "Jump amplitude convention: amplitude (L ~ T) or rate (L ~ sqrt(T))")
        ->capture_default_str()->check(CLI::IsMember({"amplitude", "rate"}));
    cmd->add_option("--workers", f.workers, "Worker threads for independent runs")
        ->capture_default_str()->check(CLI::PositiveNumber);
}

std::vector<double> make_grid(int points, double p_min, double p_max) {
    if (points < 1) throw std::invalid_argument("grid needs at least one point");
    if (p_min < 0.0 || p_max > 1.0 || p_min > p_max)
        throw std::invalid_argument("grid bounds must satisfy 0 <= p-min <= p-max <= 1");
    std::vector<double> grid;
    grid.reserve(points);
    if (points == 1) {
        grid.push_back(p_min);
        return grid;
    }
    for (int i = 0; i < points; ++i)
        grid.push_back(p_min + (p_max - p_min) * i / (points - 1));
    return grid;
}

std::string fmt(double x) {
    std::ostringstream out;
    out << std::setprecision(17) << x;
    return out.str();
}

void write_meta(const std::string& out_path, const ordered_json& meta) {
    atomic_write(out_path + ".meta.json", meta.dump() + "\n");
}

void emit_summary(const ordered_json& j) { std::cout << j.dump() << std::endl; }

std::vector<WalkSetup> parse_setups(const std::string& graphs_csv) {
    std::vector<WalkSetup> setups;
    std::stringstream ss(graphs_csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) setups.push_back(parse_setup(item));
    if (setups.empty()) throw std::invalid_argument("no graphs given");
    return setups;
}

int cmd_simulate(const std::string& graph, double p, const std::string& walker,
                 const CommonFlags& flags, int stride, const std::string& out) {
    WalkSetup setup = parse_setup(graph);
    IntegrationParams params = flags.params();
    double t_max = params.effective_t_max(setup.graph.order);
    Trajectory traj;
    if (walker == "quantum") {
        LindbladSpec spec;
        spec.adjacency = adjacency_matrix(setup.graph);
        spec.transition = transition_matrix(setup.graph);
        spec.p = p;
        spec.gamma = params.gamma;
        spec.target = setup.target;
        spec.convention = params.convention;
        traj = integrate_quantum(spec, setup, t_max, params.dt);
    } else {
        Eigen::MatrixXd q =
            classical_generator(transition_matrix(setup.graph), setup.target, true);
        Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(setup.graph.order);
        pi0(setup.source) = 1.0;
        traj = integrate_classical(q, pi0, setup.target, t_max, params.dt);
    }
    std::ostringstream csv;
    csv << "time,value\n";
    for (std::size_t i = 0; i < traj.times.size(); i += stride)
        csv << fmt(traj.times[i]) << ',' << fmt(traj.values[i]) << '\n';
    atomic_write(out, csv.str());
    ordered_json meta = flags.to_json();
    meta["command"] = "simulate";
    meta["graph"] = graph;
    meta["p"] = p;
    meta["walker"] = walker;
    meta["stride"] = stride;
    write_meta(out, meta);
    emit_summary({{"command", "simulate"}, {"graph", graph}, {"walker", walker},
                  {"steps", traj.times.size()}, {"out", out}});
    return 0;
}

int cmd_label(const std::string& graph, double p, const CommonFlags& flags) {
    WalkSetup setup = parse_setup(graph);
    TransferOutcome out = label_walk(setup, p, flags.params());
    ordered_json j{{"command", "label"}, {"graph", graph}, {"p", p},
                   {"threshold", out.threshold}, {"label", out.label}};
    j["t_quantum"] = out.t_quantum ? ordered_json(*out.t_quantum) : ordered_json(nullptr);
    j["t_classical"] = out.t_classical ? ordered_json(*out.t_classical) : ordered_json(nullptr);
    emit_summary(j);
    return 0;
}

int cmd_sweep(const std::string& graph, int grid_points, double p_min, double p_max,
              const CommonFlags& flags, const std::string& out) {
    WalkSetup setup = parse_setup(graph);
    auto grid = make_grid(grid_points, p_min, p_max);
    SweepResult result = sweep_ground_truth(setup, grid, flags.params(), flags.workers);

    std::ostringstream csv;
    csv << "p,label,t_quantum,t_classical\n";
    for (const auto& o : result.outcomes) {
        csv << fmt(o.p) << ',' << o.label << ',';
        csv << (o.t_quantum ? fmt(*o.t_quantum) : "") << ',';
        csv << (o.t_classical ? fmt(*o.t_classical) : "") << '\n';
    }
    atomic_write(out, csv.str());

    ordered_json meta = flags.to_json();
    meta["command"] = "sweep";
    meta["graph"] = graph;
    meta["grid_size"] = grid_points;
    write_meta(out, meta);

    ordered_json summary{{"command", "sweep"}, {"graph", graph}, {"grid_size", grid_points}};
    summary["p_star"] = result.p_star ? ordered_json(*result.p_star) : ordered_json(nullptr);
    summary["transitions"] = result.transitions;
    summary["conventions"] = flags.to_json();
    summary["out"] = out;
    atomic_write(out + ".summary.json", summary.dump() + "\n");
    emit_summary(summary);
    return 0;
}

int cmd_gen_data(const std::string& graphs, int samples, std::uint64_t seed, int n_max,
                 const CommonFlags& flags, const std::string& out) {
    auto setups = parse_setups(graphs);
    GenerationReport report;
    Dataset ds = generate(setups, samples, seed, flags.params(), n_max, flags.workers, &report);
    save(ds, out);
    ordered_json jreport{{"command", "gen-data"},
                         {"requested", report.requested},
                         {"generated", report.generated},
                         {"failures", report.failures},
                         {"out", out}};
    atomic_write(out + ".report.json", jreport.dump() + "\n");
    emit_summary(jreport);
    return 0;
}

int cmd_train(const std::string& data, const std::string& exclude, const TrainConfig& cfg_in,
              int workers, const std::string& out) {
    Dataset ds = load(data);
    Dataset train_set = ds;
    if (!exclude.empty()) train_set = split_exclude(ds, exclude).first;
    TrainConfig cfg = cfg_in;
    cfg.n_max = ds.flags.n_max;
    std::vector<TrainHistory> histories;
    auto models = train_ensemble(train_set, cfg, workers, &histories);
    save_models(models, cfg, out);
    ordered_json hist = ordered_json::array();
    for (const auto& h : histories)
        hist.push_back({{"epochs", h.loss.size()},
                        {"final_loss", h.loss.empty() ? 0.0 : h.loss.back()},
                        {"final_accuracy", h.accuracy.empty() ? 0.0 : h.accuracy.back()}});
    emit_summary({{"command", "train"}, {"examples", train_set.examples.size()},
                  {"excluded", exclude}, {"ensemble", cfg.ensemble_size},
                  {"members", hist}, {"out", out}});
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& graph, int grid_points,
             double p_min, double p_max, const std::string& out) {
    auto models = load_models(model_path);
    WalkSetup setup = parse_setup(graph);
    auto grid = make_grid(grid_points, p_min, p_max);
    CurveResult curve = predict_curve(models, setup, grid);

    std::ostringstream csv;
    csv << "p,score_classical,score_quantum,std_classical,std_quantum,label\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const Prediction& pred = curve.predictions[i];
        auto std_pair = pred.score_std.value_or(std::array<double, 2>{0.0, 0.0});
        csv << fmt(curve.grid[i]) << ',' << fmt(pred.scores[0]) << ',' << fmt(pred.scores[1])
            << ',' << fmt(std_pair[0]) << ',' << fmt(std_pair[1]) << ',' << pred.label << '\n';
    }
    atomic_write(out, csv.str());
    write_meta(out, {{"command", "eval"}, {"model", model_path}, {"graph", graph},
                     {"grid_size", grid_points}});
    ordered_json summary{{"command", "eval"}, {"graph", graph}, {"grid_size", grid_points}};
    summary["crossover"] = curve.crossover ? ordered_json(*curve.crossover) : ordered_json(nullptr);
    summary["transitions"] = curve.transitions;
    summary["out"] = out;
    emit_summary(summary);
    return 0;
}

int cmd_grad_check(int n_max, int filters, std::uint64_t seed) {
    CqcnnModel model = init_model(n_max, seed, filters);
    std::vector<double*> params;
    for_each_param(model, [&](double& w) { params.push_back(&w); });

    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int ex = 0; ex < 5; ++ex) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_max, n_max);
        for (int i = 0; i < n_max; ++i)
            for (int j = i + 1; j < n_max; ++j)
                if (unit(rng) < 0.5) a(i, j) = a(j, i) = 1.0;
        double p = unit(rng);
        int label = unit(rng) < 0.5 ? 0 : 1;

        CqcnnModel grad = make_model(n_max, filters);
        backward(model, a, p, n_max, label, grad);
        std::vector<double> analytic;
        for_each_param(grad, [&](double& g) { analytic.push_back(g); });

        auto loss_at = [&] {
            return -std::log(forward(model, a, p, n_max).scores[label]);
        };
        for (std::size_t k = 0; k < params.size(); ++k) {
            double saved = *params[k];
            *params[k] = saved + h;
            double up = loss_at();
            *params[k] = saved - h;
            double down = loss_at();
            *params[k] = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
        }
    }
    bool ok = worst < 1e-4;
    emit_summary({{"command", "grad-check"}, {"max_relative_error", worst}, {"pass", ok}});
    if (!ok) throw NumericalError("gradient check failed");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Noisy quantum walk transfer-efficiency pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;

    std::string graph, walker = "quantum", out, graphs, data, exclude, model_path;
    double p = 0.0, p_min = 0.0, p_max = 1.0;
    int stride = 10, grid_points = 101, samples = 100, n_max = 14;
    std::uint64_t seed = 0;
    TrainConfig tcfg;

    auto* sim = app.add_subcommand("simulate", "Integrate one walk and dump the trajectory CSV");
    sim->add_option("--graph", graph, "Graph descriptor (cycle:<n> or edges:<n>:<list>)")
        ->required();
    sim->add_option("--p", p, "Decoherence parameter")->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sim->add_option("--walker", walker, "quantum or classical")->capture_default_str()
        ->check(CLI::IsMember({"quantum", "classical"}));
    sim->add_option("--stride", stride, "Row decimation for the CSV")->capture_default_str()
        ->check(CLI::PositiveNumber);
    sim->add_option("--out", out, "Output CSV path")->required();
    add_common(sim, flags);

    auto* lab = app.add_subcommand("label", "Label one (graph, p) configuration");
    lab->add_option("--graph", graph, "Graph descriptor")->required();
    lab->add_option("--p", p, "Decoherence parameter")->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    add_common(lab, flags);

    auto* swp = app.add_subcommand("sweep", "Ground-truth efficiency sweep over a p grid");
    swp->add_option("--graph", graph, "Graph descriptor")->required();
    swp->add_option("--grid", grid_points, "Number of grid points")->capture_default_str()
        ->check(CLI::PositiveNumber);
    swp->add_option("--p-min", p_min, "Grid lower bound")->capture_default_str();
    swp->add_option("--p-max", p_max, "Grid upper bound")->capture_default_str();
    swp->add_option("--out", out, "Output CSV path")->required();
    add_common(swp, flags);

    auto* gen = app.add_subcommand("gen-data", "Generate a labeled JSONL dataset");
    gen->add_option("--graphs", graphs, "Comma-separated graph descriptors")->required();
    gen->add_option("--samples", samples, "Samples per graph")->capture_default_str()
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", seed, "RNG seed")->capture_default_str();
    gen->add_option("--n-max", n_max, "Padded matrix size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    gen->add_option("--out", out, "Output JSONL path")->required();
    add_common(gen, flags);

    auto* trn = app.add_subcommand("train", "Train a CQCNN ensemble on a dataset");
    trn->add_option("--data", data, "Dataset JSONL path")->required();
    trn->add_option("--exclude", exclude, "Graph kind excluded from training");
    trn->add_option("--ensemble", tcfg.ensemble_size, "Ensemble size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--seed", tcfg.seed, "Base seed")->capture_default_str();
    trn->add_option("--lr", tcfg.learning_rate, "SGD learning rate")->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--epochs", tcfg.epochs, "Max training epochs")->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--batch", tcfg.batch_size, "Minibatch size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    trn->add_option("--early-stop-loss", tcfg.early_stop_loss,
                    "Stop when epoch mean loss drops below this")->capture_default_str();
    trn->add_option("--workers", flags.workers, "Threads for ensemble members")
        ->capture_default_str()->check(CLI::PositiveNumber);
    trn->add_option("--out", out, "Model JSON path")->required();

    auto* evl = app.add_subcommand("eval", "Evaluate a trained ensemble over a p grid");
    evl->add_option("--model", model_path, "Model JSON path")->required();
    evl->add_option("--graph", graph, "Graph descriptor")->required();
    evl->add_option("--grid", grid_points, "Number of grid points")->capture_default_str()
        ->check(CLI::PositiveNumber);
    evl->add_option("--p-min", p_min, "Grid lower bound")->capture_default_str();
    evl->add_option("--p-max", p_max, "Grid upper bound")->capture_default_str();
    evl->add_option("--out", out, "Output CSV path")->required();

    int gc_n_max = 4, gc_filters = 2;
    auto* gck = app.add_subcommand("grad-check",
                                   "Compare analytic gradients against finite differences");
    gck->add_option("--n-max", gc_n_max, "Model size")->capture_default_str()
        ->check(CLI::PositiveNumber);
    gck->add_option("--filters", gc_filters, "Filters per layer")
        ->capture_default_str()->check(CLI::PositiveNumber);
    gck->add_option("--seed", seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(graph, p, walker, flags, stride, out);
        if (lab->parsed()) return cmd_label(graph, p, flags);
        if (swp->parsed()) return cmd_sweep(graph, grid_points, p_min, p_max, flags, out);
        if (gen->parsed()) return cmd_gen_data(graphs, samples, seed, n_max, flags, out);
        if (trn->parsed()) return cmd_train(data, exclude, tcfg, flags.workers, out);
        if (evl->parsed())
            return cmd_eval(model_path, graph, grid_points, p_min, p_max, out);
        if (gck->parsed()) return cmd_grad_check(gc_n_max, gc_filters, seed);
    } catch (const IntegrationError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
