#include "cqwalk/efficiency.hpp"

#include <algorithm>
#include <cmath>

#include "cqwalk/util.hpp"

namespace cqwalk {

double detection_threshold(int n, double log_base) {
    if (n < 3) throw std::invalid_argument("threshold needs n >= 3");
    double log_n = log_base > 0.0 ? std::log(n) / std::log(log_base) : std::log(n);
    double thr = 1.0 / log_n;
    if (thr >= 1.0 || thr <= 0.0)
        throw std::invalid_argument("threshold 1/log(" + std::to_string(n) +
                                    ") does not lie in (0,1) for this log base");
    return thr;
}

std::optional<double> first_crossing(const Trajectory& traj, double threshold) {
    if (traj.times.empty() || traj.times.size() != traj.values.size())
        throw std::invalid_argument("empty or inconsistent trajectory");
    if (traj.values.front() > threshold) return traj.times.front();
    for (std::size_t i = 1; i < traj.values.size(); ++i) {
        if (traj.values[i] > threshold) {
            double t0 = traj.times[i - 1], t1 = traj.times[i];
            double v0 = traj.values[i - 1], v1 = traj.values[i];
            return t0 + (threshold - v0) * (t1 - t0) / (v1 - v0);
        }
    }
    return std::nullopt;
}

namespace {

constexpr double kTieTolerance = 1e-9;

LindbladSpec make_spec(const WalkSetup& setup, double p, const IntegrationParams& params) {
    LindbladSpec spec;
    spec.adjacency = adjacency_matrix(setup.graph);
    spec.transition = transition_matrix(setup.graph);
    spec.p = p;
    spec.gamma = params.gamma;
    spec.target = setup.target;
    spec.convention = params.convention;
    return spec;
}

std::optional<double> quantum_crossing(const WalkSetup& setup, double p,
                                       const IntegrationParams& params, double threshold) {
    LindbladSpec spec = make_spec(setup, p, params);
    Trajectory traj = integrate_quantum(spec, setup, params.effective_t_max(setup.graph.order),
                                        params.dt, threshold, params.tolerances);
    return first_crossing(traj, threshold);
}

std::optional<double> classical_crossing(const WalkSetup& setup, const IntegrationParams& params,
                                         double threshold) {
    Eigen::MatrixXd q =
        classical_generator(transition_matrix(setup.graph), setup.target, /*absorbing=*/true);
    Eigen::VectorXd pi0 = Eigen::VectorXd::Zero(setup.graph.order);
    pi0(setup.source) = 1.0;
    Trajectory traj = integrate_classical(q, pi0, setup.target,
                                          params.effective_t_max(setup.graph.order), params.dt,
                                          threshold);
    return first_crossing(traj, threshold);
}

TransferOutcome combine(double p, double threshold, std::optional<double> t_quantum,
                        std::optional<double> t_classical, double horizon) {
    if (!t_quantum && !t_classical)
        throw IntegrationError("neither walker crossed the threshold; increase t_max", horizon);
    TransferOutcome out;
    out.threshold = threshold;
    out.t_quantum = t_quantum;
    out.t_classical = t_classical;
    out.p = p;
    out.label = t_quantum && (!t_classical || *t_classical - *t_quantum > kTieTolerance) ? 1 : 0;
    return out;
}

}  // namespace

TransferOutcome label_walk(const WalkSetup& setup, double p, const IntegrationParams& params) {
    setup.validate();
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must be in [0,1]");
    double threshold = detection_threshold(setup.graph.order, params.log_base);
    auto t_classical = classical_crossing(setup, params, threshold);
    auto t_quantum = quantum_crossing(setup, p, params, threshold);
    return combine(p, threshold, t_quantum, t_classical,
                   params.effective_t_max(setup.graph.order));
}

SweepResult sweep_ground_truth(const WalkSetup& setup, const std::vector<double>& grid,
                               const IntegrationParams& params, int workers) {
    setup.validate();
    if (grid.empty()) throw std::invalid_argument("empty p grid");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("p grid must be sorted ascending");
    if (grid.front() < 0.0 || grid.back() > 1.0)
        throw std::invalid_argument("p grid must lie in [0,1]");

    double threshold = detection_threshold(setup.graph.order, params.log_base);
    double horizon = params.effective_t_max(setup.graph.order);
    auto t_classical = classical_crossing(setup, params, threshold);

    SweepResult result;
    result.outcomes.resize(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        auto t_quantum = quantum_crossing(setup, grid[i], params, threshold);
        result.outcomes[i] = combine(grid[i], threshold, t_quantum, t_classical, horizon);
    });

    std::vector<std::size_t> changes;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (result.outcomes[i].label != result.outcomes[i + 1].label) {
            changes.push_back(i);
            result.transitions.push_back(0.5 * (grid[i] + grid[i + 1]));
        }

    if (changes.size() == 1 && result.outcomes[changes[0]].label == 1) {
        double lo = grid[changes[0]];
        double hi = grid[changes[0] + 1];
        while (hi - lo > 1e-3) {
            double mid = 0.5 * (lo + hi);
            auto t_quantum = quantum_crossing(setup, mid, params, threshold);
            auto out = combine(mid, threshold, t_quantum, t_classical, horizon);
            (out.label == 1 ? lo : hi) = mid;
        }
        result.p_star = 0.5 * (lo + hi);
    }
    return result;
}

}  // namespace cqwalk
