#pragma once

#include <optional>
#include <vector>

#include "cqwalk/dynamics.hpp"
#include "cqwalk/graph.hpp"

namespace cqwalk {

/// Conventions and integration settings shared by labeling runs.
struct IntegrationParams {
    double gamma = 1.0;
    double dt = 0.01;
    double t_max = 0.0;          // <= 0: horizon_factor * n
    double horizon_factor = 30.0;
    double log_base = 0.0;       // <= 0: natural log
    RateConvention convention = RateConvention::Amplitude;
    QuantumCheckTolerances tolerances{};

    double effective_t_max(int n) const { return t_max > 0.0 ? t_max : horizon_factor * n; }
};

/// Detection threshold 1/log(n) in the configured base (base <= 0 means
/// natural log). Throws when the threshold would not lie in (0,1).
double detection_threshold(int n, double log_base = 0.0);

/// First time the trajectory strictly exceeds `threshold`, linearly
/// interpolated between the bracketing samples. nullopt if never.
std::optional<double> first_crossing(const Trajectory& traj, double threshold);

struct TransferOutcome {
    double threshold = 0.0;
    std::optional<double> t_quantum;
    std::optional<double> t_classical;
    int label = 0;  // 1 = quantum advantage
    double p = 0.0;
};

/// Label one (setup, p) configuration by racing the noisy quantum walk
/// against the absorbing classical walk. Throws IntegrationError when
/// neither walker crosses within the horizon.
TransferOutcome label_walk(const WalkSetup& setup, double p, const IntegrationParams& params);

struct SweepResult {
    std::vector<TransferOutcome> outcomes;
    std::optional<double> p_star;       // present only for a single 1->0 transition
    std::vector<double> transitions;    // grid midpoints of every label change
};

/// Label every grid point (ascending p values) and locate the crossover
/// by bisection to 1e-3. The classical crossing time is computed once;
/// it does not depend on p.
SweepResult sweep_ground_truth(const WalkSetup& setup, const std::vector<double>& grid,
                               const IntegrationParams& params, int workers = 1);

}  // namespace cqwalk
