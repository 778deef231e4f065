#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cqwalk/graph.hpp"

namespace cqwalk {

/// How the hop amplitudes enter the jump operators L_mk = c_mk |m><k|.
/// Amplitude: c = T_mk (incoherent rates scale as T^2).
/// Rate: c = sqrt(T_mk), so the fully dephased limit reproduces the
/// classical generator T - I exactly.
enum class RateConvention { Amplitude, Rate };

std::string to_string(RateConvention c);
RateConvention rate_convention_from_string(const std::string& s);

/// Open-system walk on the graph-plus-sink space of dimension n+1.
struct LindbladSpec {
    Eigen::MatrixXd adjacency;   // n x n, Hamiltonian (hbar = 1)
    Eigen::MatrixXd transition;  // n x n, column-stochastic
    double p = 0.0;              // decoherence weight in [0,1]
    double gamma = 1.0;          // target-to-sink coupling
    int target = 0;
    RateConvention convention = RateConvention::Amplitude;

    int dim() const { return static_cast<int>(adjacency.rows()) + 1; }
    void validate() const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> values;
};

/// Thrown when an integration leaves its tolerance envelope; carries the
/// time at which the violation was detected.
struct IntegrationError : std::runtime_error {
    double time;
    IntegrationError(const std::string& what, double t)
        : std::runtime_error(what + " at t=" + std::to_string(t)), time(t) {}
};

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const LindbladSpec& spec);

struct QuantumCheckTolerances {
    double hermiticity = 1e-10;
    double trace = 1e-9;
    double min_eigenvalue = -1e-7;
    int stride = 100;  // steps between density-matrix checks
};

/// Fixed-step RK4 on the Lindblad equation from rho(0) = |source><source|.
/// Records the sink population at every step. If `stop_above` is set the
/// integration ends at the first step whose sink population exceeds it.
Trajectory integrate_quantum(const LindbladSpec& spec, const WalkSetup& setup,
                             double t_max, double dt,
                             std::optional<double> stop_above = std::nullopt,
                             const QuantumCheckTolerances& tol = {});

/// Continuous-time random-walk generator Q = T' - I. With `absorbing`
/// the target column of T is replaced by e_target first, so the tracked
/// target mass is the cumulative arrival probability.
Eigen::MatrixXd classical_generator(const Eigen::MatrixXd& transition, int target, bool absorbing);

Trajectory integrate_classical(const Eigen::MatrixXd& generator, const Eigen::VectorXd& pi0,
                               int target, double t_max, double dt,
                               std::optional<double> stop_above = std::nullopt);

/// Literal propagator pi(t) = e^{-t} e^{Tt} pi(0); test oracle for the
/// RK4 route.
Eigen::VectorXd classical_propagate_exact(const Eigen::MatrixXd& transition,
                                          const Eigen::VectorXd& pi0, double t);

}  // namespace cqwalk
