#include "cqwalk/dynamics.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>

namespace cqwalk {

using complexd = std::complex<double>;

std::string to_string(RateConvention c) {
    return c == RateConvention::Amplitude ? "amplitude" : "rate";
}

RateConvention rate_convention_from_string(const std::string& s) {
    if (s == "amplitude") return RateConvention::Amplitude;
    if (s == "rate") return RateConvention::Rate;
    throw std::invalid_argument("unknown rate convention: '" + s + "'");
}

void LindbladSpec::validate() const {
    if (adjacency.rows() != adjacency.cols() || transition.rows() != transition.cols())
        throw std::invalid_argument("adjacency/transition must be square");
    if (adjacency.rows() != transition.rows())
        throw std::invalid_argument("adjacency and transition sizes differ");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must be in [0,1]");
    if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
    if (target < 0 || target >= adjacency.rows())
        throw std::invalid_argument("target out of range");
}

namespace {

// Precomputed pieces of the generator. All jump operators are single
// matrix units, so the dissipator reduces to a diagonal gain plus
// row/column damping: O(d^2) per evaluation, only the commutator is a
// matmul.
struct LindbladWork {
    Eigen::MatrixXcd hamiltonian;  // d x d, graph block only
    Eigen::MatrixXd rates;         // d x d, squared jump amplitudes
    Eigen::VectorXd damping;       // column sums of rates
    double coherent_weight;        // 1 - p
    double p;
    double gamma;
    int target;
    int sink;

    explicit LindbladWork(const LindbladSpec& spec) {
        spec.validate();
        int n = static_cast<int>(spec.adjacency.rows());
        int d = n + 1;
        hamiltonian = Eigen::MatrixXcd::Zero(d, d);
        hamiltonian.topLeftCorner(n, n) = spec.adjacency.cast<complexd>();
        rates = Eigen::MatrixXd::Zero(d, d);
        for (int k = 0; k < n; ++k)
            for (int m = 0; m < n; ++m) {
                double t = spec.transition(m, k);
                if (t == 0.0) continue;
                rates(m, k) = spec.convention == RateConvention::Amplitude ? t * t : t;
            }
        damping = rates.colwise().sum();
        p = spec.p;
        coherent_weight = 1.0 - spec.p;
        gamma = spec.gamma;
        target = spec.target;
        sink = n;
    }

    void rhs(const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& out, Eigen::MatrixXcd& scratch) const {
        int d = static_cast<int>(rho.rows());
        scratch.noalias() = hamiltonian * rho;
        scratch.noalias() -= rho * hamiltonian;
        out = complexd(0.0, -coherent_weight) * scratch;
        if (p > 0.0) {
            for (int j = 0; j < d; ++j)
                for (int i = 0; i < d; ++i)
                    out(i, j) -= 0.5 * p * (damping(i) + damping(j)) * rho(i, j);
            for (int m = 0; m < d; ++m) {
                complexd gain(0.0, 0.0);
                for (int k = 0; k < d; ++k)
                    if (rates(m, k) != 0.0) gain += rates(m, k) * rho(k, k);
                out(m, m) += p * gain;
            }
        }
        if (gamma > 0.0) {
            out(sink, sink) += gamma * rho(target, target);
            out.row(target) -= (0.5 * gamma) * rho.row(target);
            out.col(target) -= (0.5 * gamma) * rho.col(target);
        }
    }
};

void check_density(const Eigen::MatrixXcd& rho, double t, const QuantumCheckTolerances& tol) {
    double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > tol.hermiticity)
        throw IntegrationError("hermiticity drift " + std::to_string(herm), t);
    double trace = std::abs(rho.trace() - complexd(1.0, 0.0));
    if (trace > tol.trace)
        throw IntegrationError("trace drift " + std::to_string(trace), t);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < tol.min_eigenvalue)
        throw IntegrationError("negative eigenvalue " + std::to_string(min_eig), t);
}

}  // namespace

Eigen::MatrixXcd lindblad_rhs(const Eigen::MatrixXcd& rho, const LindbladSpec& spec) {
    if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
        throw std::invalid_argument("density matrix dimension does not match spec");
    LindbladWork work(spec);
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    Eigen::MatrixXcd scratch(rho.rows(), rho.cols());
    work.rhs(rho, out, scratch);
    return out;
}

Trajectory integrate_quantum(const LindbladSpec& spec, const WalkSetup& setup,
                             double t_max, double dt,
                             std::optional<double> stop_above,
                             const QuantumCheckTolerances& tol) {
    if (dt <= 0.0 || t_max <= 0.0) throw std::invalid_argument("dt and t_max must be positive");
    setup.validate();
    if (spec.adjacency.rows() != setup.graph.order)
        throw std::invalid_argument("spec does not match setup order");
    LindbladWork work(spec);
    int d = spec.dim();

    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
    rho(setup.source, setup.source) = 1.0;
    Eigen::MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), stage(d, d), scratch(d, d);

    long steps = std::lround(t_max / dt);
    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.values.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.values.push_back(0.0);

    // With no dissipative terms the generator is the bare commutator, so a
    // cached one-step unitary propagates exactly; long-horizon RK4 would
    // otherwise accumulate eigenvalue drift beyond the positivity tolerance.
    bool unitary = spec.p == 0.0 && spec.gamma == 0.0;
    Eigen::MatrixXcd u;
    if (unitary) u = (complexd(0.0, -dt) * work.hamiltonian).exp();

    for (long step = 1; step <= steps; ++step) {
        if (unitary) {
            stage.noalias() = u * rho;
            rho.noalias() = stage * u.adjoint();
        } else {
            work.rhs(rho, k1, scratch);
            stage = rho + (0.5 * dt) * k1;
            work.rhs(stage, k2, scratch);
            stage = rho + (0.5 * dt) * k2;
            work.rhs(stage, k3, scratch);
            stage = rho + dt * k3;
            work.rhs(stage, k4, scratch);
            rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }

        double t = step * dt;
        traj.times.push_back(t);
        traj.values.push_back(rho(work.sink, work.sink).real());
        if (step % tol.stride == 0) check_density(rho, t, tol);
        if (stop_above && traj.values.back() > *stop_above) break;
    }
    return traj;
}

Eigen::MatrixXd classical_generator(const Eigen::MatrixXd& transition, int target, bool absorbing) {
    int n = static_cast<int>(transition.rows());
    if (transition.cols() != n) throw std::invalid_argument("transition must be square");
    for (int k = 0; k < n; ++k)
        if (std::abs(transition.col(k).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("transition matrix is not column-stochastic");
    if (target < 0 || target >= n) throw std::invalid_argument("target out of range");
    Eigen::MatrixXd t = transition;
    if (absorbing) {
        t.col(target).setZero();
        t(target, target) = 1.0;
    }
    return t - Eigen::MatrixXd::Identity(n, n);
}

Trajectory integrate_classical(const Eigen::MatrixXd& generator, const Eigen::VectorXd& pi0,
                               int target, double t_max, double dt,
                               std::optional<double> stop_above) {
    int n = static_cast<int>(generator.rows());
    if (pi0.size() != n) throw std::invalid_argument("distribution size mismatch");
    if (target < 0 || target >= n) throw std::invalid_argument("target out of range");
    if (dt <= 0.0 || t_max <= 0.0) throw std::invalid_argument("dt and t_max must be positive");
    if (std::abs(pi0.sum() - 1.0) > 1e-9 || pi0.minCoeff() < -1e-12)
        throw std::invalid_argument("pi0 is not a probability distribution");

    Eigen::VectorXd pi = pi0;
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n);

    long steps = std::lround(t_max / dt);
    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.values.reserve(steps + 1);
    traj.times.push_back(0.0);
    traj.values.push_back(pi(target));

    for (long step = 1; step <= steps; ++step) {
        k1.noalias() = generator * pi;
        k2.noalias() = generator * (pi + (0.5 * dt) * k1);
        k3.noalias() = generator * (pi + (0.5 * dt) * k2);
        k4.noalias() = generator * (pi + dt * k3);
        pi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        double t = step * dt;
        double drift = std::abs(pi.sum() - 1.0);
        if (drift > 1e-7)
            throw IntegrationError("probability sum drift " + std::to_string(drift), t);
        traj.times.push_back(t);
        traj.values.push_back(pi(target));
        if (stop_above && traj.values.back() > *stop_above) break;
    }
    return traj;
}

Eigen::VectorXd classical_propagate_exact(const Eigen::MatrixXd& transition,
                                          const Eigen::VectorXd& pi0, double t) {
    if (t < 0.0) throw std::invalid_argument("time must be nonnegative");
    Eigen::MatrixXd propagator = (transition * t).exp();
    return std::exp(-t) * (propagator * pi0);
}

}  // namespace cqwalk
