#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "cqwalk/dataset.hpp"
#include "cqwalk/graph.hpp"

namespace cqwalk {

/// One "cross" filter: a weighted sum over the row and the column
/// meeting at each output position, shared across all positions.
struct CrossFilter {
    Eigen::VectorXd u;  // row weights
    Eigen::VectorXd v;  // column weights
    double b = 0.0;
};

/// Single-filter application: Y[i][j] = act(sum_k u[k] X[i][k] +
/// sum_k v[k] X[k][j] + b). `activation` defaults to the rectifier.
Eigen::MatrixXd cross_apply(const Eigen::MatrixXd& x, const CrossFilter& f,
                            const std::function<double(double)>& activation = nullptr);

struct ConvLayer {
    // filters[out][in], mix(out, in) scales each input-channel
    // contribution before the shared activation.
    std::vector<std::vector<CrossFilter>> filters;
    Eigen::MatrixXd mix;

    int out_channels() const { return static_cast<int>(filters.size()); }
    int in_channels() const { return filters.empty() ? 0 : static_cast<int>(filters[0].size()); }
};

/// Cross-filter convolution stack (3 levels) over the padded adjacency
/// matrix, followed by a 3*N -> 10 -> 2 fully connected head. The
/// decoherence parameter p and the relative order n/N enter as two
/// extra scalars at the flatten stage.
struct CqcnnModel {
    int n_max = 14;
    int filters_per_layer = 4;
    std::array<ConvLayer, 3> conv;
    Eigen::MatrixXd fc1_w, fc2_w, fc3_w;
    Eigen::VectorXd fc1_b, fc2_b, fc3_b;
    std::uint64_t seed = 0;

    int flatten_dim() const { return filters_per_layer * n_max * n_max; }
};

/// Allocate a model of the given size with zero weights.
CqcnnModel make_model(int n_max, int filters_per_layer = 4);
/// Seeded uniform [-0.1, 0.1] initialization of every weight.
CqcnnModel init_model(int n_max, std::uint64_t seed, int filters_per_layer = 4);

/// Visit every scalar parameter in a fixed traversal order.
void for_each_param(CqcnnModel& m, const std::function<void(double&)>& fn);
std::size_t param_count(const CqcnnModel& m);

struct Prediction {
    std::array<double, 2> scores{};  // post-softmax {classical, quantum}
    int label = 0;                   // 1 = quantum advantage
    std::optional<std::array<double, 2>> score_std;
};

struct ForwardContext;  // opaque cache for backward()

Prediction forward(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n);

/// Softmax cross-entropy on raw logits. true_label 1 = quantum class.
double cross_entropy_loss(const Eigen::Vector2d& logits, int true_label);

/// Analytic gradients for one example, shaped exactly like the model.
/// Returns the example loss.
double backward(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n,
                int true_label, CqcnnModel& grad);

struct TrainConfig {
    double learning_rate = 0.01;
    int epochs = 500;
    int batch_size = 10;
    std::uint64_t seed = 0;
    int ensemble_size = 5;
    double early_stop_loss = 0.01;
    int n_max = 14;
    int filters_per_layer = 4;
};

struct TrainHistory {
    std::vector<double> loss;      // per-epoch mean training loss
    std::vector<double> accuracy;  // per-epoch training accuracy
};

/// Minibatch SGD with seeded init and shuffling; deterministic given
/// the seed. Stops early once the epoch mean loss drops below
/// cfg.early_stop_loss. Throws on NaN loss.
CqcnnModel train(const Dataset& ds, const TrainConfig& cfg, TrainHistory* history = nullptr);

/// Ensemble members use seeds cfg.seed, cfg.seed + 1, ...
std::vector<CqcnnModel> train_ensemble(const Dataset& ds, const TrainConfig& cfg,
                                       int workers = 1,
                                       std::vector<TrainHistory>* histories = nullptr);

/// Average the ensemble's softmax scores; label = argmax of the mean.
Prediction predict_ensemble(const std::vector<CqcnnModel>& models,
                            const Eigen::MatrixXd& a_padded, double p, int n);

struct CurveResult {
    std::vector<double> grid;
    std::vector<Prediction> predictions;
    std::optional<double> crossover;    // single 1->0 transition, bisected to 1e-3
    std::vector<double> transitions;
};

CurveResult predict_curve(const std::vector<CqcnnModel>& models, const WalkSetup& setup,
                          const std::vector<double>& grid);

/// Model bundle JSON: config plus every weight tensor, round-trippable.
void save_models(const std::vector<CqcnnModel>& models, const TrainConfig& cfg,
                 const std::filesystem::path& path);
std::vector<CqcnnModel> load_models(const std::filesystem::path& path,
                                    TrainConfig* cfg = nullptr);

}  // namespace cqwalk
