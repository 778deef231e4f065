#include "cqwalk/cqcnn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cqwalk/util.hpp"

namespace cqwalk {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kFcHiddenFactor = 3;  // first head layer has 3*N neurons
constexpr int kFcMid = 10;
constexpr int kClasses = 2;

double relu(double x) { return x > 0.0 ? x : 0.0; }

Eigen::Vector2d softmax(const Eigen::Vector2d& z) {
    double m = z.maxCoeff();
    Eigen::Vector2d e = (z.array() - m).exp();
    return e / e.sum();
}

struct ForwardCache {
    std::array<std::vector<Eigen::MatrixXd>, 4> channels;  // post-activation, [0] = input
    std::array<std::vector<Eigen::MatrixXd>, 3> pre;       // pre-activation per filter
    std::array<std::vector<std::vector<Eigen::VectorXd>>, 3> row_proj, col_proj;
    Eigen::VectorXd x, a1, h1, a2, h2;
    Eigen::Vector2d logits, scores;
};

void forward_impl(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n,
                  ForwardCache& ctx) {
    int N = m.n_max;
    if (a_padded.rows() != N || a_padded.cols() != N)
        throw std::invalid_argument("input matrix must be n_max x n_max");
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p must be in [0,1]");
    if (n < 1 || n > N) throw std::invalid_argument("graph order out of range");

    ctx.channels[0] = {a_padded};
    for (int l = 0; l < 3; ++l) {
        const ConvLayer& layer = m.conv[l];
        int cin = layer.in_channels();
        int f_out = layer.out_channels();
        if (cin != static_cast<int>(ctx.channels[l].size()))
            throw std::invalid_argument("conv layer channel mismatch");
        ctx.pre[l].assign(f_out, Eigen::MatrixXd());
        ctx.row_proj[l].assign(f_out, std::vector<Eigen::VectorXd>(cin));
        ctx.col_proj[l].assign(f_out, std::vector<Eigen::VectorXd>(cin));
        ctx.channels[l + 1].assign(f_out, Eigen::MatrixXd());
        for (int f = 0; f < f_out; ++f) {
            Eigen::MatrixXd z = Eigen::MatrixXd::Zero(N, N);
            for (int c = 0; c < cin; ++c) {
                const CrossFilter& filt = layer.filters[f][c];
                const Eigen::MatrixXd& x = ctx.channels[l][c];
                Eigen::VectorXd r = x * filt.u;
                Eigen::VectorXd cv = x.transpose() * filt.v;
                ctx.row_proj[l][f][c] = r;
                ctx.col_proj[l][f][c] = cv;
                double w = layer.mix(f, c);
                z.colwise() += w * r;
                z.rowwise() += (w * cv).transpose();
                z.array() += w * filt.b;
            }
            ctx.pre[l][f] = z;
            ctx.channels[l + 1][f] = z.cwiseMax(0.0);
        }
    }

    int flat = m.flatten_dim();
    ctx.x.resize(flat + 2);
    int nn = N * N;
    for (int f = 0; f < m.filters_per_layer; ++f)
        ctx.x.segment(f * nn, nn) =
            Eigen::Map<const Eigen::VectorXd>(ctx.channels[3][f].data(), nn);
    ctx.x(flat) = p;
    ctx.x(flat + 1) = static_cast<double>(n) / N;

    ctx.a1 = m.fc1_w * ctx.x + m.fc1_b;
    ctx.h1 = ctx.a1.cwiseMax(0.0);
    ctx.a2 = m.fc2_w * ctx.h1 + m.fc2_b;
    ctx.h2 = ctx.a2.cwiseMax(0.0);
    ctx.logits = m.fc3_w * ctx.h2 + m.fc3_b;
    ctx.scores = softmax(ctx.logits);
}

double backward_impl(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n,
                     int true_label, CqcnnModel& grad, int* predicted) {
    if (true_label != 0 && true_label != 1)
        throw std::invalid_argument("label must be 0 or 1");
    ForwardCache ctx;
    forward_impl(m, a_padded, p, n, ctx);
    double loss = cross_entropy_loss(ctx.logits, true_label);
    if (predicted) *predicted = ctx.scores(1) > ctx.scores(0) ? 1 : 0;

    Eigen::Vector2d dz = ctx.scores;
    dz(true_label) -= 1.0;

    grad.fc3_w += dz * ctx.h2.transpose();
    grad.fc3_b += dz;
    Eigen::VectorXd dh2 = m.fc3_w.transpose() * dz;
    Eigen::VectorXd da2 = (ctx.a2.array() > 0.0).select(dh2, 0.0);
    grad.fc2_w += da2 * ctx.h1.transpose();
    grad.fc2_b += da2;
    Eigen::VectorXd dh1 = m.fc2_w.transpose() * da2;
    Eigen::VectorXd da1 = (ctx.a1.array() > 0.0).select(dh1, 0.0);
    grad.fc1_w += da1 * ctx.x.transpose();
    grad.fc1_b += da1;
    Eigen::VectorXd dx = m.fc1_w.transpose() * da1;

    int N = m.n_max;
    int nn = N * N;
    std::vector<Eigen::MatrixXd> d_out(m.filters_per_layer);
    for (int f = 0; f < m.filters_per_layer; ++f)
        d_out[f] = Eigen::Map<const Eigen::MatrixXd>(dx.data() + f * nn, N, N);

    for (int l = 2; l >= 0; --l) {
        const ConvLayer& layer = m.conv[l];
        int cin = layer.in_channels();
        int f_out = layer.out_channels();
        std::vector<Eigen::MatrixXd> d_in(cin, Eigen::MatrixXd::Zero(N, N));
        for (int f = 0; f < f_out; ++f) {
            Eigen::MatrixXd dz_f = (ctx.pre[l][f].array() > 0.0).select(d_out[f], 0.0);
            Eigen::VectorXd r = dz_f.rowwise().sum();
            Eigen::VectorXd cv = dz_f.colwise().sum().transpose();
            double total = r.sum();
            for (int c = 0; c < cin; ++c) {
                const CrossFilter& filt = layer.filters[f][c];
                const Eigen::MatrixXd& x = ctx.channels[l][c];
                double w = layer.mix(f, c);
                CrossFilter& gf = grad.conv[l].filters[f][c];
                gf.u += w * (x.transpose() * r);
                gf.v += w * (x * cv);
                gf.b += w * total;
                grad.conv[l].mix(f, c) += r.dot(ctx.row_proj[l][f][c]) +
                                          cv.dot(ctx.col_proj[l][f][c]) + filt.b * total;
                d_in[c] += w * (r * filt.u.transpose() + filt.v * cv.transpose());
            }
        }
        d_out = std::move(d_in);
    }
    return loss;
}

void zero_model(CqcnnModel& m) {
    for_each_param(m, [](double& w) { w = 0.0; });
}

std::vector<double*> param_pointers(CqcnnModel& m) {
    std::vector<double*> out;
    out.reserve(param_count(m));
    for_each_param(m, [&](double& w) { out.push_back(&w); });
    return out;
}

}  // namespace

Eigen::MatrixXd cross_apply(const Eigen::MatrixXd& x, const CrossFilter& f,
                            const std::function<double(double)>& activation) {
    if (x.rows() != x.cols() || x.rows() != f.u.size() || x.rows() != f.v.size())
        throw std::invalid_argument("cross_apply dimension mismatch");
    Eigen::VectorXd r = x * f.u;
    Eigen::VectorXd cv = x.transpose() * f.v;
    Eigen::MatrixXd y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            double z = r(i) + cv(j) + f.b;
            y(i, j) = activation ? activation(z) : relu(z);
        }
    return y;
}

CqcnnModel make_model(int n_max, int filters_per_layer) {
    if (n_max < 2 || filters_per_layer < 1)
        throw std::invalid_argument("invalid model size");
    CqcnnModel m;
    m.n_max = n_max;
    m.filters_per_layer = filters_per_layer;
    int f_out = filters_per_layer;
    for (int l = 0; l < 3; ++l) {
        int cin = l == 0 ? 1 : f_out;
        ConvLayer& layer = m.conv[l];
        layer.filters.assign(f_out, std::vector<CrossFilter>(cin));
        for (auto& row : layer.filters)
            for (auto& filt : row) {
                filt.u = Eigen::VectorXd::Zero(n_max);
                filt.v = Eigen::VectorXd::Zero(n_max);
                filt.b = 0.0;
            }
        layer.mix = Eigen::MatrixXd::Zero(f_out, cin);
    }
    int hidden = kFcHiddenFactor * n_max;
    m.fc1_w = Eigen::MatrixXd::Zero(hidden, m.flatten_dim() + 2);
    m.fc1_b = Eigen::VectorXd::Zero(hidden);
    m.fc2_w = Eigen::MatrixXd::Zero(kFcMid, hidden);
    m.fc2_b = Eigen::VectorXd::Zero(kFcMid);
    m.fc3_w = Eigen::MatrixXd::Zero(kClasses, kFcMid);
    m.fc3_b = Eigen::VectorXd::Zero(kClasses);
    return m;
}

CqcnnModel init_model(int n_max, std::uint64_t seed, int filters_per_layer) {
    CqcnnModel m = make_model(n_max, filters_per_layer);
    m.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    for_each_param(m, [&](double& w) { w = dist(rng); });
    return m;
}

void for_each_param(CqcnnModel& m, const std::function<void(double&)>& fn) {
    for (auto& layer : m.conv) {
        for (auto& row : layer.filters)
            for (auto& filt : row) {
                for (Eigen::Index i = 0; i < filt.u.size(); ++i) fn(filt.u(i));
                for (Eigen::Index i = 0; i < filt.v.size(); ++i) fn(filt.v(i));
                fn(filt.b);
            }
        for (Eigen::Index i = 0; i < layer.mix.size(); ++i) fn(*(layer.mix.data() + i));
    }
    for (auto* mat : {&m.fc1_w, &m.fc2_w, &m.fc3_w})
        for (Eigen::Index i = 0; i < mat->size(); ++i) fn(*(mat->data() + i));
    for (auto* vec : {&m.fc1_b, &m.fc2_b, &m.fc3_b})
        for (Eigen::Index i = 0; i < vec->size(); ++i) fn((*vec)(i));
}

std::size_t param_count(const CqcnnModel& m) {
    std::size_t count = 0;
    for_each_param(const_cast<CqcnnModel&>(m), [&](double&) { ++count; });
    return count;
}

Prediction forward(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n) {
    ForwardCache ctx;
    forward_impl(m, a_padded, p, n, ctx);
    Prediction pred;
    pred.scores = {ctx.scores(0), ctx.scores(1)};
    pred.label = ctx.scores(1) > ctx.scores(0) ? 1 : 0;
    return pred;
}

double cross_entropy_loss(const Eigen::Vector2d& logits, int true_label) {
    if (true_label != 0 && true_label != 1)
        throw std::invalid_argument("label must be 0 or 1");
    double m = logits.maxCoeff();
    double lse = m + std::log((logits.array() - m).exp().sum());
    return lse - logits(true_label);
}

double backward(const CqcnnModel& m, const Eigen::MatrixXd& a_padded, double p, int n,
                int true_label, CqcnnModel& grad) {
    return backward_impl(m, a_padded, p, n, true_label, grad, nullptr);
}

CqcnnModel train(const Dataset& ds, const TrainConfig& cfg, TrainHistory* history) {
    if (ds.examples.empty()) throw std::invalid_argument("cannot train on an empty dataset");
    if (cfg.learning_rate <= 0.0 || cfg.epochs < 1 || cfg.batch_size < 1)
        throw std::invalid_argument("invalid training configuration");
    for (const auto& ex : ds.examples)
        if (ex.a_padded.rows() != cfg.n_max)
            throw std::invalid_argument("example padding does not match model n_max");

    CqcnnModel model = init_model(cfg.n_max, cfg.seed, cfg.filters_per_layer);
    CqcnnModel grad = make_model(cfg.n_max, cfg.filters_per_layer);
    auto params = param_pointers(model);
    auto grads = param_pointers(grad);

    std::mt19937_64 shuffle_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(ds.examples.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t n_examples = ds.examples.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n_examples; start += cfg.batch_size) {
            std::size_t stop = std::min(n_examples, start + cfg.batch_size);
            zero_model(grad);
            for (std::size_t i = start; i < stop; ++i) {
                const LabeledExample& ex = ds.examples[order[i]];
                int predicted = 0;
                loss_sum += backward_impl(model, ex.a_padded, ex.p, ex.n, ex.label, grad,
                                          &predicted);
                if (predicted == ex.label) ++correct;
            }
            double scale = cfg.learning_rate / static_cast<double>(stop - start);
            for (std::size_t k = 0; k < params.size(); ++k) *params[k] -= scale * *grads[k];
        }
        double mean_loss = loss_sum / static_cast<double>(n_examples);
        if (!std::isfinite(mean_loss))
            throw NumericalError("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
        if (history) {
            history->loss.push_back(mean_loss);
            history->accuracy.push_back(static_cast<double>(correct) /
                                        static_cast<double>(n_examples));
        }
        if (mean_loss < cfg.early_stop_loss) break;
    }
    return model;
}

std::vector<CqcnnModel> train_ensemble(const Dataset& ds, const TrainConfig& cfg,
                                       int workers, std::vector<TrainHistory>* histories) {
    if (cfg.ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
    std::vector<CqcnnModel> models(cfg.ensemble_size);
    if (histories) histories->assign(cfg.ensemble_size, TrainHistory{});
    parallel_for(cfg.ensemble_size, workers, [&](std::size_t i) {
        TrainConfig member = cfg;
        member.seed = cfg.seed + i;
        models[i] = train(ds, member, histories ? &(*histories)[i] : nullptr);
    });
    return models;
}

Prediction predict_ensemble(const std::vector<CqcnnModel>& models,
                            const Eigen::MatrixXd& a_padded, double p, int n) {
    if (models.empty()) throw std::invalid_argument("empty ensemble");
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    std::vector<Eigen::Vector2d> all;
    all.reserve(models.size());
    for (const auto& m : models) {
        Prediction one = forward(m, a_padded, p, n);
        all.emplace_back(one.scores[0], one.scores[1]);
        mean += all.back();
    }
    mean /= static_cast<double>(models.size());
    Eigen::Vector2d var = Eigen::Vector2d::Zero();
    for (const auto& s : all) var += (s - mean).cwiseAbs2();
    var /= static_cast<double>(models.size());

    Prediction pred;
    pred.scores = {mean(0), mean(1)};
    pred.label = mean(1) > mean(0) ? 1 : 0;
    pred.score_std = {std::sqrt(var(0)), std::sqrt(var(1))};
    return pred;
}

CurveResult predict_curve(const std::vector<CqcnnModel>& models, const WalkSetup& setup,
                          const std::vector<double>& grid) {
    if (models.empty()) throw std::invalid_argument("empty ensemble");
    if (grid.empty()) throw std::invalid_argument("empty p grid");
    if (!std::is_sorted(grid.begin(), grid.end()))
        throw std::invalid_argument("p grid must be sorted ascending");
    setup.validate();
    int n = setup.graph.order;
    Eigen::MatrixXd a = pad_matrix(adjacency_matrix(setup.graph), models[0].n_max);

    CurveResult result;
    result.grid = grid;
    result.predictions.reserve(grid.size());
    for (double p : grid) result.predictions.push_back(predict_ensemble(models, a, p, n));

    std::vector<std::size_t> changes;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (result.predictions[i].label != result.predictions[i + 1].label) {
            changes.push_back(i);
            result.transitions.push_back(0.5 * (grid[i] + grid[i + 1]));
        }
    if (changes.size() == 1 && result.predictions[changes[0]].label == 1) {
        double lo = grid[changes[0]];
        double hi = grid[changes[0] + 1];
        while (hi - lo > 1e-3) {
            double mid = 0.5 * (lo + hi);
            (predict_ensemble(models, a, mid, n).label == 1 ? lo : hi) = mid;
        }
        result.crossover = 0.5 * (lo + hi);
    }
    return result;
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
    auto n_cols = rows.at(0).size();
    Eigen::MatrixXd m(n_rows, n_cols);
    for (std::size_t i = 0; i < n_rows; ++i)
        for (std::size_t j = 0; j < n_cols; ++j) m(i, j) = rows.at(i).at(j).get<double>();
    return m;
}

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const ordered_json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr.at(i).get<double>();
    return v;
}

}  // namespace

void save_models(const std::vector<CqcnnModel>& models, const TrainConfig& cfg,
                 const std::filesystem::path& path) {
    if (models.empty()) throw std::invalid_argument("nothing to save");
    ordered_json doc;
    doc["n_max"] = models[0].n_max;
    doc["filters_per_layer"] = models[0].filters_per_layer;
    doc["config"] = {{"learning_rate", cfg.learning_rate},
                     {"epochs", cfg.epochs},
                     {"batch_size", cfg.batch_size},
                     {"seed", cfg.seed},
                     {"ensemble_size", cfg.ensemble_size},
                     {"early_stop_loss", cfg.early_stop_loss}};
    ordered_json members = ordered_json::array();
    for (const auto& m : models) {
        ordered_json jm;
        jm["seed"] = m.seed;
        ordered_json layers = ordered_json::array();
        for (const auto& layer : m.conv) {
            ordered_json jl;
            ordered_json filters = ordered_json::array();
            for (const auto& row : layer.filters) {
                ordered_json jrow = ordered_json::array();
                for (const auto& filt : row)
                    jrow.push_back({{"u", vector_to_json(filt.u)},
                                    {"v", vector_to_json(filt.v)},
                                    {"b", filt.b}});
                filters.push_back(std::move(jrow));
            }
            jl["filters"] = std::move(filters);
            jl["mix"] = matrix_to_json(layer.mix);
            layers.push_back(std::move(jl));
        }
        jm["conv"] = std::move(layers);
        jm["fc1_w"] = matrix_to_json(m.fc1_w);
        jm["fc1_b"] = vector_to_json(m.fc1_b);
        jm["fc2_w"] = matrix_to_json(m.fc2_w);
        jm["fc2_b"] = vector_to_json(m.fc2_b);
        jm["fc3_w"] = matrix_to_json(m.fc3_w);
        jm["fc3_b"] = vector_to_json(m.fc3_b);
        members.push_back(std::move(jm));
    }
    doc["models"] = std::move(members);
    atomic_write(path, doc.dump());
}

std::vector<CqcnnModel> load_models(const std::filesystem::path& path, TrainConfig* cfg) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path.string() + ": parse error: " + e.what());
    }
    int n_max = doc.at("n_max").get<int>();
    int f = doc.at("filters_per_layer").get<int>();
    if (cfg) {
        const auto& jc = doc.at("config");
        cfg->learning_rate = jc.at("learning_rate").get<double>();
        cfg->epochs = jc.at("epochs").get<int>();
        cfg->batch_size = jc.at("batch_size").get<int>();
        cfg->seed = jc.at("seed").get<std::uint64_t>();
        cfg->ensemble_size = jc.at("ensemble_size").get<int>();
        cfg->early_stop_loss = jc.at("early_stop_loss").get<double>();
        cfg->n_max = n_max;
        cfg->filters_per_layer = f;
    }
    std::vector<CqcnnModel> models;
    for (const auto& jm : doc.at("models")) {
        CqcnnModel m = make_model(n_max, f);
        m.seed = jm.at("seed").get<std::uint64_t>();
        const auto& layers = jm.at("conv");
        for (int l = 0; l < 3; ++l) {
            const auto& jl = layers.at(l);
            const auto& filters = jl.at("filters");
            for (std::size_t fi = 0; fi < m.conv[l].filters.size(); ++fi)
                for (std::size_t c = 0; c < m.conv[l].filters[fi].size(); ++c) {
                    const auto& jf = filters.at(fi).at(c);
                    m.conv[l].filters[fi][c].u = vector_from_json(jf.at("u"));
                    m.conv[l].filters[fi][c].v = vector_from_json(jf.at("v"));
                    m.conv[l].filters[fi][c].b = jf.at("b").get<double>();
                }
            m.conv[l].mix = matrix_from_json(jl.at("mix"));
        }
        m.fc1_w = matrix_from_json(jm.at("fc1_w"));
        m.fc1_b = vector_from_json(jm.at("fc1_b"));
        m.fc2_w = matrix_from_json(jm.at("fc2_w"));
        m.fc2_b = vector_from_json(jm.at("fc2_b"));
        m.fc3_w = matrix_from_json(jm.at("fc3_w"));
        m.fc3_b = vector_from_json(jm.at("fc3_b"));
        models.push_back(std::move(m));
    }
    return models;
}

}  // namespace cqwalk
