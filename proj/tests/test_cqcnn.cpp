#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cqwalk/cqcnn.hpp"

using namespace cqwalk;

namespace {

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (unit(rng) < 0.5) a(i, j) = a(j, i) = 1.0;
    return a;
}

double model_loss(const CqcnnModel& m, const Eigen::MatrixXd& a, double p, int n, int label) {
    return -std::log(forward(m, a, p, n).scores[label]);
}

}  // namespace

TEST_CASE("cross_apply basics") {
    CrossFilter f;
    f.u = Eigen::VectorXd::Zero(4);
    f.v = Eigen::VectorXd::Zero(4);
    f.b = 0.0;
    Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(4, 4);
    CHECK(cross_apply(zero, f).isZero());

    // indicator row weights with identity activation broadcast a column
    std::mt19937_64 rng(5);
    Eigen::MatrixXd x = random_symmetric(4, rng);
    f.u(2) = 1.0;
    Eigen::MatrixXd y = cross_apply(x, f, [](double z) { return z; });
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(y(i, j) == x(i, 2));
}

TEST_CASE("cross_apply matches the double-loop reference") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd x(5, 5);
    CrossFilter f;
    f.u.resize(5);
    f.v.resize(5);
    for (int i = 0; i < 5; ++i) {
        f.u(i) = gauss(rng);
        f.v(i) = gauss(rng);
        for (int j = 0; j < 5; ++j) x(i, j) = gauss(rng);
    }
    f.b = gauss(rng);

    Eigen::MatrixXd y = cross_apply(x, f);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double z = f.b;
            for (int k = 0; k < 5; ++k) z += f.u(k) * x(i, k) + f.v(k) * x(k, j);
            CHECK(std::abs(y(i, j) - std::max(0.0, z)) < 1e-12);
        }
}

TEST_CASE("forward produces a softmax distribution, deterministically") {
    CqcnnModel m = init_model(6, 99);
    std::mt19937_64 rng(1);
    Eigen::MatrixXd a = random_symmetric(6, rng);
    Prediction one = forward(m, a, 0.3, 6);
    Prediction two = forward(m, a, 0.3, 6);
    CHECK(one.scores[0] + one.scores[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(one.scores[0] > 0.0);
    CHECK(one.scores[1] > 0.0);
    CHECK(one.scores[0] == two.scores[0]);  // bitwise
    CHECK(one.scores[1] == two.scores[1]);
    CHECK(one.label == (one.scores[1] > one.scores[0] ? 1 : 0));
}

TEST_CASE("cross-entropy loss properties") {
    CHECK(cross_entropy_loss(Eigen::Vector2d(3.0, 3.0), 0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy_loss(Eigen::Vector2d(-1.5, -1.5), 1) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(cross_entropy_loss(Eigen::Vector2d(40.0, 0.0), 0) < 1e-12);
    CHECK_THROWS_AS(cross_entropy_loss(Eigen::Vector2d(0.0, 0.0), 2), std::invalid_argument);

    // gradient of softmax-CE w.r.t. logits is (softmax - onehot); check
    // by finite differences on the logits
    Eigen::Vector2d z(0.7, -0.4);
    Eigen::Vector2d e = (z.array() - z.maxCoeff()).exp();
    Eigen::Vector2d soft = e / e.sum();
    for (int label : {0, 1})
        for (int k = 0; k < 2; ++k) {
            Eigen::Vector2d up = z, down = z;
            up(k) += 1e-6;
            down(k) -= 1e-6;
            double fd = (cross_entropy_loss(up, label) - cross_entropy_loss(down, label)) / 2e-6;
            double analytic = soft(k) - (k == label ? 1.0 : 0.0);
            CHECK(std::abs(fd - analytic) < 1e-6);
        }
}

TEST_CASE("analytic gradients match finite differences") {
    CqcnnModel m = init_model(4, 31, 2);
    std::vector<double*> params;
    for_each_param(m, [&](double& w) { params.push_back(&w); });

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double h = 1e-5;
    double worst = 0.0;
    for (int ex = 0; ex < 5; ++ex) {
        Eigen::MatrixXd a = random_symmetric(4, rng);
        double p = unit(rng);
        int label = unit(rng) < 0.5 ? 0 : 1;

        CqcnnModel grad = make_model(4, 2);
        backward(m, a, p, 4, label, grad);
        std::vector<double> analytic;
        for_each_param(grad, [&](double& g) { analytic.push_back(g); });
        REQUIRE(analytic.size() == params.size());

        for (std::size_t k = 0; k < params.size(); ++k) {
            double saved = *params[k];
            *params[k] = saved + h;
            double up = model_loss(m, a, p, 4, label);
            *params[k] = saved - h;
            double down = model_loss(m, a, p, 4, label);
            *params[k] = saved;
            double fd = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(fd), std::abs(analytic[k]), 1e-6});
            worst = std::max(worst, std::abs(fd - analytic[k]) / denom);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradients of structurally dead filters vanish") {
    CqcnnModel m = init_model(4, 8, 2);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 4);  // all-zero input channel
    CqcnnModel grad = make_model(4, 2);
    backward(m, a, 0.5, 4, 1, grad);
    // first layer u,v see only the zero input, so their gradients are 0
    for (const auto& filt : grad.conv[0].filters)
        for (const auto& f : filt) {
            CHECK(f.u.cwiseAbs().maxCoeff() == 0.0);
            CHECK(f.v.cwiseAbs().maxCoeff() == 0.0);
        }
}

TEST_CASE("one small SGD step decreases the example loss") {
    CqcnnModel m = init_model(4, 7, 2);
    std::mt19937_64 rng(23);
    Eigen::MatrixXd a = random_symmetric(4, rng);
    double p = 0.4;
    int label = 1;

    double before = model_loss(m, a, p, 4, label);
    CqcnnModel grad = make_model(4, 2);
    backward(m, a, p, 4, label, grad);
    std::vector<double*> params;
    std::vector<double*> grads;
    for_each_param(m, [&](double& w) { params.push_back(&w); });
    for_each_param(grad, [&](double& g) { grads.push_back(&g); });
    for (std::size_t k = 0; k < params.size(); ++k) *params[k] -= 1e-4 * *grads[k];
    CHECK(model_loss(m, a, p, 4, label) < before);
}

TEST_CASE("label is invariant under a common logit shift") {
    CqcnnModel m = init_model(4, 3, 2);
    std::mt19937_64 rng(29);
    Eigen::MatrixXd a = random_symmetric(4, rng);
    Prediction base = forward(m, a, 0.2, 4);
    CqcnnModel shifted = m;
    shifted.fc3_b.array() += 5.0;  // same constant on both logits
    Prediction moved = forward(shifted, a, 0.2, 4);
    CHECK(base.label == moved.label);
    CHECK(base.scores[0] == doctest::Approx(moved.scores[0]).epsilon(1e-9));
}

TEST_CASE("training memorizes a single example") {
    Dataset ds;
    ds.flags.n_max = 4;
    LabeledExample ex;
    ex.graph_kind = "cycle:4";
    ex.n = 4;
    ex.a_padded = adjacency_matrix(Graph::cycle(4));
    ex.p = 0.1;
    ex.label = 1;
    ds.examples.push_back(ex);

    TrainConfig cfg;
    cfg.n_max = 4;
    cfg.epochs = 200;
    cfg.batch_size = 1;
    cfg.seed = 3;
    cfg.early_stop_loss = 1e-4;
    TrainHistory history;
    CqcnnModel m = train(ds, cfg, &history);
    CHECK(history.accuracy.back() == 1.0);
    CHECK(forward(m, ex.a_padded, ex.p, ex.n).label == 1);
    for (double l : history.loss) CHECK(std::isfinite(l));
}

TEST_CASE("training is deterministic given the seed") {
    Dataset ds;
    ds.flags.n_max = 4;
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        LabeledExample ex;
        ex.graph_kind = "cycle:4";
        ex.n = 4;
        ex.a_padded = adjacency_matrix(Graph::cycle(4));
        ex.p = unit(rng);
        ex.label = ex.p < 0.5 ? 1 : 0;
        ds.examples.push_back(ex);
    }
    TrainConfig cfg;
    cfg.n_max = 4;
    cfg.epochs = 20;
    cfg.seed = 8;
    CqcnnModel a = train(ds, cfg);
    CqcnnModel b = train(ds, cfg);
    bool equal = true;
    std::vector<double*> pa, pb;
    for_each_param(a, [&](double& w) { pa.push_back(&w); });
    for_each_param(b, [&](double& w) { pb.push_back(&w); });
    for (std::size_t k = 0; k < pa.size(); ++k)
        if (*pa[k] != *pb[k]) equal = false;
    CHECK(equal);

    CHECK_THROWS_AS(train(Dataset{}, cfg), std::invalid_argument);
}

TEST_CASE("degenerate ensembles") {
    Dataset ds;
    ds.flags.n_max = 4;
    LabeledExample ex;
    ex.graph_kind = "cycle:4";
    ex.n = 4;
    ex.a_padded = adjacency_matrix(Graph::cycle(4));
    ex.p = 0.3;
    ex.label = 0;
    ds.examples.push_back(ex);

    TrainConfig cfg;
    cfg.n_max = 4;
    cfg.epochs = 10;
    cfg.seed = 5;
    cfg.ensemble_size = 1;
    auto models = train_ensemble(ds, cfg);
    REQUIRE(models.size() == 1);
    CqcnnModel solo = train(ds, cfg);
    Prediction pe = predict_ensemble(models, ex.a_padded, ex.p, ex.n);
    Prediction ps = forward(solo, ex.a_padded, ex.p, ex.n);
    CHECK(pe.scores[0] == ps.scores[0]);
    REQUIRE(pe.score_std.has_value());
    CHECK((*pe.score_std)[0] == 0.0);

    // identical members give zero spread
    auto twins = std::vector<CqcnnModel>{solo, solo};
    Prediction pt = predict_ensemble(twins, ex.a_padded, ex.p, ex.n);
    CHECK((*pt.score_std)[0] == 0.0);
    CHECK((*pt.score_std)[1] == 0.0);
}

TEST_CASE("model bundles round-trip through JSON") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "cqwalk_models.json";
    std::vector<CqcnnModel> models{init_model(4, 1, 2), init_model(4, 2, 2)};
    TrainConfig cfg;
    cfg.n_max = 4;
    cfg.filters_per_layer = 2;
    cfg.ensemble_size = 2;
    save_models(models, cfg, path);
    TrainConfig loaded_cfg;
    auto loaded = load_models(path, &loaded_cfg);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded_cfg.ensemble_size == 2);
    for (int i = 0; i < 2; ++i) {
        std::vector<double*> pa, pb;
        for_each_param(models[i], [&](double& w) { pa.push_back(&w); });
        for_each_param(loaded[i], [&](double& w) { pb.push_back(&w); });
        REQUIRE(pa.size() == pb.size());
        for (std::size_t k = 0; k < pa.size(); ++k) CHECK(*pa[k] == *pb[k]);
    }
    fs::remove(path);
}

TEST_CASE("predict_curve on a single point has no crossover") {
    std::vector<CqcnnModel> models{init_model(6, 2)};
    CurveResult curve = predict_curve(models, make_cycle(6), {0.5});
    CHECK(curve.predictions.size() == 1);
    CHECK_FALSE(curve.crossover.has_value());
}
