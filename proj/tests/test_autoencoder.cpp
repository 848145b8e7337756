#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "iotwarden/autoencoder.hpp"
#include "iotwarden/errors.hpp"

using namespace warden;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<double>> random_unit_vectors(std::size_t n, std::size_t dim,
                                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& v : out)
        for (auto& x : v) x = uniform01(rng);
    return out;
}

FeatureRecord record_of(const std::vector<double>& features) {
    FeatureRecord r;
    r.features = features;
    return r;
}

}  // namespace

TEST_CASE("normalizer: single record maps to zero everywhere") {
    std::vector<FeatureRecord> trn{record_of(std::vector<double>(kFeatureCount, 7.0))};
    Normalizer n = Normalizer::fit(trn);
    auto y = n.apply(trn[0].features);
    for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("normalizer: midpoint and clipping") {
    FeatureRecord lo = record_of(std::vector<double>(kFeatureCount, 0.0));
    FeatureRecord hi = record_of(std::vector<double>(kFeatureCount, 100.0));
    Normalizer n = Normalizer::fit({lo, hi});
    auto mid = n.apply(std::vector<double>(kFeatureCount, 50.0));
    for (double v : mid) CHECK(v == doctest::Approx(0.5));
    auto over = n.apply(std::vector<double>(kFeatureCount, 120.0));
    for (double v : over) CHECK(v == 1.0);
    auto under = n.apply(std::vector<double>(kFeatureCount, -5.0));
    for (double v : under) CHECK(v == 0.0);
    CHECK_THROWS_AS(Normalizer::fit({}), ContractError);
}

TEST_CASE("default topology follows the 75/50/33/25 rule") {
    auto dims = AutoencoderModel::default_dims(115);
    CHECK(dims == std::vector<std::size_t>{115, 86, 58, 38, 29, 38, 58, 86, 115});
    AutoencoderModel m = AutoencoderModel::make(115, 42);
    CHECK(m.code_dim() == 29);
    CHECK(m.layers().size() == 8);
    // Parameter count drives the serialized size; the published per-device
    // object size (172 kB, float32) corresponds to the same ~37k parameters.
    CHECK(m.parameter_count() == 36876);
}

TEST_CASE("code layer must compress") {
    CHECK_THROWS_AS(AutoencoderModel::make_with_dims({4, 4, 4}, 1), ContractError);
    CHECK_THROWS_AS(AutoencoderModel::make_with_dims({4, 6, 4}, 1), ContractError);
    CHECK_THROWS_AS(AutoencoderModel::make_with_dims({4, 3, 5}, 1), ContractError);
    CHECK_NOTHROW(AutoencoderModel::make_with_dims({4, 3, 4}, 1));
}

TEST_CASE("forward: zero weights give all-0.5 output") {
    AutoencoderModel m = AutoencoderModel::make_with_dims({6, 3, 6}, 1);
    for (auto& layer : m.layers()) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
        std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
    }
    std::vector<double> x(6, 0.5);
    auto r = m.forward(x);
    for (double v : r.reconstruction) CHECK(v == 0.5);
    CHECK(r.mse == 0.0);

    std::vector<double> zeros(6, 0.0);
    CHECK(m.forward(zeros).mse == doctest::Approx(0.25));
}

TEST_CASE("forward: hand-computed 2-2-2 toy network") {
    AutoencoderModel m = AutoencoderModel::make_with_dims({2, 1, 2}, 1);
    // Layer 0: 1x2, layer 1: 2x1.
    m.layers()[0].weights = {0.5, -0.25};
    m.layers()[0].bias = {0.1};
    m.layers()[1].weights = {1.5, -2.0};
    m.layers()[1].bias = {0.0, 0.3};

    auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    double x0 = 0.8, x1 = 0.2;
    double h = sigmoid(0.5 * x0 - 0.25 * x1 + 0.1);
    double y0 = sigmoid(1.5 * h);
    double y1 = sigmoid(-2.0 * h + 0.3);
    double mse = ((y0 - x0) * (y0 - x0) + (y1 - x1) * (y1 - x1)) / 2.0;

    auto r = m.forward(std::vector<double>{x0, x1});
    CHECK(r.reconstruction[0] == doctest::Approx(y0).epsilon(1e-15));
    CHECK(r.reconstruction[1] == doctest::Approx(y1).epsilon(1e-15));
    CHECK(r.mse == doctest::Approx(mse).epsilon(1e-15));
}

TEST_CASE("forward: dimension mismatch throws") {
    AutoencoderModel m = AutoencoderModel::make_with_dims({4, 2, 4}, 1);
    CHECK_THROWS_AS(m.forward(std::vector<double>(3, 0.0)), ContractError);
}

TEST_CASE("analytic gradient matches central finite differences") {
    AutoencoderModel model = AutoencoderModel::make_with_dims({6, 4, 3, 2, 3, 4, 6}, 9);
    auto points = random_unit_vectors(20, 6, 77);
    const double h = 1e-6;
    double worst = 0.0;
    for (const auto& x : points) {
        Gradients grads = Gradients::zeros_like(model);
        backprop(model, x, grads);
        for (std::size_t l = 0; l < model.layers().size(); ++l) {
            auto check_param = [&](double& param, double analytic) {
                double keep = param;
                param = keep + h;
                double up = model.forward_mse(x);
                param = keep - h;
                double down = model.forward_mse(x);
                param = keep;
                double fd = (up - down) / (2.0 * h);
                double rel = std::abs(analytic - fd) /
                             std::max({1e-6, std::abs(analytic), std::abs(fd)});
                worst = std::max(worst, rel);
            };
            for (std::size_t i = 0; i < model.layers()[l].weights.size(); ++i)
                check_param(model.layers()[l].weights[i], grads.weights[l][i]);
            for (std::size_t i = 0; i < model.layers()[l].bias.size(); ++i)
                check_param(model.layers()[l].bias[i], grads.bias[l][i]);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("train: a repeated vector is trivially learnable") {
    std::vector<double> v(8, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.2 + 0.08 * static_cast<double>(i);
    std::vector<std::vector<double>> data(32, v);
    TrainingConfig cfg;
    cfg.eta = 0.5;
    cfg.max_epochs = 200;
    cfg.patience = 200;
    cfg.rng_seed = 3;

    // Custom small topology to keep it fast.
    auto trn = data, opt = data;
    AutoencoderModel init = AutoencoderModel::make_with_dims({8, 6, 4, 6, 8}, 3);
    (void)init;
    TrainResult r = train(trn, opt, cfg);
    CHECK(r.history.back() < r.history.front());
    CHECK(r.history[r.best_epoch] <= r.history.front());
}

TEST_CASE("train: patience zero runs exactly one epoch") {
    auto data = random_unit_vectors(16, 8, 5);
    TrainingConfig cfg;
    cfg.eta = 0.1;
    cfg.max_epochs = 50;
    cfg.patience = 0;
    TrainResult r = train(data, data, cfg);
    CHECK(r.epochs_run == 1);
    CHECK(r.history.size() == 1);
}

TEST_CASE("train: early stopping returns the best epoch's parameters") {
    auto trn = random_unit_vectors(64, 10, 11);
    auto opt = random_unit_vectors(32, 10, 12);
    TrainingConfig cfg;
    cfg.eta = 2.0;  // deliberately jumpy so the opt MSE is non-monotone
    cfg.max_epochs = 40;
    cfg.patience = 6;
    TrainResult r = train(trn, opt, cfg);
    double best = r.history[r.best_epoch];
    for (double v : r.history) CHECK(best <= v);
    // Returned parameters really are the best epoch's.
    CHECK(mean_mse(r.model, opt) == best);
}

TEST_CASE("train: deterministic given the seed") {
    auto trn = random_unit_vectors(48, 9, 21);
    auto opt = random_unit_vectors(24, 9, 22);
    TrainingConfig cfg;
    cfg.eta = 0.3;
    cfg.max_epochs = 12;
    cfg.patience = 12;
    cfg.rng_seed = 1234;
    TrainResult a = train(trn, opt, cfg);
    TrainResult b = train(trn, opt, cfg);
    CHECK(a.history == b.history);
    for (std::size_t l = 0; l < a.model.layers().size(); ++l) {
        CHECK(a.model.layers()[l].weights == b.model.layers()[l].weights);
        CHECK(a.model.layers()[l].bias == b.model.layers()[l].bias);
    }
    cfg.rng_seed = 1235;
    TrainResult c = train(trn, opt, cfg);
    CHECK(a.model.layers()[0].weights != c.model.layers()[0].weights);
}

TEST_CASE("train: divergence is reported with the epoch") {
    auto data = random_unit_vectors(32, 6, 8);
    TrainingConfig cfg;
    cfg.eta = 1e300;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    try {
        train(data, data, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("model save/load reproduces forward passes bit-exactly") {
    auto tmp = fs::temp_directory_path() / "iotwarden_model_test.json";
    AutoencoderModel m = AutoencoderModel::make(kFeatureCount, 99);
    std::vector<double> mins(kFeatureCount, 0.0), maxs(kFeatureCount, 1.0);
    {
        std::mt19937_64 rng(4);
        for (auto& v : maxs) v = 1.0 + uniform01(rng) * 100.0;
    }
    Normalizer norm(mins, maxs);
    save_model(m, norm, tmp.string());
    LoadedModel loaded = load_model(tmp.string());
    CHECK(loaded.normalizer.mins() == mins);
    CHECK(loaded.normalizer.maxs() == maxs);

    auto points = random_unit_vectors(100, kFeatureCount, 31);
    for (const auto& x : points) {
        double a = m.forward_mse(x);
        double b = loaded.model.forward_mse(x);
        CHECK(a == b);  // bitwise
    }

    // Serialized default model ends up in the hundreds-of-kB range.
    auto bytes = fs::file_size(tmp);
    CHECK(bytes > 100'000);
    CHECK(bytes < 1'000'000);
    fs::remove(tmp);
}

TEST_CASE("model load rejects truncated and foreign files") {
    auto tmp = fs::temp_directory_path() / "iotwarden_model_bad.json";
    AutoencoderModel m = AutoencoderModel::make_with_dims({6, 3, 6}, 7);
    Normalizer norm(std::vector<double>(6, 0.0), std::vector<double>(6, 1.0));
    save_model(m, norm, tmp.string());

    std::ifstream in(tmp);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    {
        std::ofstream out(tmp);
        out << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_model(tmp.string()), IoError);

    {
        std::ofstream out(tmp);
        out << "{\"format\":\"something-else\",\"version\":1}";
    }
    CHECK_THROWS_AS(load_model(tmp.string()), IoError);
    fs::remove(tmp);
}
