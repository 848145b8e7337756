#include "iotwarden/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "base64.hpp"
#include "model_json.hpp"
#include "iotwarden/errors.hpp"

namespace warden {

Normalizer::Normalizer(std::vector<double> mins, std::vector<double> maxs)
    : mins_(std::move(mins)), maxs_(std::move(maxs)) {
    if (mins_.size() != maxs_.size()) throw ContractError("normalizer min/max size mismatch");
    for (std::size_t i = 0; i < mins_.size(); ++i)
        if (mins_[i] > maxs_[i]) throw ContractError("normalizer has min > max");
}

Normalizer Normalizer::fit(const std::vector<FeatureRecord>& trn) {
    if (trn.empty()) throw ContractError("cannot fit a normalizer on an empty training set");
    std::size_t dim = trn.front().features.size();
    std::vector<double> mins(dim, std::numeric_limits<double>::infinity());
    std::vector<double> maxs(dim, -std::numeric_limits<double>::infinity());
    for (const auto& rec : trn) {
        if (rec.features.size() != dim)
            throw ContractError("inconsistent feature dimensions in training set");
        for (std::size_t i = 0; i < dim; ++i) {
            mins[i] = std::min(mins[i], rec.features[i]);
            maxs[i] = std::max(maxs[i], rec.features[i]);
        }
    }
    return Normalizer(std::move(mins), std::move(maxs));
}

void Normalizer::apply_into(std::span<const double> x, std::span<double> out) const {
    if (x.size() != mins_.size() || out.size() != mins_.size())
        throw ContractError("normalizer applied to a vector of the wrong dimension");
    for (std::size_t i = 0; i < x.size(); ++i) {
        double range = maxs_[i] - mins_[i];
        double v = range > 0.0 ? (x[i] - mins_[i]) / range : 0.0;
        out[i] = std::clamp(v, 0.0, 1.0);
    }
}

std::vector<double> Normalizer::apply(std::span<const double> x) const {
    std::vector<double> out(mins_.size());
    apply_into(x, out);
    return out;
}

std::vector<std::vector<double>> Normalizer::apply_all(
    const std::vector<FeatureRecord>& records) const {
    std::vector<std::vector<double>> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(apply(r.features));
    return out;
}

namespace {

inline double sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace

std::vector<std::size_t> AutoencoderModel::default_dims(std::size_t input_dim) {
    const double ratios[] = {0.75, 0.50, 0.33, 0.25};
    std::vector<std::size_t> dims;
    dims.push_back(input_dim);
    for (double r : ratios) dims.push_back(round_half_up(r * static_cast<double>(input_dim)));
    for (int i = 2; i >= 0; --i)
        dims.push_back(round_half_up(ratios[i] * static_cast<double>(input_dim)));
    dims.push_back(input_dim);
    return dims;
}

AutoencoderModel AutoencoderModel::make(std::size_t input_dim, std::uint64_t seed) {
    return make_with_dims(default_dims(input_dim), seed);
}

AutoencoderModel AutoencoderModel::make_with_dims(std::vector<std::size_t> dims,
                                                  std::uint64_t seed) {
    if (dims.size() < 3) throw ContractError("autoencoder needs at least one hidden layer");
    if (dims.front() != dims.back())
        throw ContractError("autoencoder output size must equal input size");
    for (std::size_t d : dims)
        if (d == 0) throw ContractError("autoencoder layer sizes must be positive");
    std::size_t code = *std::min_element(dims.begin() + 1, dims.end() - 1);
    if (code >= dims.front())
        throw ContractError("code layer (" + std::to_string(code) +
                            ") must be strictly smaller than the input (" +
                            std::to_string(dims.front()) + ")");

    AutoencoderModel m;
    m.dims_ = std::move(dims);
    m.seed_ = seed;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
        DenseLayer layer;
        layer.in_dim = m.dims_[l];
        layer.out_dim = m.dims_[l + 1];
        layer.weights.resize(layer.in_dim * layer.out_dim);
        layer.bias.assign(layer.out_dim, 0.0);
        double bound = std::sqrt(6.0 / static_cast<double>(layer.in_dim + layer.out_dim));
        for (double& w : layer.weights) w = (2.0 * uniform01(rng) - 1.0) * bound;
        m.layers_.push_back(std::move(layer));
    }
    return m;
}

std::size_t AutoencoderModel::code_dim() const {
    return *std::min_element(dims_.begin() + 1, dims_.end() - 1);
}

std::size_t AutoencoderModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
}

namespace {

/// Scratch space reused across forward/backward passes.
struct Workspace {
    std::vector<std::vector<double>> activations;  // activations[0] = input copy
    std::vector<std::vector<double>> deltas;

    void resize_for(const AutoencoderModel& m) {
        const auto& dims = m.dims();
        activations.resize(dims.size());
        deltas.resize(dims.size());
        for (std::size_t i = 0; i < dims.size(); ++i) {
            activations[i].resize(dims[i]);
            deltas[i].resize(dims[i]);
        }
    }
};

void forward_ws(const AutoencoderModel& m, std::span<const double> x, Workspace& ws) {
    if (x.size() != m.input_dim())
        throw ContractError("forward pass input has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(m.input_dim()));
    std::copy(x.begin(), x.end(), ws.activations[0].begin());
    const auto& layers = m.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        const std::vector<double>& in = ws.activations[l];
        std::vector<double>& out = ws.activations[l + 1];
        for (std::size_t o = 0; o < layer.out_dim; ++o) {
            const double* wrow = layer.weights.data() + o * layer.in_dim;
            double z = layer.bias[o];
            for (std::size_t i = 0; i < layer.in_dim; ++i) z += wrow[i] * in[i];
            out[o] = sigmoid(z);
        }
    }
}

double mse_of(std::span<const double> x, const std::vector<double>& recon) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = recon[i] - x[i];
        acc += d * d;
    }
    return acc / static_cast<double>(x.size());
}

double backprop_ws(const AutoencoderModel& m, std::span<const double> x, Gradients& out,
                   Workspace& ws) {
    forward_ws(m, x, ws);
    const auto& layers = m.layers();
    std::size_t last = layers.size();
    const std::vector<double>& recon = ws.activations[last];
    double mse = mse_of(x, recon);

    // d(mse)/d(recon) = 2*(recon - x)/dim, times the sigmoid derivative a(1-a).
    double inv_dim = 2.0 / static_cast<double>(x.size());
    for (std::size_t o = 0; o < recon.size(); ++o)
        ws.deltas[last][o] = inv_dim * (recon[o] - x[o]) * recon[o] * (1.0 - recon[o]);

    for (std::size_t l = layers.size(); l-- > 0;) {
        const DenseLayer& layer = layers[l];
        const std::vector<double>& in = ws.activations[l];
        const std::vector<double>& delta = ws.deltas[l + 1];
        std::vector<double>& wgrad = out.weights[l];
        std::vector<double>& bgrad = out.bias[l];
        for (std::size_t o = 0; o < layer.out_dim; ++o) {
            double d = delta[o];
            bgrad[o] += d;
            double* grow = wgrad.data() + o * layer.in_dim;
            for (std::size_t i = 0; i < layer.in_dim; ++i) grow[i] += d * in[i];
        }
        if (l > 0) {
            std::vector<double>& prev = ws.deltas[l];
            std::fill(prev.begin(), prev.end(), 0.0);
            for (std::size_t o = 0; o < layer.out_dim; ++o) {
                double d = delta[o];
                const double* wrow = layer.weights.data() + o * layer.in_dim;
                for (std::size_t i = 0; i < layer.in_dim; ++i) prev[i] += wrow[i] * d;
            }
            for (std::size_t i = 0; i < layer.in_dim; ++i)
                prev[i] *= in[i] * (1.0 - in[i]);
        }
    }
    return mse;
}

}  // namespace

ForwardResult AutoencoderModel::forward(std::span<const double> x) const {
    Workspace ws;
    ws.resize_for(*this);
    forward_ws(*this, x, ws);
    ForwardResult r;
    r.reconstruction = ws.activations.back();
    r.mse = mse_of(x, r.reconstruction);
    return r;
}

double AutoencoderModel::forward_mse(std::span<const double> x) const {
    Workspace ws;
    ws.resize_for(*this);
    forward_ws(*this, x, ws);
    return mse_of(x, ws.activations.back());
}

Gradients Gradients::zeros_like(const AutoencoderModel& m) {
    Gradients g;
    for (const auto& l : m.layers()) {
        g.weights.emplace_back(l.weights.size(), 0.0);
        g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
}

void Gradients::accumulate_scaled(const Gradients& g, double scale) {
    for (std::size_t l = 0; l < weights.size(); ++l) {
        for (std::size_t i = 0; i < weights[l].size(); ++i) weights[l][i] += scale * g.weights[l][i];
        for (std::size_t i = 0; i < bias[l].size(); ++i) bias[l][i] += scale * g.bias[l][i];
    }
}

double backprop(const AutoencoderModel& model, std::span<const double> x, Gradients& out) {
    Workspace ws;
    ws.resize_for(model);
    return backprop_ws(model, x, out, ws);
}

double mean_mse(const AutoencoderModel& model, const std::vector<std::vector<double>>& xs) {
    if (xs.empty()) throw ContractError("mean_mse over an empty set");
    Workspace ws;
    ws.resize_for(model);
    double acc = 0.0;
    for (const auto& x : xs) {
        forward_ws(model, x, ws);
        acc += mse_of(x, ws.activations.back());
    }
    return acc / static_cast<double>(xs.size());
}

TrainResult train(const std::vector<std::vector<double>>& trn,
                  const std::vector<std::vector<double>>& opt, const TrainingConfig& cfg) {
    if (trn.empty() || opt.empty())
        throw TrainingError("training and optimization sets must be non-empty");
    if (cfg.eta <= 0.0) throw ConfigError("learning rate must be positive");
    if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");

    AutoencoderModel model = AutoencoderModel::make(trn.front().size(), cfg.rng_seed);
    std::mt19937_64 rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);

    Workspace ws;
    ws.resize_for(model);
    Gradients grads = Gradients::zeros_like(model);

    std::vector<std::size_t> order(trn.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    AutoencoderModel best = model;
    double best_mse = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        deterministic_shuffle(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            for (auto& w : grads.weights) std::fill(w.begin(), w.end(), 0.0);
            for (auto& b : grads.bias) std::fill(b.begin(), b.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k)
                batch_loss += backprop_ws(model, trn[order[k]], grads, ws);
            if (!std::isfinite(batch_loss))
                throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
            double step = cfg.eta / static_cast<double>(end - start);
            auto& layers = model.layers();
            for (std::size_t l = 0; l < layers.size(); ++l) {
                auto& W = layers[l].weights;
                auto& b = layers[l].bias;
                const auto& gw = grads.weights[l];
                const auto& gb = grads.bias[l];
                for (std::size_t i = 0; i < W.size(); ++i) W[i] -= step * gw[i];
                for (std::size_t i = 0; i < b.size(); ++i) b[i] -= step * gb[i];
            }
        }

        double opt_mse = mean_mse(model, opt);
        if (!std::isfinite(opt_mse))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1));
        result.history.push_back(opt_mse);
        if (opt_mse < best_mse) {
            best_mse = opt_mse;
            best = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else {
            ++since_best;
        }
        result.epochs_run = epoch + 1;
        if (since_best >= cfg.patience) break;
    }

    result.model = std::move(best);
    return result;
}

namespace detail {

nlohmann::json model_to_json(const AutoencoderModel& model, const Normalizer& normalizer) {
    nlohmann::json j;
    j["format"] = "iotwarden-model";
    j["version"] = 1;
    j["dims"] = model.dims();
    j["activation"] = "sigmoid";
    j["rng_seed"] = model.seed();
    j["normalizer"] = {{"min", encode_doubles(normalizer.mins())},
                       {"max", encode_doubles(normalizer.maxs())}};
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.layers()) {
        layers.push_back({{"in", l.in_dim},
                          {"out", l.out_dim},
                          {"weights", encode_doubles(l.weights)},
                          {"bias", encode_doubles(l.bias)}});
    }
    j["layers"] = std::move(layers);
    return j;
}

nlohmann::json parse_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw IoError(std::string("cannot open ") + what + " file '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw IoError(std::string("corrupt ") + what + " file '" + path + "' (invalid JSON)");
    return j;
}

LoadedModel model_from_json(const nlohmann::json& j, const std::string& origin) {
    try {
        if (j.at("format") != "iotwarden-model")
            throw IoError("'" + origin + "' is not a model file");
        if (j.at("version") != 1)
            throw IoError("unsupported model file version in '" + origin + "'");
        auto dims = j.at("dims").get<std::vector<std::size_t>>();
        auto seed = j.at("rng_seed").get<std::uint64_t>();
        AutoencoderModel model = AutoencoderModel::make_with_dims(dims, seed);
        const auto& layers_json = j.at("layers");
        if (layers_json.size() != model.layers().size())
            throw IoError("corrupt model file '" + origin + "' (layer count mismatch)");
        for (std::size_t l = 0; l < model.layers().size(); ++l) {
            auto& layer = model.layers()[l];
            auto w = decode_doubles(layers_json[l].at("weights").get<std::string>());
            auto b = decode_doubles(layers_json[l].at("bias").get<std::string>());
            if (w.size() != layer.weights.size() || b.size() != layer.bias.size())
                throw IoError("corrupt model file '" + origin + "' (tensor shape mismatch)");
            layer.weights = std::move(w);
            layer.bias = std::move(b);
        }
        auto mins = decode_doubles(j.at("normalizer").at("min").get<std::string>());
        auto maxs = decode_doubles(j.at("normalizer").at("max").get<std::string>());
        return LoadedModel{std::move(model), Normalizer(std::move(mins), std::move(maxs))};
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt model file '" + origin + "': " + e.what());
    }
}

}  // namespace detail

void save_model(const AutoencoderModel& model, const Normalizer& normalizer,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file '" + path + "'");
    out << detail::model_to_json(model, normalizer).dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

LoadedModel load_model(const std::string& path) {
    return detail::model_from_json(detail::parse_json_file(path, "model"), path);
}

}  // namespace warden
