#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iotwarden/stream_stats.hpp"

namespace warden {

/// Per-feature min-max scaling fitted on the training split only. Applied
/// values are clipped into [0,1]; constant features map to 0.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(std::vector<double> mins, std::vector<double> maxs);

    static Normalizer fit(const std::vector<FeatureRecord>& trn);

    std::vector<double> apply(std::span<const double> x) const;
    void apply_into(std::span<const double> x, std::span<double> out) const;
    std::vector<std::vector<double>> apply_all(const std::vector<FeatureRecord>& records) const;

    std::size_t dim() const { return mins_.size(); }
    const std::vector<double>& mins() const { return mins_; }
    const std::vector<double>& maxs() const { return maxs_; }

private:
    std::vector<double> mins_;
    std::vector<double> maxs_;
};

/// Deterministic uniform double in [0,1) from a standard mt19937_64, so that
/// seeded runs are bit-identical across platforms and library versions.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Seeded in-place Fisher-Yates shuffle (std::shuffle is not specified
/// bit-exactly across standard libraries).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

/// Fully-connected layer, row-major weights (rows = outputs).
struct DenseLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> weights;  // out_dim x in_dim
    std::vector<double> bias;     // out_dim
};

struct ForwardResult {
    std::vector<double> reconstruction;
    double mse = 0.0;
};

/// Symmetric deep autoencoder with sigmoid units on every hidden and output
/// layer. The default topology shrinks the input through 75%, 50%, 33% and
/// 25% of its dimension and mirrors those sizes back up; encoder and decoder
/// weights are independent.
class AutoencoderModel {
public:
    /// Empty model; only useful as a placeholder before assignment.
    AutoencoderModel() = default;

    /// Builds the default mirrored topology for the given input size.
    static AutoencoderModel make(std::size_t input_dim, std::uint64_t seed);
    /// Builds an arbitrary mirrored topology (first == last == input size).
    static AutoencoderModel make_with_dims(std::vector<std::size_t> dims, std::uint64_t seed);

    /// The hidden sizes used by make(): round-half-up of the four ratios.
    static std::vector<std::size_t> default_dims(std::size_t input_dim);

    ForwardResult forward(std::span<const double> x) const;
    double forward_mse(std::span<const double> x) const;

    std::size_t input_dim() const { return dims_.front(); }
    std::size_t code_dim() const;
    const std::vector<std::size_t>& dims() const { return dims_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t parameter_count() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<DenseLayer> layers_;
    std::uint64_t seed_ = 0;
};

/// Gradients with the same shape as the model's layers.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;

    static Gradients zeros_like(const AutoencoderModel& m);
    void accumulate_scaled(const Gradients& g, double scale);
};

/// Analytic gradient of the per-sample reconstruction MSE with respect to all
/// parameters, plus the sample's MSE. Exposed so finite-difference checks can
/// validate it directly.
double backprop(const AutoencoderModel& model, std::span<const double> x, Gradients& out);

struct TrainingConfig {
    double eta = 0.01;          // gradient step size
    std::size_t max_epochs = 100;  // full passes over the training split
    std::size_t batch_size = 32;
    std::size_t patience = 5;  // epochs without improvement before stopping
    std::uint64_t rng_seed = 1;
};

struct TrainResult {
    AutoencoderModel model;            // parameters of the best epoch
    std::vector<double> history;       // mean opt-set MSE after each epoch
    std::size_t best_epoch = 0;        // index into history
    std::size_t epochs_run = 0;
};

/// Mini-batch SGD on reconstruction MSE. After each epoch the mean MSE on the
/// optimization split is recorded; training stops once it has not improved
/// for `patience` epochs and the best epoch's parameters are returned.
/// Deterministic given rng_seed. Throws TrainingError on divergence.
TrainResult train(const std::vector<std::vector<double>>& trn,
                  const std::vector<std::vector<double>>& opt, const TrainingConfig& cfg);

/// Mean reconstruction MSE over a set of normalized vectors.
double mean_mse(const AutoencoderModel& model, const std::vector<std::vector<double>>& xs);

/// Versioned JSON envelope; tensors are base64 little-endian doubles, so a
/// round trip reproduces forward passes bit-exactly.
void save_model(const AutoencoderModel& model, const Normalizer& normalizer,
                const std::string& path);
struct LoadedModel {
    AutoencoderModel model;
    Normalizer normalizer;
};
LoadedModel load_model(const std::string& path);

}  // namespace warden
