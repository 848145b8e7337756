#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iotwarden/autoencoder.hpp"
#include "iotwarden/dataset_io.hpp"

namespace warden {

/// The deployable unit: trained model, its scaling, the anomaly threshold and
/// the majority-vote window size. Immutable once calibrated.
struct DetectorProfile {
    AutoencoderModel model;
    Normalizer normalizer;
    double tr_star = 0.0;
    std::size_t ws_star = 1;
    int schema_version = kFeatureSchemaVersion;
    std::string device_id;
};

/// Candidate learning rates plus the shared training/search parameters.
struct HyperSearchSpace {
    std::vector<double> eta_grid{0.003, 0.010, 0.028};
    std::size_t max_epochs = 100;
    std::size_t patience = 5;
    std::size_t batch_size = 32;
    std::uint64_t rng_seed = 1;
    std::size_t ws_max = 500;
};

/// Anomaly threshold: sample mean plus sample standard deviation (n-1
/// denominator) of the optimization-split reconstruction errors. Needs at
/// least two values.
double compute_threshold(std::span<const double> opt_mses);

/// Smallest window size in 1..ws_max such that no length-ws contiguous window
/// of the flags (stride 1) holds a strict majority of true values. Throws
/// CalibrationError naming the smallest violating rate if none qualifies.
std::size_t search_window_size(const std::vector<bool>& opt_flags, std::size_t ws_max);

struct EtaTrial {
    double eta = 0.0;
    std::vector<double> history;  // per-epoch opt MSE
    double best_mse = 0.0;
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    double train_seconds = 0.0;
    bool diverged = false;
    std::string error;
};

struct CalibrationResult {
    DetectorProfile profile;
    std::vector<EtaTrial> trials;
    double chosen_eta = 0.0;
    double opt_mse_mean = 0.0;
    double opt_mse_std = 0.0;
    std::size_t opt_flagged = 0;  // opt instances above tr*
    double total_seconds = 0.0;
};

/// Full calibration: fit the normalizer on the training split, train one
/// model per candidate eta with early stopping, keep the eta with the lowest
/// best opt MSE, then derive tr* and ws* from the opt split. A diverging eta
/// is recorded and skipped; all etas diverging is an error.
CalibrationResult calibrate(const std::vector<FeatureRecord>& trn,
                            const std::vector<FeatureRecord>& opt, const HyperSearchSpace& space,
                            const std::string& device_id);

void save_profile(const DetectorProfile& profile, const std::string& path);
DetectorProfile load_profile(const std::string& path);

}  // namespace warden
