#include "iotwarden/calibration.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "model_json.hpp"
#include "iotwarden/errors.hpp"

namespace warden {

double compute_threshold(std::span<const double> opt_mses) {
    if (opt_mses.size() < 2)
        throw ContractError("threshold needs at least 2 reconstruction errors (sample std)");
    double mean = 0.0;
    for (double v : opt_mses) mean += v;
    mean /= static_cast<double>(opt_mses.size());
    double ssd = 0.0;
    for (double v : opt_mses) {
        double d = v - mean;
        ssd += d * d;
    }
    double sample_std = std::sqrt(ssd / static_cast<double>(opt_mses.size() - 1));
    return mean + sample_std;
}

namespace {

/// True iff some length-ws window of flags holds a strict majority of trues.
/// Returns the worst (highest) violating count seen, for diagnostics.
bool has_majority_window(const std::vector<bool>& flags, std::size_t ws, std::size_t& worst) {
    if (flags.size() < ws) return false;  // no window of that length exists
    std::size_t count = 0;
    for (std::size_t i = 0; i < ws; ++i) count += flags[i] ? 1 : 0;
    worst = count;
    bool violated = 2 * count > ws;
    for (std::size_t i = ws; i < flags.size(); ++i) {
        count += flags[i] ? 1 : 0;
        count -= flags[i - ws] ? 1 : 0;
        worst = std::max(worst, count);
        violated = violated || 2 * count > ws;
    }
    return violated;
}

}  // namespace

std::size_t search_window_size(const std::vector<bool>& opt_flags, std::size_t ws_max) {
    if (opt_flags.empty()) throw ContractError("window search needs a non-empty flag sequence");
    if (ws_max < 1) throw ContractError("ws_max must be at least 1");
    double best_rate = std::numeric_limits<double>::infinity();
    std::size_t best_ws = 0;
    for (std::size_t ws = 1; ws <= ws_max; ++ws) {
        std::size_t worst = 0;
        if (!has_majority_window(opt_flags, ws, worst)) return ws;
        double rate = static_cast<double>(worst) / static_cast<double>(ws);
        if (rate < best_rate) {
            best_rate = rate;
            best_ws = ws;
        }
    }
    char rate_buf[32];
    std::snprintf(rate_buf, sizeof(rate_buf), "%.3f", best_rate);
    throw CalibrationError("no window size up to " + std::to_string(ws_max) +
                           " yields zero majority votes; smallest violating rate " + rate_buf +
                           " at ws=" + std::to_string(best_ws));
}

CalibrationResult calibrate(const std::vector<FeatureRecord>& trn,
                            const std::vector<FeatureRecord>& opt, const HyperSearchSpace& space,
                            const std::string& device_id) {
    if (trn.empty() || opt.empty())
        throw ContractError("calibration needs non-empty training and optimization splits");
    if (space.eta_grid.empty()) throw ConfigError("eta grid must be non-empty");
    for (double eta : space.eta_grid)
        if (eta <= 0.0) throw ConfigError("eta grid values must be positive");

    auto t0 = std::chrono::steady_clock::now();
    CalibrationResult result;

    Normalizer normalizer = Normalizer::fit(trn);
    auto trn_norm = normalizer.apply_all(trn);
    auto opt_norm = normalizer.apply_all(opt);

    std::size_t chosen = space.eta_grid.size();
    double chosen_mse = std::numeric_limits<double>::infinity();
    AutoencoderModel chosen_model = AutoencoderModel::make(kFeatureCount, space.rng_seed);

    for (double eta : space.eta_grid) {
        EtaTrial trial;
        trial.eta = eta;
        TrainingConfig cfg;
        cfg.eta = eta;
        cfg.max_epochs = space.max_epochs;
        cfg.patience = space.patience;
        cfg.batch_size = space.batch_size;
        cfg.rng_seed = space.rng_seed;
        auto te0 = std::chrono::steady_clock::now();
        try {
            TrainResult tr = train(trn_norm, opt_norm, cfg);
            trial.history = std::move(tr.history);
            trial.best_epoch = tr.best_epoch;
            trial.best_mse = trial.history[tr.best_epoch];
            trial.epochs_run = tr.epochs_run;
            if (trial.best_mse < chosen_mse) {
                chosen_mse = trial.best_mse;
                chosen = result.trials.size();
                chosen_model = std::move(tr.model);
            }
        } catch (const TrainingError& e) {
            trial.diverged = true;
            trial.error = e.what();
        }
        trial.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - te0).count();
        result.trials.push_back(std::move(trial));
    }
    if (chosen == space.eta_grid.size())
        throw TrainingError("every learning rate in the grid diverged");

    result.chosen_eta = result.trials[chosen].eta;

    // Per-instance opt reconstruction errors drive both tr* and ws*.
    std::vector<double> opt_mses;
    opt_mses.reserve(opt_norm.size());
    for (const auto& x : opt_norm) opt_mses.push_back(chosen_model.forward_mse(x));
    double tr_star = compute_threshold(opt_mses);

    std::vector<bool> flags(opt_mses.size());
    std::size_t flagged = 0;
    for (std::size_t i = 0; i < opt_mses.size(); ++i) {
        flags[i] = opt_mses[i] > tr_star;
        flagged += flags[i] ? 1 : 0;
    }
    std::size_t ws_star = search_window_size(flags, space.ws_max);

    double mean = 0.0;
    for (double v : opt_mses) mean += v;
    mean /= static_cast<double>(opt_mses.size());
    double ssd = 0.0;
    for (double v : opt_mses) ssd += (v - mean) * (v - mean);

    result.profile = DetectorProfile{std::move(chosen_model), std::move(normalizer), tr_star,
                                     ws_star, kFeatureSchemaVersion, device_id};
    result.opt_mse_mean = mean;
    result.opt_mse_std = std::sqrt(ssd / static_cast<double>(opt_mses.size() - 1));
    result.opt_flagged = flagged;
    result.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

void save_profile(const DetectorProfile& profile, const std::string& path) {
    nlohmann::json j;
    j["format"] = "iotwarden-profile";
    j["version"] = 1;
    j["device_id"] = profile.device_id;
    j["schema_version"] = profile.schema_version;
    j["tr_star"] = profile.tr_star;
    j["ws_star"] = profile.ws_star;
    j["model"] = detail::model_to_json(profile.model, profile.normalizer);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write profile file '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

DetectorProfile load_profile(const std::string& path) {
    nlohmann::json j = detail::parse_json_file(path, "profile");
    try {
        if (j.at("format") != "iotwarden-profile")
            throw IoError("'" + path + "' is not a profile file");
        if (j.at("version") != 1)
            throw IoError("unsupported profile file version in '" + path + "'");
        DetectorProfile p;
        p.device_id = j.at("device_id").get<std::string>();
        p.schema_version = j.at("schema_version").get<int>();
        if (p.schema_version != kFeatureSchemaVersion)
            throw SchemaError("profile '" + path + "' uses feature schema v" +
                              std::to_string(p.schema_version) + ", this build extracts v" +
                              std::to_string(kFeatureSchemaVersion));
        p.tr_star = j.at("tr_star").get<double>();
        p.ws_star = j.at("ws_star").get<std::size_t>();
        if (p.ws_star < 1) throw IoError("corrupt profile file '" + path + "' (ws_star < 1)");
        if (!(p.tr_star >= 0.0))
            throw IoError("corrupt profile file '" + path + "' (tr_star < 0)");
        LoadedModel lm = detail::model_from_json(j.at("model"), path);
        p.model = std::move(lm.model);
        p.normalizer = std::move(lm.normalizer);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("corrupt profile file '" + path + "': " + e.what());
    }
}

}  // namespace warden
