// Command-line front end: extract features from packet events, train and
// calibrate per-device detector profiles, run online detection, evaluate
// labeled data, and synthesize test traffic.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "iotwarden/autoencoder.hpp"
#include "iotwarden/calibration.hpp"
#include "iotwarden/dataset_io.hpp"
#include "iotwarden/detector.hpp"
#include "iotwarden/errors.hpp"
#include "iotwarden/eval.hpp"
#include "iotwarden/synth.hpp"

namespace {

using namespace warden;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

HeaderMapping resolve_mapping(const std::string& spec) {
    if (spec.empty() || spec == "canonical") return HeaderMapping::identity();
    if (spec == "nbaiot") return HeaderMapping::nbaiot();
    return HeaderMapping::load(spec);
}

AttackLabel parse_label_spec(const std::string& spec) {
    std::size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw ConfigError("label must be written family:vector, got '" + spec + "'");
    return AttackLabel::parse(spec.substr(0, colon), spec.substr(colon + 1));
}

/// "path[:family:vector]" for eval inputs.
struct FileSpec {
    std::string path;
    std::optional<AttackLabel> label;
};

FileSpec parse_file_spec(const std::string& spec) {
    std::size_t last = spec.rfind(':');
    if (last == std::string::npos) return {spec, std::nullopt};
    std::size_t second = spec.rfind(':', last - 1);
    if (second == std::string::npos) return {spec, std::nullopt};
    std::string family = spec.substr(second + 1, last - second - 1);
    std::string vector = spec.substr(last + 1);
    try {
        return {spec.substr(0, second), AttackLabel::parse(family, vector)};
    } catch (const ParseError&) {
        return {spec, std::nullopt};  // colons belonged to the path
    }
}

std::vector<PacketEvent> load_events_with_direction(const std::string& path,
                                                    const std::string& format_id,
                                                    const std::string& device_ip) {
    EventFormat format = format_id.empty() ? event_format_from_path(path)
                                           : event_format_from_string(format_id);
    ReadEventsResult result = read_events(path, format);
    if (result.non_monotonic > 0)
        std::cerr << "warning: " << result.non_monotonic
                  << " events have timestamps earlier than their predecessor\n";
    IpAddress device = IpAddress::parse(device_ip);
    for (auto& e : result.events)
        e.direction = e.src_ip == device ? Direction::Outbound : Direction::Inbound;
    return result.events;
}

int cmd_extract(const std::string& in, const std::string& device_ip, const std::string& out,
                const std::string& labels_path, const std::string& format_id) {
    auto events = load_events_with_direction(in, format_id, device_ip);
    FeatureExtractor extractor;
    std::vector<FeatureRecord> records;
    records.reserve(events.size());
    for (const auto& e : events) records.push_back(extractor.process(e));
    if (!labels_path.empty()) apply_label_ranges(records, read_label_ranges(labels_path));
    write_feature_csv(out, records);
    std::cout << "extracted " << records.size() << " feature rows -> " << out << "\n";
    return kExitOk;
}

HyperSearchSpace load_train_config(const std::string& path) {
    HyperSearchSpace space;
    if (path.empty()) return space;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file '" + path + "' is not valid JSON");
    try {
        if (j.contains("eta_grid")) space.eta_grid = j["eta_grid"].get<std::vector<double>>();
        space.max_epochs = j.value("max_epochs", space.max_epochs);
        space.patience = j.value("patience", space.patience);
        space.batch_size = j.value("batch_size", space.batch_size);
        space.rng_seed = j.value("seed", space.rng_seed);
        space.ws_max = j.value("ws_max", space.ws_max);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "': " + e.what());
    }
    return space;
}

int cmd_train(const std::string& features_path, const std::string& mapping_spec,
              const std::string& config_path, const std::string& device_id,
              const std::string& out, std::optional<std::uint64_t> seed) {
    HeaderMapping mapping = resolve_mapping(mapping_spec);
    if (std::holds_alternative<std::monostate>(mapping.label_rule()))
        mapping = mapping.with_label(AttackLabel::benign());
    auto records = read_feature_csv(features_path, mapping);
    for (std::size_t i = 0; i < records.size(); ++i)
        if (!records[i].label.is_benign())
            throw ConfigError("training input must be benign-only; record " + std::to_string(i) +
                              " is labeled " + to_string(records[i].label.family) + ":" +
                              to_string(records[i].label.vector));

    HyperSearchSpace space = load_train_config(config_path);
    if (seed) space.rng_seed = *seed;

    DatasetSplit split = split_chronological(records);
    std::cout << "split: trn=" << split.trn.size() << " opt=" << split.opt.size()
              << " tst=" << split.tst.size() << " (tst unused by training)\n";

    auto trn = slice(records, split.trn);
    auto opt = slice(records, split.opt);
    CalibrationResult result = calibrate(trn, opt, space, device_id);

    for (const auto& trial : result.trials) {
        if (trial.diverged) {
            std::cout << "eta=" << trial.eta << " diverged: " << trial.error << "\n";
            continue;
        }
        std::printf("eta=%g epochs=%zu best_epoch=%zu best_opt_mse=%.6g (%.1fs)\n", trial.eta,
                    trial.epochs_run, trial.best_epoch + 1, trial.best_mse, trial.train_seconds);
        std::cout << "  history:";
        for (double v : trial.history) std::printf(" %.6g", v);
        std::cout << "\n";
    }
    std::printf("chosen eta=%g  tr*=%.9g  ws*=%zu  (opt flags above tr*: %zu/%zu)\n",
                result.chosen_eta, result.profile.tr_star, result.profile.ws_star,
                result.opt_flagged, split.opt.size());
    std::printf("calibration wall time: %.1fs\n", result.total_seconds);

    save_profile(result.profile, out);
    std::cout << "profile -> " << out << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& profile_path, const std::vector<std::string>& file_specs,
             const std::string& mapping_spec, const std::string& out,
             std::string plot_csv) {
    DetectorProfile profile = load_profile(profile_path);
    HeaderMapping base_mapping = resolve_mapping(mapping_spec);
    std::vector<FeatureRecord> records;
    for (const auto& spec_text : file_specs) {
        FileSpec spec = parse_file_spec(spec_text);
        HeaderMapping mapping = spec.label ? base_mapping.with_label(*spec.label) : base_mapping;
        auto part = read_feature_csv(spec.path, mapping);
        records.insert(records.end(), part.begin(), part.end());
    }

    EvalReport report = evaluate(profile, records);
    write_report_json(report, profile, out);
    if (plot_csv.empty()) plot_csv = out + ".plot.csv";
    write_report_csv(report, plot_csv);

    std::printf("instances=%zu benign=%zu malicious=%zu alerts=%zu\n", report.instances,
                report.benign_instances, report.malicious_instances, report.alerts);
    std::printf("TPR segment=%.4f instance=%.4f  FPR=%.6f (raw %.6f)\n",
                report.tpr_segment_overall, report.tpr_instance_overall, report.fpr,
                report.fpr_raw);
    if (report.latency_mean_ms)
        std::printf("detection latency: %.1f +- %.1f ms (per segment, equal weight)\n",
                    *report.latency_mean_ms, report.latency_std_ms.value_or(0.0));
    std::cout << "report -> " << out << ", plot data -> " << plot_csv << "\n";
    return kExitOk;
}

int cmd_detect(const std::string& profile_path, const std::string& in,
               const std::string& device_ip, const std::string& mapping_spec,
               const std::string& out, const std::string& format_id) {
    DetectorProfile profile = load_profile(profile_path);

    std::ofstream out_file;
    std::ostream* alert_stream = &std::cout;
    if (!out.empty()) {
        out_file.open(out);
        if (!out_file) throw IoError("cannot write alert file '" + out + "'");
        alert_stream = &out_file;
    }
    Monitor monitor(profile, [&](const AlertEvent& alert) {
        *alert_stream << alert_to_json(alert) << "\n";
        return static_cast<bool>(*alert_stream);
    });

    RunSummary summary;
    bool is_events = !device_ip.empty();
    if (is_events) {
        auto events = load_events_with_direction(in, format_id, device_ip);
        summary = monitor.run(events);
    } else {
        auto records = read_feature_csv(in, resolve_mapping(mapping_spec));
        summary = monitor.run(records);
    }
    std::cerr << "instances=" << summary.instances << " alerts=" << summary.alerts
              << (summary.aborted ? " (aborted by sink)" : "") << "\n";
    return summary.aborted ? kExitRuntime : kExitOk;
}

int cmd_synth(const std::string& config_path, const std::string& out,
              const std::string& labels_out, std::optional<std::uint64_t> seed) {
    SynthConfig cfg = SynthConfig::load(config_path);
    if (seed) cfg.seed = *seed;
    SynthResult result = synthesize(cfg);
    write_events(out, result.events, event_format_from_path(out));
    std::string labels_path = labels_out.empty() ? out + ".labels.csv" : labels_out;
    write_label_ranges(labels_path, result.labels);
    std::size_t attack_packets = 0;
    for (const auto& r : result.labels) attack_packets += r.last_index - r.first_index + 1;
    std::cout << "events: " << result.events.size() << " (" << attack_packets
              << " attack packets in " << cfg.attacks.size() << " segments) -> " << out << "\n";
    std::cout << "labels -> " << labels_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IoT botnet attack detector: damped traffic statistics, per-device "
                 "autoencoders, majority-vote alerting"};
    app.require_subcommand(1);

    // extract
    auto* extract = app.add_subcommand("extract", "Packet events -> canonical feature CSV");
    std::string ex_in, ex_device_ip, ex_out, ex_labels, ex_format;
    extract->add_option("--in", ex_in, "Event file (.csv or .jsonl)")->required();
    extract->add_option("--device-ip", ex_device_ip, "Monitored device IP (sets direction)")
        ->required();
    extract->add_option("--out", ex_out, "Output feature CSV")->required();
    extract->add_option("--labels", ex_labels, "Label sidecar to stamp onto rows");
    extract->add_option("--format", ex_format, "Event format id (default: by extension)");

    // train
    auto* train_cmd = app.add_subcommand("train", "Benign features -> calibrated profile");
    std::string tr_features, tr_mapping = "canonical", tr_config, tr_device = "device", tr_out;
    std::optional<std::uint64_t> tr_seed;
    train_cmd->add_option("--features", tr_features, "Benign-only feature CSV")->required();
    train_cmd->add_option("--mapping", tr_mapping, "canonical | nbaiot | mapping file");
    train_cmd->add_option("--config", tr_config, "Training config JSON");
    train_cmd->add_option("--device-id", tr_device, "Identifier stored in the profile");
    train_cmd->add_option("--out", tr_out, "Output profile JSON")->required();
    train_cmd->add_option("--seed", tr_seed, "Overrides the config RNG seed");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Labeled features -> metrics report");
    std::string ev_profile, ev_mapping = "canonical", ev_out, ev_plot;
    std::vector<std::string> ev_files;
    eval_cmd->add_option("--profile", ev_profile, "Profile JSON")->required();
    eval_cmd->add_option("--mapping", ev_mapping, "canonical | nbaiot | mapping file");
    eval_cmd->add_option("--out", ev_out, "Output report JSON")->required();
    eval_cmd->add_option("--plot-csv", ev_plot, "Plot-ready CSV (default: <out>.plot.csv)");
    eval_cmd->add_option("files", ev_files, "Feature files, each optionally path:family:vector")
        ->required();

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "Online monitoring with NDJSON alerts");
    std::string dt_profile, dt_in, dt_device_ip, dt_mapping = "canonical", dt_out, dt_format;
    detect_cmd->add_option("--profile", dt_profile, "Profile JSON")->required();
    detect_cmd->add_option("--in", dt_in, "Feature CSV, or event file with --device-ip")
        ->required();
    detect_cmd->add_option("--device-ip", dt_device_ip,
                           "Treat --in as packet events for this device");
    detect_cmd->add_option("--mapping", dt_mapping, "canonical | nbaiot | mapping file");
    detect_cmd->add_option("--out", dt_out, "Alert NDJSON file (default: stdout)");
    detect_cmd->add_option("--format", dt_format, "Event format id (default: by extension)");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate deterministic labeled test traffic");
    std::string sy_config, sy_out, sy_labels;
    std::optional<std::uint64_t> sy_seed;
    synth_cmd->add_option("--config", sy_config, "Synth config JSON")->required();
    synth_cmd->add_option("--out", sy_out, "Output event file (.csv or .jsonl)")->required();
    synth_cmd->add_option("--labels-out", sy_labels, "Label sidecar (default: <out>.labels.csv)");
    synth_cmd->add_option("--seed", sy_seed, "Overrides the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*extract) return cmd_extract(ex_in, ex_device_ip, ex_out, ex_labels, ex_format);
        if (*train_cmd)
            return cmd_train(tr_features, tr_mapping, tr_config, tr_device, tr_out, tr_seed);
        if (*eval_cmd) return cmd_eval(ev_profile, ev_files, ev_mapping, ev_out, ev_plot);
        if (*detect_cmd)
            return cmd_detect(dt_profile, dt_in, dt_device_ip, dt_mapping, dt_out, dt_format);
        if (*synth_cmd) return cmd_synth(sy_config, sy_out, sy_labels, sy_seed);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
