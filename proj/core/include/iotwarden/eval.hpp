#pragma once

#include <optional>
#include <string>
#include <vector>

#include "iotwarden/calibration.hpp"
#include "iotwarden/detector.hpp"

namespace warden {

struct EvalOptions {
    /// A malicious instance more than this many instances after the previous
    /// one of the same label starts a new attack segment.
    std::size_t segment_gap_instances = 50;
};

/// One identified attack launch.
struct SegmentResult {
    AttackLabel label;
    std::size_t onset_index = 0;
    std::size_t last_index = 0;
    std::size_t malicious_instances = 0;
    bool detected = false;
    std::optional<std::size_t> first_verdict_index;  // first anomalous verdict in span
    std::size_t malicious_to_alert = 0;  // malicious instances from onset through that verdict
    std::optional<double> onset_time;
    std::optional<double> latency_ms;
};

struct VectorStats {
    AttackLabel label;
    std::size_t segments = 0;
    std::size_t segments_detected = 0;
    std::size_t instances = 0;
    std::size_t instances_detected = 0;
    double tpr_segment = 0.0;
    double tpr_instance = 0.0;
    std::optional<double> mean_latency_ms;
};

struct EvalReport {
    std::string device_id;
    std::size_t instances = 0;
    std::size_t benign_instances = 0;
    std::size_t malicious_instances = 0;
    std::size_t alerts = 0;

    // Raw verdict-level confusion over every instance; always sums to `instances`.
    std::size_t tp = 0, fn = 0, fp_raw = 0, tn_raw = 0;

    // Headline FPR: benign instances whose voting window holds no malicious
    // instance; window hangover right after an attack is attributed to the
    // attack, not to the benign stream.
    std::size_t benign_eligible = 0;
    std::size_t benign_eligible_anomalous = 0;
    std::size_t benign_window_overlap = 0;
    double fpr = 0.0;
    double fpr_raw = 0.0;

    double tpr_segment_overall = 0.0;
    double tpr_instance_overall = 0.0;

    std::vector<SegmentResult> segments;
    std::vector<VectorStats> per_vector;

    std::optional<double> latency_mean_ms;
    std::optional<double> latency_std_ms;
    std::optional<double> mean_malicious_to_alert;
};

/// Runs the detector over an ordered, labeled record sequence and aggregates
/// verdict-level metrics. Segment latency is measured from the first
/// malicious instance of the segment to its first anomalous verdict.
EvalReport evaluate(const DetectorProfile& profile, const std::vector<FeatureRecord>& records,
                    const EvalOptions& options = {});

/// Report JSON: metrics plus profile metadata and the published reference
/// targets (TPR 1.00, mean FPR 0.007) as non-asserted context fields.
void write_report_json(const EvalReport& report, const DetectorProfile& profile,
                       const std::string& path);

/// Plot-ready CSV: one row per attack vector plus an overall row.
void write_report_csv(const EvalReport& report, const std::string& path);

}  // namespace warden
