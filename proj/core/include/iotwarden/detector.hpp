#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "iotwarden/calibration.hpp"
#include "iotwarden/stream_stats.hpp"

namespace warden {

/// Per-instance decision: anomalous iff mse is strictly above tr*.
struct InstanceFlag {
    double mse = 0.0;
    bool anomalous = false;
    std::optional<double> timestamp;
};

/// Majority-vote decision over the current window. Verdicts emitted before
/// the window first fills are benign by definition.
struct StreamVerdict {
    bool anomalous = false;
    std::size_t window_fill = 0;
    std::size_t vote_count = 0;
};

/// Emitted at each benign-to-anomalous verdict transition.
struct AlertEvent {
    std::string device_id;
    std::optional<double> first_flag_time;  // oldest anomalous flag in the window
    std::optional<double> verdict_time;     // flag that produced the verdict
    std::size_t instances_to_alert = 0;     // verdict index - oldest anomalous index + 1
    std::size_t vote_count = 0;
    std::size_t window_fill = 0;
    std::optional<double> latency_ms;  // filled by evaluation when onset is known
};

/// Normalizes (with clipping), runs the forward pass and compares the
/// reconstruction error strictly against the profile's threshold.
InstanceFlag score_instance(const DetectorProfile& profile, const FeatureRecord& features);

/// Sliding strict-majority vote over the most recent ws flags.
class VoteWindow {
public:
    explicit VoteWindow(std::size_t ws);

    StreamVerdict push(bool anomalous_flag);
    std::size_t window_size() const { return ws_; }
    std::size_t fill() const { return window_.size(); }

private:
    std::size_t ws_;
    std::deque<bool> window_;
    std::size_t count_ = 0;
};

/// One verdict per flag, window sliding by one.
std::vector<StreamVerdict> vote_stream(const std::vector<InstanceFlag>& flags, std::size_t ws_star);

struct RunSummary {
    std::size_t instances = 0;
    std::size_t alerts = 0;
    bool aborted = false;  // the sink refused an alert
    std::optional<AlertEvent> first_alert;
};

/// Online monitor for one device stream: score, vote, emit edge-triggered
/// alerts. The sink returns false to stop the run (e.g. downstream failure);
/// the summary then covers what was processed.
class Monitor {
public:
    using AlertSink = std::function<bool(const AlertEvent&)>;

    Monitor(const DetectorProfile& profile, AlertSink sink);

    /// Feeds one already-extracted record; returns its verdict.
    StreamVerdict push(const FeatureRecord& record);
    /// Feeds one raw packet through the embedded extractor.
    StreamVerdict push(const PacketEvent& event);

    RunSummary run(const std::vector<FeatureRecord>& records);
    RunSummary run(const std::vector<PacketEvent>& events);

    const RunSummary& summary() const { return summary_; }

private:
    StreamVerdict push_flag(const InstanceFlag& flag);

    const DetectorProfile* profile_;
    AlertSink sink_;
    FeatureExtractor extractor_;
    VoteWindow window_;
    std::deque<InstanceFlag> recent_;  // last ws flags, aligned with the vote window
    std::size_t index_ = 0;
    bool prev_anomalous_ = false;
    bool stopped_ = false;
    RunSummary summary_;
};

/// The alert sink line format: newline-delimited JSON.
std::string alert_to_json(const AlertEvent& alert);

}  // namespace warden
