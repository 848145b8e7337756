#include "iotwarden/detector.hpp"

#include "json.hpp"

#include "iotwarden/errors.hpp"

namespace warden {

InstanceFlag score_instance(const DetectorProfile& profile, const FeatureRecord& features) {
    features.validate();
    if (profile.schema_version != kFeatureSchemaVersion)
        throw SchemaError("profile schema v" + std::to_string(profile.schema_version) +
                          " does not match extractor schema v" +
                          std::to_string(kFeatureSchemaVersion));
    if (features.features.size() != profile.model.input_dim())
        throw SchemaError("feature vector dimension does not match the profile's model");
    std::vector<double> x = profile.normalizer.apply(features.features);
    InstanceFlag flag;
    flag.mse = profile.model.forward_mse(x);
    flag.anomalous = flag.mse > profile.tr_star;
    flag.timestamp = features.timestamp;
    return flag;
}

VoteWindow::VoteWindow(std::size_t ws) : ws_(ws) {
    if (ws < 1) throw ContractError("vote window size must be at least 1");
}

StreamVerdict VoteWindow::push(bool anomalous_flag) {
    window_.push_back(anomalous_flag);
    count_ += anomalous_flag ? 1 : 0;
    if (window_.size() > ws_) {
        count_ -= window_.front() ? 1 : 0;
        window_.pop_front();
    }
    StreamVerdict v;
    v.window_fill = window_.size();
    v.vote_count = count_;
    v.anomalous = window_.size() == ws_ && 2 * count_ > ws_;
    return v;
}

std::vector<StreamVerdict> vote_stream(const std::vector<InstanceFlag>& flags,
                                       std::size_t ws_star) {
    VoteWindow window(ws_star);
    std::vector<StreamVerdict> verdicts;
    verdicts.reserve(flags.size());
    for (const auto& f : flags) verdicts.push_back(window.push(f.anomalous));
    return verdicts;
}

Monitor::Monitor(const DetectorProfile& profile, AlertSink sink)
    : profile_(&profile), sink_(std::move(sink)), window_(profile.ws_star) {}

StreamVerdict Monitor::push_flag(const InstanceFlag& flag) {
    if (stopped_) throw ContractError("monitor already stopped by its sink");
    recent_.push_back(flag);
    if (recent_.size() > profile_->ws_star) recent_.pop_front();
    StreamVerdict verdict = window_.push(flag.anomalous);
    ++summary_.instances;

    if (verdict.anomalous && !prev_anomalous_) {
        AlertEvent alert;
        alert.device_id = profile_->device_id;
        alert.verdict_time = flag.timestamp;
        alert.vote_count = verdict.vote_count;
        alert.window_fill = verdict.window_fill;
        // Oldest anomalous flag still inside the window.
        std::size_t oldest_offset = 0;
        for (std::size_t i = 0; i < recent_.size(); ++i) {
            if (recent_[i].anomalous) {
                oldest_offset = recent_.size() - 1 - i;
                alert.first_flag_time = recent_[i].timestamp;
                break;
            }
        }
        alert.instances_to_alert = oldest_offset + 1;
        ++summary_.alerts;
        if (!summary_.first_alert) summary_.first_alert = alert;
        if (sink_ && !sink_(alert)) {
            stopped_ = true;
            summary_.aborted = true;
        }
    }
    prev_anomalous_ = verdict.anomalous;
    ++index_;
    return verdict;
}

StreamVerdict Monitor::push(const FeatureRecord& record) {
    return push_flag(score_instance(*profile_, record));
}

StreamVerdict Monitor::push(const PacketEvent& event) {
    return push(extractor_.process(event));
}

RunSummary Monitor::run(const std::vector<FeatureRecord>& records) {
    for (const auto& r : records) {
        push(r);
        if (stopped_) break;
    }
    return summary_;
}

RunSummary Monitor::run(const std::vector<PacketEvent>& events) {
    for (const auto& e : events) {
        push(e);
        if (stopped_) break;
    }
    return summary_;
}

std::string alert_to_json(const AlertEvent& alert) {
    nlohmann::json j;
    j["device_id"] = alert.device_id;
    if (alert.verdict_time) j["verdict_time"] = *alert.verdict_time;
    j["vote_count"] = alert.vote_count;
    j["window_fill"] = alert.window_fill;
    if (alert.first_flag_time) j["first_flag_time"] = *alert.first_flag_time;
    j["instances_to_alert"] = alert.instances_to_alert;
    if (alert.latency_ms) j["latency_ms"] = *alert.latency_ms;
    return j.dump();
}

}  // namespace warden
