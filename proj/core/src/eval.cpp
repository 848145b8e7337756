#include "iotwarden/eval.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>

#include "json.hpp"

#include "iotwarden/errors.hpp"

namespace warden {

namespace {

struct LabelKey {
    AttackFamily family;
    AttackVector vector;
    bool operator<(const LabelKey& o) const {
        return family != o.family ? family < o.family : vector < o.vector;
    }
};

}  // namespace

EvalReport evaluate(const DetectorProfile& profile, const std::vector<FeatureRecord>& records,
                    const EvalOptions& options) {
    if (records.empty()) throw ContractError("evaluation needs a non-empty record sequence");

    EvalReport report;
    report.device_id = profile.device_id;
    report.instances = records.size();

    // Score and vote sequentially, tracking how many of the instances inside
    // the current window are malicious-labeled (for FPR attribution).
    std::vector<StreamVerdict> verdicts(records.size());
    std::vector<bool> flags(records.size());
    VoteWindow window(profile.ws_star);
    std::deque<bool> label_window;
    std::size_t malicious_in_window = 0;
    bool prev_anomalous = false;

    for (std::size_t i = 0; i < records.size(); ++i) {
        InstanceFlag flag = score_instance(profile, records[i]);
        flags[i] = flag.anomalous;
        verdicts[i] = window.push(flag.anomalous);

        bool malicious = !records[i].label.is_benign();
        label_window.push_back(malicious);
        malicious_in_window += malicious ? 1 : 0;
        if (label_window.size() > profile.ws_star) {
            malicious_in_window -= label_window.front() ? 1 : 0;
            label_window.pop_front();
        }

        if (verdicts[i].anomalous && !prev_anomalous) ++report.alerts;
        prev_anomalous = verdicts[i].anomalous;

        if (malicious) {
            ++report.malicious_instances;
            if (verdicts[i].anomalous)
                ++report.tp;
            else
                ++report.fn;
        } else {
            ++report.benign_instances;
            if (verdicts[i].anomalous)
                ++report.fp_raw;
            else
                ++report.tn_raw;
            if (malicious_in_window == 0) {
                ++report.benign_eligible;
                if (verdicts[i].anomalous) ++report.benign_eligible_anomalous;
            } else {
                ++report.benign_window_overlap;
            }
        }
    }

    report.fpr = report.benign_eligible > 0
                     ? static_cast<double>(report.benign_eligible_anomalous) /
                           static_cast<double>(report.benign_eligible)
                     : 0.0;
    report.fpr_raw = report.benign_instances > 0
                         ? static_cast<double>(report.fp_raw) /
                               static_cast<double>(report.benign_instances)
                         : 0.0;
    report.tpr_instance_overall =
        report.malicious_instances > 0
            ? static_cast<double>(report.tp) / static_cast<double>(report.malicious_instances)
            : 0.0;

    // Identify attack segments: runs of same-label malicious instances,
    // closed when the gap to the next one exceeds the configured limit.
    std::optional<std::size_t> open_segment;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].label.is_benign()) continue;
        bool start_new = true;
        if (open_segment) {
            SegmentResult& seg = report.segments[*open_segment];
            if (seg.label == records[i].label &&
                i - seg.last_index <= options.segment_gap_instances + 1)
                start_new = false;
        }
        if (start_new) {
            SegmentResult seg;
            seg.label = records[i].label;
            seg.onset_index = i;
            seg.last_index = i;
            seg.malicious_instances = 1;
            seg.onset_time = records[i].timestamp;
            report.segments.push_back(seg);
            open_segment = report.segments.size() - 1;
        } else {
            SegmentResult& seg = report.segments[*open_segment];
            seg.last_index = i;
            ++seg.malicious_instances;
        }
    }

    for (auto& seg : report.segments) {
        std::size_t malicious_seen = 0;
        for (std::size_t i = seg.onset_index; i <= seg.last_index; ++i) {
            if (!records[i].label.is_benign()) ++malicious_seen;
            if (verdicts[i].anomalous) {
                seg.detected = true;
                seg.first_verdict_index = i;
                seg.malicious_to_alert = malicious_seen;
                if (records[seg.onset_index].timestamp && records[i].timestamp)
                    seg.latency_ms =
                        (*records[i].timestamp - *records[seg.onset_index].timestamp) * 1000.0;
                break;
            }
        }
    }

    std::map<LabelKey, VectorStats> by_vector;
    for (const auto& seg : report.segments) {
        auto& vs = by_vector[{seg.label.family, seg.label.vector}];
        vs.label = seg.label;
        ++vs.segments;
        if (seg.detected) ++vs.segments_detected;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].label.is_benign()) continue;
        auto& vs = by_vector[{records[i].label.family, records[i].label.vector}];
        ++vs.instances;
        if (verdicts[i].anomalous) ++vs.instances_detected;
    }

    std::size_t det_segments = 0;
    for (auto& [key, vs] : by_vector) {
        vs.tpr_segment = vs.segments > 0 ? static_cast<double>(vs.segments_detected) /
                                               static_cast<double>(vs.segments)
                                         : 0.0;
        vs.tpr_instance = vs.instances > 0 ? static_cast<double>(vs.instances_detected) /
                                                 static_cast<double>(vs.instances)
                                           : 0.0;
        double lat_sum = 0.0;
        std::size_t lat_n = 0;
        for (const auto& seg : report.segments) {
            if (seg.label == vs.label && seg.latency_ms) {
                lat_sum += *seg.latency_ms;
                ++lat_n;
            }
        }
        if (lat_n > 0) vs.mean_latency_ms = lat_sum / static_cast<double>(lat_n);
        det_segments += vs.segments_detected;
        report.per_vector.push_back(vs);
    }
    report.tpr_segment_overall =
        report.segments.empty()
            ? 0.0
            : static_cast<double>(det_segments) / static_cast<double>(report.segments.size());

    double lat_sum = 0.0, lat_sq = 0.0, mta_sum = 0.0;
    std::size_t lat_n = 0, mta_n = 0;
    for (const auto& seg : report.segments) {
        if (seg.latency_ms) {
            lat_sum += *seg.latency_ms;
            lat_sq += *seg.latency_ms * *seg.latency_ms;
            ++lat_n;
        }
        if (seg.detected) {
            mta_sum += static_cast<double>(seg.malicious_to_alert);
            ++mta_n;
        }
    }
    if (lat_n > 0) {
        double mean = lat_sum / static_cast<double>(lat_n);
        report.latency_mean_ms = mean;
        report.latency_std_ms =
            lat_n > 1 ? std::sqrt(std::max(0.0, (lat_sq - lat_sum * mean) /
                                                    static_cast<double>(lat_n - 1)))
                      : 0.0;
    }
    if (mta_n > 0) report.mean_malicious_to_alert = mta_sum / static_cast<double>(mta_n);

    return report;
}

namespace {

nlohmann::json label_json(const AttackLabel& l) {
    return {{"family", to_string(l.family)}, {"vector", to_string(l.vector)}};
}

}  // namespace

void write_report_json(const EvalReport& report, const DetectorProfile& profile,
                       const std::string& path) {
    nlohmann::json j;
    j["format"] = "iotwarden-eval-report";
    j["version"] = 1;
    j["profile"] = {{"device_id", profile.device_id},
                    {"tr_star", profile.tr_star},
                    {"ws_star", profile.ws_star},
                    {"schema_version", profile.schema_version}};
    j["reference_targets"] = {
        {"tpr", 1.0},
        {"mean_fpr", 0.007},
        {"note", "published cross-device reference values, reported for context, not asserted"}};
    j["counts"] = {{"instances", report.instances},
                   {"benign_instances", report.benign_instances},
                   {"malicious_instances", report.malicious_instances},
                   {"alerts", report.alerts},
                   {"tp", report.tp},
                   {"fn", report.fn},
                   {"fp_raw", report.fp_raw},
                   {"tn_raw", report.tn_raw}};
    j["fpr"] = {{"value", report.fpr},
                {"raw", report.fpr_raw},
                {"benign_eligible", report.benign_eligible},
                {"benign_eligible_anomalous", report.benign_eligible_anomalous},
                {"benign_window_overlap", report.benign_window_overlap},
                {"note", "value excludes benign instances whose voting window overlaps an attack"}};
    j["tpr"] = {{"segment", report.tpr_segment_overall}, {"instance", report.tpr_instance_overall}};
    if (report.latency_mean_ms) {
        j["latency"] = {{"mean_ms", *report.latency_mean_ms},
                        {"std_ms", report.latency_std_ms.value_or(0.0)},
                        {"aggregation", "per detected segment, equal weight"}};
    }
    if (report.mean_malicious_to_alert)
        j["mean_malicious_instances_to_alert"] = *report.mean_malicious_to_alert;

    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : report.segments) {
        nlohmann::json sj;
        sj["label"] = label_json(s.label);
        sj["onset_index"] = s.onset_index;
        sj["last_index"] = s.last_index;
        sj["malicious_instances"] = s.malicious_instances;
        sj["detected"] = s.detected;
        if (s.first_verdict_index) sj["first_verdict_index"] = *s.first_verdict_index;
        if (s.detected) sj["malicious_to_alert"] = s.malicious_to_alert;
        if (s.onset_time) sj["onset_time"] = *s.onset_time;
        if (s.latency_ms) sj["latency_ms"] = *s.latency_ms;
        segs.push_back(std::move(sj));
    }
    j["segments"] = std::move(segs);

    nlohmann::json vecs = nlohmann::json::array();
    for (const auto& v : report.per_vector) {
        nlohmann::json vj;
        vj["label"] = label_json(v.label);
        vj["segments"] = v.segments;
        vj["segments_detected"] = v.segments_detected;
        vj["tpr_segment"] = v.tpr_segment;
        vj["instances"] = v.instances;
        vj["instances_detected"] = v.instances_detected;
        vj["tpr_instance"] = v.tpr_instance;
        if (v.mean_latency_ms) vj["mean_latency_ms"] = *v.mean_latency_ms;
        vecs.push_back(std::move(vj));
    }
    j["per_vector"] = std::move(vecs);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write report file '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

void write_report_csv(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report CSV '" + path + "'");
    out << "scope,family,vector,segments,segments_detected,tpr_segment,instances,"
           "tpr_instance,fpr,mean_latency_ms\n";
    for (const auto& v : report.per_vector) {
        out << "vector," << to_string(v.label.family) << ',' << to_string(v.label.vector) << ','
            << v.segments << ',' << v.segments_detected << ',' << v.tpr_segment << ','
            << v.instances << ',' << v.tpr_instance << ",,";
        if (v.mean_latency_ms) out << *v.mean_latency_ms;
        out << "\n";
    }
    out << "overall,,," << report.segments.size() << ','
        << static_cast<std::size_t>(std::llround(report.tpr_segment_overall *
                                                 static_cast<double>(report.segments.size())))
        << ',' << report.tpr_segment_overall << ',' << report.malicious_instances << ','
        << report.tpr_instance_overall << ',' << report.fpr << ',';
    if (report.latency_mean_ms) out << *report.latency_mean_ms;
    out << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace warden
