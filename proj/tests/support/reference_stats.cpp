#include "reference_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace warden::testing {

namespace {

double decay(double lambda, double dt) {
    return std::exp2(-lambda * dt);
}

struct SideState {
    std::vector<std::pair<double, double>> samples;
    double last_touch = 0.0;
    bool touched = false;
};

/// Comparable forms of the key identities.
using IpKey = std::tuple<int, std::array<std::uint8_t, 16>>;
using MacIpKey = std::tuple<std::array<std::uint8_t, 6>, IpKey>;
using ChanKey = std::tuple<IpKey, IpKey>;
using SockKey = std::tuple<IpKey, IpKey, int, int, bool>;
using PairKey = std::tuple<IpKey, int, IpKey, int, bool>;

IpKey ip_key(const IpAddress& a) {
    return {a.family == IpAddress::Family::V4 ? 4 : 6, a.bytes};
}

PairKey pair_key(const IpAddress& x_ip, int x_port, const IpAddress& y_ip, int y_port,
                 bool has_ports) {
    IpKey xk = ip_key(x_ip), yk = ip_key(y_ip);
    if (std::tie(xk, x_port) <= std::tie(yk, y_port))
        return {xk, x_port, yk, y_port, has_ports};
    return {yk, y_port, xk, x_port, has_ports};
}

}  // namespace

Stat1DView reference_stat1d(const std::vector<std::pair<double, double>>& samples, double t_now,
                            double lambda) {
    double w = 0.0, ls = 0.0, ss = 0.0;
    for (const auto& [t, x] : samples) {
        double g = decay(lambda, t_now - t);
        w += g;
        ls += g * x;
        ss += g * x * x;
    }
    Stat1DView v;
    v.weight = w;
    if (w > 0.0) {
        v.mean = ls / w;
        v.variance = std::max(0.0, ss / w - v.mean * v.mean);
    }
    return v;
}

double relative_error(double value, double reference) {
    return std::abs(value - reference) / std::max(1.0, std::abs(reference));
}

std::vector<std::array<double, kFeatureCount>> reference_extract(
    const std::vector<PacketEvent>& trace) {
    const auto& rates = decay_rates();
    const auto& schema = FeatureSchema::v1();
    std::vector<std::array<double, kFeatureCount>> out(trace.size());

    // Group packet indices by every key identity.
    std::map<IpKey, std::vector<std::size_t>> by_srcip;
    std::map<MacIpKey, std::vector<std::size_t>> by_macip;
    std::map<ChanKey, std::vector<std::size_t>> by_chan;
    std::map<SockKey, std::vector<std::size_t>> by_sock;
    std::map<PairKey, std::vector<std::size_t>> by_chan_pair;
    std::map<PairKey, std::vector<std::size_t>> by_sock_pair;

    for (std::size_t n = 0; n < trace.size(); ++n) {
        const PacketEvent& e = trace[n];
        by_srcip[ip_key(e.src_ip)].push_back(n);
        by_macip[{e.src_mac.bytes, ip_key(e.src_ip)}].push_back(n);
        by_chan[{ip_key(e.src_ip), ip_key(e.dst_ip)}].push_back(n);
        by_sock[{ip_key(e.src_ip), ip_key(e.dst_ip), e.src_port.value_or(0),
                 e.dst_port.value_or(0), e.has_ports()}]
            .push_back(n);
        by_chan_pair[pair_key(e.src_ip, 0, e.dst_ip, 0, false)].push_back(n);
        by_sock_pair[pair_key(e.src_ip, e.src_port.value_or(0), e.dst_ip,
                              e.dst_port.value_or(0), e.has_ports())]
            .push_back(n);
    }

    // 1D slots: closed-form sums over the group's prefix ending at the packet.
    auto fill_1d = [&](const std::vector<std::size_t>& group, KeyKind kind, bool jitter) {
        std::vector<std::pair<double, double>> samples;
        for (std::size_t pos = 0; pos < group.size(); ++pos) {
            std::size_t n = group[pos];
            double t = trace[n].timestamp;
            if (jitter) {
                if (pos > 0) samples.emplace_back(t, t - trace[group[pos - 1]].timestamp);
            } else {
                samples.emplace_back(t, static_cast<double>(trace[n].size));
            }
            for (std::size_t d = 0; d < kDecayCount; ++d) {
                Stat1DView v = reference_stat1d(samples, t, rates[d].lambda);
                for (std::size_t i = 0; i < kFeatureCount; ++i) {
                    const SlotDesc& slot = schema.slots()[i];
                    if (slot.key != kind || slot.decay_index != d) continue;
                    if (slot.stat == SlotStat::Weight) out[n][i] = v.weight;
                    if (slot.stat == SlotStat::Mean) out[n][i] = v.mean;
                    if (slot.stat == SlotStat::Variance) out[n][i] = v.variance;
                }
            }
        }
    };

    for (const auto& [key, group] : by_srcip) fill_1d(group, KeyKind::SrcIp, false);
    for (const auto& [key, group] : by_macip) fill_1d(group, KeyKind::SrcMacIp, false);
    for (const auto& [key, group] : by_chan) {
        fill_1d(group, KeyKind::Channel, false);
        fill_1d(group, KeyKind::ChannelJitter, true);
    }
    for (const auto& [key, group] : by_sock) fill_1d(group, KeyKind::Socket, false);

    // 2D slots: replay the residual recurrence over the pair's packets, with
    // means recomputed from scratch at every step.
    auto fill_2d = [&](const std::vector<std::size_t>& group, KeyKind kind) {
        for (std::size_t d = 0; d < kDecayCount; ++d) {
            double lambda = rates[d].lambda;
            SideState side[2];
            double sr = 0.0;
            double last_res[2] = {0.0, 0.0};
            for (std::size_t n : group) {
                const PacketEvent& e = trace[n];
                int s = e.direction == Direction::Outbound ? 0 : 1;
                int o = 1 - s;
                double t = e.timestamp;
                double x = static_cast<double>(e.size);
                double gamma = side[s].touched ? decay(lambda, t - side[s].last_touch) : 1.0;
                side[s].samples.emplace_back(t, x);
                side[s].last_touch = t;
                side[s].touched = true;
                Stat1DView vs = reference_stat1d(side[s].samples, t, lambda);
                double r = x - vs.mean;
                sr = gamma * sr + r * last_res[o];
                last_res[s] = r;

                Stat1DView vo = side[o].touched
                                    ? reference_stat1d(side[o].samples, side[o].last_touch, lambda)
                                    : Stat1DView{};
                double magnitude = std::sqrt(vs.mean * vs.mean + vo.mean * vo.mean);
                double radius = std::sqrt(vs.variance * vs.variance + vo.variance * vo.variance);
                double wsum = vs.weight + vo.weight;
                double cov = wsum > 0.0 ? sr / wsum : 0.0;
                double stds = std::sqrt(vs.variance) * std::sqrt(vo.variance);
                double pcc = stds > 0.0 ? std::clamp(cov / stds, -1.0, 1.0) : 0.0;

                for (std::size_t i = 0; i < kFeatureCount; ++i) {
                    const SlotDesc& slot = schema.slots()[i];
                    if (slot.key != kind || slot.decay_index != d) continue;
                    if (slot.stat == SlotStat::Magnitude) out[n][i] = magnitude;
                    if (slot.stat == SlotStat::Radius) out[n][i] = radius;
                    if (slot.stat == SlotStat::Covariance) out[n][i] = cov;
                    if (slot.stat == SlotStat::Pcc) out[n][i] = pcc;
                }
            }
        }
    };

    for (const auto& [key, group] : by_chan_pair) fill_2d(group, KeyKind::Channel);
    for (const auto& [key, group] : by_sock_pair) fill_2d(group, KeyKind::Socket);

    return out;
}

}  // namespace warden::testing
