#include "iotwarden/stream_stats.hpp"

#include <algorithm>
#include <cmath>

#include "iotwarden/errors.hpp"

namespace warden {

const std::array<DecayRate, kDecayCount>& decay_rates() {
    static const std::array<DecayRate, kDecayCount> rates{{
        {5.0, "100ms"},
        {3.0, "500ms"},
        {1.0, "1.5s"},
        {0.1, "10s"},
        {0.01, "1min"},
    }};
    return rates;
}

double decay_factor(double dt, const DecayRate& rate) {
    if (dt < 0.0 || !std::isfinite(dt)) throw ContractError("decay_factor: dt must be finite and >= 0");
    if (dt == 0.0) return 1.0;
    return std::exp2(-rate.lambda * dt);
}

double DampedStat1D::decay_to(double t, const DecayRate& rate) {
    if (w == 0.0) {
        // Fresh stat: nothing to decay, just start the clock.
        t_last = t;
        return 1.0;
    }
    if (t < t_last) throw ContractError("damped stat updated with a timestamp in the past");
    double gamma = decay_factor(t - t_last, rate);
    w *= gamma;
    ls *= gamma;
    ss *= gamma;
    t_last = t;
    return gamma;
}

void DampedStat1D::update(double x, double t, const DecayRate& rate) {
    if (!std::isfinite(x)) throw ContractError("damped stat updated with a non-finite value");
    decay_to(t, rate);
    w += 1.0;
    ls += x;
    ss += x * x;
}

double DampedStat1D::variance() const {
    if (w == 0.0) return 0.0;
    double m = ls / w;
    return std::max(0.0, ss / w - m * m);
}

double DampedStat1D::std_dev() const {
    return std::sqrt(variance());
}

Stat1DView DampedStat1D::read() const {
    return {w, mean(), variance()};
}

Stat1DView DampedStat1D::read_at(double t, const DecayRate& rate) const {
    DampedStat1D copy = *this;
    if (copy.w > 0.0) {
        double gamma = decay_factor(t - t_last, rate);
        copy.w *= gamma;
        copy.ls *= gamma;
        copy.ss *= gamma;
    }
    return copy.read();
}

void DampedStat2D::update(double x, Direction dir, double t, const DecayRate& rate) {
    DampedStat1D& touched = dir == Direction::Outbound ? out_side : in_side;
    double& last_res_touched = dir == Direction::Outbound ? last_res_out : last_res_in;
    double other_res = dir == Direction::Outbound ? last_res_in : last_res_out;

    if (!std::isfinite(x)) throw ContractError("damped stat updated with a non-finite value");
    double gamma = touched.decay_to(t, rate);
    touched.w += 1.0;
    touched.ls += x;
    touched.ss += x * x;

    double res = x - touched.mean();
    sr = gamma * sr + res * other_res;
    last_res_touched = res;
}

Stat2DView DampedStat2D::read() const {
    Stat2DView v;
    double mean_a = out_side.mean();
    double mean_b = in_side.mean();
    double var_a = out_side.variance();
    double var_b = in_side.variance();
    v.magnitude = std::sqrt(mean_a * mean_a + mean_b * mean_b);
    v.radius = std::sqrt(var_a * var_a + var_b * var_b);
    double wsum = out_side.w + in_side.w;
    v.covariance = wsum > 0.0 ? sr / wsum : 0.0;
    double ss = out_side.std_dev() * in_side.std_dev();
    v.pcc = ss > 0.0 ? std::clamp(v.covariance / ss, -1.0, 1.0) : 0.0;
    return v;
}

namespace {

constexpr std::array<SlotStat, 3> k1DStats{SlotStat::Weight, SlotStat::Mean, SlotStat::Variance};
constexpr std::array<SlotStat, 7> kStreamStats{SlotStat::Weight,    SlotStat::Mean,
                                               SlotStat::Variance,  SlotStat::Magnitude,
                                               SlotStat::Radius,    SlotStat::Covariance,
                                               SlotStat::Pcc};

const char* key_name(KeyKind k) {
    switch (k) {
        case KeyKind::SrcIp: return "srcip";
        case KeyKind::SrcMacIp: return "macip";
        case KeyKind::Channel: return "channel";
        case KeyKind::ChannelJitter: return "jitter";
        case KeyKind::Socket: return "socket";
    }
    return "?";
}

const char* stat_name(SlotStat s) {
    switch (s) {
        case SlotStat::Weight: return "weight";
        case SlotStat::Mean: return "mean";
        case SlotStat::Variance: return "variance";
        case SlotStat::Magnitude: return "magnitude";
        case SlotStat::Radius: return "radius";
        case SlotStat::Covariance: return "covariance";
        case SlotStat::Pcc: return "pcc";
    }
    return "?";
}

}  // namespace

FeatureSchema::FeatureSchema() : version_(kFeatureSchemaVersion) {
    std::size_t i = 0;
    for (std::size_t d = 0; d < kDecayCount; ++d) {
        auto push = [&](KeyKind key, SlotStat stat) {
            slots_[i] = SlotDesc{key, d, stat};
            names_[i] = std::string(key_name(key)) + "_" + decay_rates()[d].window_label + "_" +
                        stat_name(stat);
            index_.emplace(names_[i], i);
            ++i;
        };
        for (auto s : k1DStats) push(KeyKind::SrcIp, s);
        for (auto s : k1DStats) push(KeyKind::SrcMacIp, s);
        for (auto s : kStreamStats) push(KeyKind::Channel, s);
        for (auto s : k1DStats) push(KeyKind::ChannelJitter, s);
        for (auto s : kStreamStats) push(KeyKind::Socket, s);
    }
}

const FeatureSchema& FeatureSchema::v1() {
    static const FeatureSchema schema;
    return schema;
}

std::optional<std::size_t> FeatureSchema::index_of(const std::string& slot_name) const {
    auto it = index_.find(slot_name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void FeatureRecord::validate() const {
    if (features.size() != kFeatureCount)
        throw ContractError("feature record must have exactly " + std::to_string(kFeatureCount) +
                            " values, got " + std::to_string(features.size()));
    for (double v : features)
        if (!std::isfinite(v)) throw ContractError("feature record contains a non-finite value");
}

std::size_t StatRegistry::MacIpHash::operator()(const MacIpKey& k) const {
    return hash_mix(hash_value(k.mac), hash_value(k.ip));
}

std::size_t StatRegistry::ChannelHash::operator()(const ChannelKey& k) const {
    return hash_mix(hash_value(k.src), hash_value(k.dst));
}

std::size_t StatRegistry::SocketHash::operator()(const SocketKey& k) const {
    std::size_t h = hash_mix(hash_value(k.src), hash_value(k.dst));
    h = hash_mix(h, (static_cast<std::size_t>(k.src_port) << 17) ^ k.dst_port);
    return hash_mix(h, k.has_ports ? 1u : 0u);
}

std::size_t StatRegistry::PairHash::operator()(const PairKey& k) const {
    std::size_t h = hash_mix(hash_value(k.a), hash_value(k.b));
    h = hash_mix(h, (static_cast<std::size_t>(k.a_port) << 17) ^ k.b_port);
    return hash_mix(h, k.has_ports ? 1u : 0u);
}

namespace {

// Total order on addresses for canonicalizing unordered pairs.
bool addr_less(const IpAddress& x, const IpAddress& y) {
    if (x.family != y.family) return x.family < y.family;
    return x.bytes < y.bytes;
}

}  // namespace

StatRegistry::PairKey StatRegistry::channel_pair(const PacketEvent& e) {
    PairKey k;
    if (addr_less(e.src_ip, e.dst_ip)) {
        k.a = e.src_ip;
        k.b = e.dst_ip;
    } else {
        k.a = e.dst_ip;
        k.b = e.src_ip;
    }
    return k;
}

StatRegistry::PairKey StatRegistry::socket_pair(const PacketEvent& e) {
    PairKey k;
    k.has_ports = e.has_ports();
    std::uint16_t sp = e.src_port.value_or(0);
    std::uint16_t dp = e.dst_port.value_or(0);
    bool src_first = addr_less(e.src_ip, e.dst_ip) || (e.src_ip == e.dst_ip && sp <= dp);
    if (src_first) {
        k.a = e.src_ip;
        k.a_port = sp;
        k.b = e.dst_ip;
        k.b_port = dp;
    } else {
        k.a = e.dst_ip;
        k.a_port = dp;
        k.b = e.src_ip;
        k.b_port = sp;
    }
    return k;
}

FeatureRecord StatRegistry::process(const PacketEvent& event) {
    event.validate();
    const double t = event.timestamp;
    const double size = static_cast<double>(event.size);
    const auto& rates = decay_rates();

    Bank1D& srcip = src_ip_[event.src_ip];
    Bank1D& macip = mac_ip_[MacIpKey{event.src_mac, event.src_ip}];
    Bank1D& chan = channel_[ChannelKey{event.src_ip, event.dst_ip}];
    SocketKey skey{event.src_ip, event.dst_ip, event.src_port.value_or(0),
                   event.dst_port.value_or(0), event.has_ports()};
    Bank1D& sock = socket_[skey];
    JitterCell& jit = jitter_[ChannelKey{event.src_ip, event.dst_ip}];
    Bank2D& chan2d = channel_pair_[channel_pair(event)];
    Bank2D& sock2d = socket_pair_[socket_pair(event)];

    // Inter-arrival time on this channel; the first packet only arms the clock.
    bool have_jitter = jit.seen;
    double inter_arrival = have_jitter ? t - jit.last_arrival : 0.0;
    if (have_jitter && inter_arrival < 0.0)
        throw ContractError("packet arrived out of order on its channel");
    jit.seen = true;
    jit.last_arrival = t;

    for (std::size_t d = 0; d < kDecayCount; ++d) {
        const DecayRate& rate = rates[d];
        srcip[d].update(size, t, rate);
        macip[d].update(size, t, rate);
        chan[d].update(size, t, rate);
        sock[d].update(size, t, rate);
        if (have_jitter) jit.stats[d].update(inter_arrival, t, rate);
        chan2d[d].update(size, event.direction, t, rate);
        sock2d[d].update(size, event.direction, t, rate);
    }

    FeatureRecord rec;
    rec.features.resize(kFeatureCount);
    rec.timestamp = t;
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        double value = 0.0;
        switch (slot.key) {
            case KeyKind::SrcIp:
            case KeyKind::SrcMacIp:
            case KeyKind::ChannelJitter: {
                const Bank1D& bank = slot.key == KeyKind::SrcIp    ? srcip
                                     : slot.key == KeyKind::SrcMacIp ? macip
                                                                     : jit.stats;
                Stat1DView v = bank[slot.decay_index].read();
                value = slot.stat == SlotStat::Weight ? v.weight
                        : slot.stat == SlotStat::Mean ? v.mean
                                                      : v.variance;
                break;
            }
            case KeyKind::Channel:
            case KeyKind::Socket: {
                const Bank1D& bank = slot.key == KeyKind::Channel ? chan : sock;
                const Bank2D& bank2 = slot.key == KeyKind::Channel ? chan2d : sock2d;
                switch (slot.stat) {
                    case SlotStat::Weight: value = bank[slot.decay_index].read().weight; break;
                    case SlotStat::Mean: value = bank[slot.decay_index].read().mean; break;
                    case SlotStat::Variance: value = bank[slot.decay_index].read().variance; break;
                    case SlotStat::Magnitude: value = bank2[slot.decay_index].read().magnitude; break;
                    case SlotStat::Radius: value = bank2[slot.decay_index].read().radius; break;
                    case SlotStat::Covariance:
                        value = bank2[slot.decay_index].read().covariance;
                        break;
                    case SlotStat::Pcc: value = bank2[slot.decay_index].read().pcc; break;
                }
                break;
            }
        }
        rec.features[i] = value;
    }
    return rec;
}

StatRegistry::Sizes StatRegistry::sizes() const {
    return Sizes{src_ip_.size(),  mac_ip_.size(),       channel_.size(),
                 socket_.size(),  channel_pair_.size(), socket_pair_.size()};
}

void StatRegistry::clear() {
    src_ip_.clear();
    mac_ip_.clear();
    channel_.clear();
    socket_.clear();
    jitter_.clear();
    channel_pair_.clear();
    socket_pair_.clear();
}

}  // namespace warden
