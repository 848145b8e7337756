#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "iotwarden/events.hpp"
#include "iotwarden/net.hpp"

namespace warden {

inline constexpr std::size_t kFeatureCount = 115;
inline constexpr int kFeatureSchemaVersion = 1;
inline constexpr std::size_t kDecayCount = 5;

/// One exponential decay rate. The five rates approximate the five temporal
/// windows; higher lambda forgets faster.
struct DecayRate {
    double lambda;           // 1/second
    const char* window_label;  // "100ms" .. "1min"
};

/// The five decay rates, fixed, in descending-lambda order.
const std::array<DecayRate, kDecayCount>& decay_rates();

/// 2^(-lambda*dt). Returns 1 when dt == 0; throws ContractError for dt < 0.
double decay_factor(double dt, const DecayRate& rate);

struct Stat1DView {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Damped running sums of a single value stream. Updates are O(1): each one
/// first multiplies the sums by 2^(-lambda*dt), then adds the new sample.
struct DampedStat1D {
    double w = 0.0;   // decayed packet count
    double ls = 0.0;  // decayed linear sum
    double ss = 0.0;  // decayed squared sum
    double t_last = 0.0;

    void update(double x, double t, const DecayRate& rate);
    Stat1DView read() const;
    /// View of the stats as they would decay to at time t, without mutating.
    Stat1DView read_at(double t, const DecayRate& rate) const;

    double mean() const { return w > 0.0 ? ls / w : 0.0; }
    double variance() const;
    double std_dev() const;

private:
    friend struct DampedStat2D;
    /// Applies decay up to t and returns the factor used.
    double decay_to(double t, const DecayRate& rate);
};

struct Stat2DView {
    double magnitude = 0.0;
    double radius = 0.0;
    double covariance = 0.0;
    double pcc = 0.0;
};

/// Joint statistics of the two directions of one stream. The covariance is a
/// one-sided online approximation: each new residual is multiplied by the most
/// recent residual seen on the opposite direction.
struct DampedStat2D {
    DampedStat1D out_side;
    DampedStat1D in_side;
    double sr = 0.0;  // decayed sum of cross-direction residual products
    double last_res_out = 0.0;
    double last_res_in = 0.0;

    void update(double x, Direction dir, double t, const DecayRate& rate);
    Stat2DView read() const;
};

/// The four aggregation key kinds plus the channel jitter pseudo-key.
enum class KeyKind : std::uint8_t { SrcIp, SrcMacIp, Channel, ChannelJitter, Socket };

enum class SlotStat : std::uint8_t {
    Weight,
    Mean,
    Variance,
    Magnitude,
    Radius,
    Covariance,
    Pcc,
};

/// Descriptor of one of the 115 snapshot slots.
struct SlotDesc {
    KeyKind key;
    std::size_t decay_index;  // into decay_rates()
    SlotStat stat;
};

/// Canonical ordering of the 115 feature slots (schema v1): window-major, and
/// within each window srcip{w,mean,var}, macip{w,mean,var},
/// channel{w,mean,var,mag,rad,cov,pcc}, jitter{w,mean,var},
/// socket{w,mean,var,mag,rad,cov,pcc}.
class FeatureSchema {
public:
    static const FeatureSchema& v1();

    int version() const { return version_; }
    const std::array<SlotDesc, kFeatureCount>& slots() const { return slots_; }
    const std::array<std::string, kFeatureCount>& slot_names() const { return names_; }
    /// Index of a canonical slot name, or nullopt.
    std::optional<std::size_t> index_of(const std::string& slot_name) const;

private:
    FeatureSchema();
    int version_;
    std::array<SlotDesc, kFeatureCount> slots_;
    std::array<std::string, kFeatureCount> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// The 115-value behavioral snapshot plus label and (optionally) the packet
/// timestamp it was extracted at.
struct FeatureRecord {
    std::vector<double> features;  // exactly kFeatureCount finite values
    AttackLabel label;
    std::optional<double> timestamp;

    void validate() const;
};

/// All damped statistics of one monitored stream set, keyed by the packet's
/// own source-derived identities. Single writer; keys never expire.
class StatRegistry {
public:
    struct Sizes {
        std::size_t src_ip = 0;
        std::size_t mac_ip = 0;
        std::size_t channels = 0;
        std::size_t sockets = 0;
        std::size_t channel_pairs = 0;
        std::size_t socket_pairs = 0;
    };

    /// Updates every table the packet touches and returns the packet's
    /// snapshot in schema-v1 order.
    FeatureRecord process(const PacketEvent& event);

    Sizes sizes() const;
    void clear();

private:
    using Bank1D = std::array<DampedStat1D, kDecayCount>;
    using Bank2D = std::array<DampedStat2D, kDecayCount>;

    struct MacIpKey {
        MacAddress mac;
        IpAddress ip;
        bool operator==(const MacIpKey&) const = default;
    };
    struct ChannelKey {
        IpAddress src;
        IpAddress dst;
        bool operator==(const ChannelKey&) const = default;
    };
    struct SocketKey {
        IpAddress src;
        IpAddress dst;
        std::uint16_t src_port = 0;
        std::uint16_t dst_port = 0;
        bool has_ports = false;
        bool operator==(const SocketKey&) const = default;
    };
    /// Unordered endpoint pair identifying the two-direction stream.
    struct PairKey {
        IpAddress a;
        IpAddress b;
        std::uint16_t a_port = 0;
        std::uint16_t b_port = 0;
        bool has_ports = false;
        bool operator==(const PairKey&) const = default;
    };

    struct MacIpHash {
        std::size_t operator()(const MacIpKey& k) const;
    };
    struct ChannelHash {
        std::size_t operator()(const ChannelKey& k) const;
    };
    struct SocketHash {
        std::size_t operator()(const SocketKey& k) const;
    };
    struct PairHash {
        std::size_t operator()(const PairKey& k) const;
    };

    struct JitterCell {
        Bank1D stats;
        double last_arrival = 0.0;
        bool seen = false;
    };

    static PairKey channel_pair(const PacketEvent& e);
    static PairKey socket_pair(const PacketEvent& e);

    std::unordered_map<IpAddress, Bank1D> src_ip_;
    std::unordered_map<MacIpKey, Bank1D, MacIpHash> mac_ip_;
    std::unordered_map<ChannelKey, Bank1D, ChannelHash> channel_;
    std::unordered_map<SocketKey, Bank1D, SocketHash> socket_;
    std::unordered_map<ChannelKey, JitterCell, ChannelHash> jitter_;
    std::unordered_map<PairKey, Bank2D, PairHash> channel_pair_;
    std::unordered_map<PairKey, Bank2D, PairHash> socket_pair_;
};

/// Convenience wrapper: one registry + the schema it emits.
class FeatureExtractor {
public:
    FeatureExtractor() : schema_(&FeatureSchema::v1()) {}

    FeatureRecord process(const PacketEvent& event) { return registry_.process(event); }
    const FeatureSchema& schema() const { return *schema_; }
    StatRegistry& registry() { return registry_; }

private:
    StatRegistry registry_;
    const FeatureSchema* schema_;
};

}  // namespace warden
