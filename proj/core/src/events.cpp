#include "iotwarden/events.hpp"

#include <cmath>

#include "iotwarden/errors.hpp"

namespace warden {

void PacketEvent::validate() const {
    if (!std::isfinite(timestamp) || timestamp < 0.0)
        throw ContractError("packet timestamp must be finite and non-negative");
    if (src_port.has_value() != dst_port.has_value())
        throw ContractError("ports must be both present (TCP/UDP) or both absent");
}

bool AttackLabel::valid() const {
    switch (family) {
        case AttackFamily::Benign:
            return vector == AttackVector::None;
        case AttackFamily::Bashlite:
            return vector == AttackVector::Scan || vector == AttackVector::Junk ||
                   vector == AttackVector::Udp || vector == AttackVector::Tcp ||
                   vector == AttackVector::Combo;
        case AttackFamily::Mirai:
            return vector == AttackVector::Scan || vector == AttackVector::Ack ||
                   vector == AttackVector::Syn || vector == AttackVector::Udp ||
                   vector == AttackVector::UdpPlain;
    }
    return false;
}

AttackLabel AttackLabel::parse(const std::string& family, const std::string& vector) {
    AttackLabel label{attack_family_from_string(family), attack_vector_from_string(vector)};
    if (!label.valid())
        throw ParseError("label vector '" + vector + "' is not valid for family '" + family + "'");
    return label;
}

std::string to_string(AttackFamily f) {
    switch (f) {
        case AttackFamily::Benign: return "benign";
        case AttackFamily::Bashlite: return "bashlite";
        case AttackFamily::Mirai: return "mirai";
    }
    return "?";
}

std::string to_string(AttackVector v) {
    switch (v) {
        case AttackVector::None: return "none";
        case AttackVector::Scan: return "scan";
        case AttackVector::Junk: return "junk";
        case AttackVector::Udp: return "udp";
        case AttackVector::Tcp: return "tcp";
        case AttackVector::Combo: return "combo";
        case AttackVector::Ack: return "ack";
        case AttackVector::Syn: return "syn";
        case AttackVector::UdpPlain: return "udpplain";
    }
    return "?";
}

AttackFamily attack_family_from_string(const std::string& s) {
    if (s == "benign") return AttackFamily::Benign;
    if (s == "bashlite" || s == "gafgyt") return AttackFamily::Bashlite;
    if (s == "mirai") return AttackFamily::Mirai;
    throw ParseError("unknown attack family '" + s + "'");
}

AttackVector attack_vector_from_string(const std::string& s) {
    if (s == "none") return AttackVector::None;
    if (s == "scan") return AttackVector::Scan;
    if (s == "junk") return AttackVector::Junk;
    if (s == "udp") return AttackVector::Udp;
    if (s == "tcp") return AttackVector::Tcp;
    if (s == "combo") return AttackVector::Combo;
    if (s == "ack") return AttackVector::Ack;
    if (s == "syn") return AttackVector::Syn;
    if (s == "udpplain") return AttackVector::UdpPlain;
    throw ParseError("unknown attack vector '" + s + "'");
}

}  // namespace warden
