#include "iotwarden/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "iotwarden/errors.hpp"

namespace warden {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    // Canonical formats are comma-separated without quoting.
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, const std::string& path, std::size_t line) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError(path, line, "non-numeric cell '" + cell + "'");
    return v;
}

long parse_long(const std::string& cell, const std::string& path, std::size_t line,
                const char* what) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    long v = std::strtol(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ParseError(path, line, std::string("invalid ") + what + " '" + cell + "'");
    return v;
}

std::optional<std::uint16_t> parse_port(const std::string& cell, const std::string& path,
                                        std::size_t line) {
    if (cell.empty()) return std::nullopt;
    long v = parse_long(cell, path, line, "port");
    if (v < 0 || v > 65535)
        throw ParseError(path, line, "port " + cell + " out of range 0-65535");
    return static_cast<std::uint16_t>(v);
}

constexpr const char* kEventHeader = "timestamp,src_mac,src_ip,dst_ip,src_port,dst_port,size,direction";

PacketEvent event_from_fields(const std::vector<std::string>& f, const std::string& path,
                              std::size_t line) {
    PacketEvent e;
    e.timestamp = parse_double(f[0], path, line);
    if (!std::isfinite(e.timestamp) || e.timestamp < 0.0)
        throw ParseError(path, line, "timestamp must be finite and non-negative");
    try {
        e.src_mac = MacAddress::parse(f[1]);
        e.src_ip = IpAddress::parse(f[2]);
        e.dst_ip = IpAddress::parse(f[3]);
    } catch (const ParseError& err) {
        throw ParseError(path, line, err.what());
    }
    e.src_port = parse_port(f[4], path, line);
    e.dst_port = parse_port(f[5], path, line);
    if (e.src_port.has_value() != e.dst_port.has_value())
        throw ParseError(path, line, "ports must be both present or both absent");
    long size = parse_long(f[6], path, line, "size");
    if (size < 0) throw ParseError(path, line, "size must be non-negative");
    e.size = static_cast<std::uint32_t>(size);
    try {
        e.direction = direction_from_string(f[7]);
    } catch (const ParseError& err) {
        throw ParseError(path, line, err.what());
    }
    return e;
}

ReadEventsResult read_events_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event file '" + path + "'");
    ReadEventsResult result;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
    ++lineno;
    if (trim(line) != kEventHeader)
        throw ParseError(path, 1, std::string("expected header '") + kEventHeader + "'");
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(trim(line));
        if (fields.size() != 8)
            throw ParseError(path, lineno,
                             "expected 8 fields, got " + std::to_string(fields.size()));
        PacketEvent e = event_from_fields(fields, path, lineno);
        if (!result.events.empty() && e.timestamp < result.events.back().timestamp)
            ++result.non_monotonic;
        result.events.push_back(e);
    }
    return result;
}

ReadEventsResult read_events_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open event file '" + path + "'");
    ReadEventsResult result;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError(path, lineno, "invalid JSON object");
        try {
            PacketEvent e;
            e.timestamp = j.at("timestamp").get<double>();
            e.src_mac = MacAddress::parse(j.at("src_mac").get<std::string>());
            e.src_ip = IpAddress::parse(j.at("src_ip").get<std::string>());
            e.dst_ip = IpAddress::parse(j.at("dst_ip").get<std::string>());
            if (j.contains("src_port") && !j["src_port"].is_null())
                e.src_port = j["src_port"].get<std::uint16_t>();
            if (j.contains("dst_port") && !j["dst_port"].is_null())
                e.dst_port = j["dst_port"].get<std::uint16_t>();
            long size = j.at("size").get<long>();
            if (size < 0) throw ParseError(path, lineno, "size must be non-negative");
            e.size = static_cast<std::uint32_t>(size);
            e.direction = direction_from_string(j.at("direction").get<std::string>());
            e.validate();
            if (e.src_port.has_value() != e.dst_port.has_value())
                throw ParseError(path, lineno, "ports must be both present or both absent");
            if (!result.events.empty() && e.timestamp < result.events.back().timestamp)
                ++result.non_monotonic;
            result.events.push_back(e);
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& ex) {
            throw ParseError(path, lineno, ex.what());
        }
    }
    return result;
}

std::string format_timestamp(double t) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9f", t);
    return buf;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

EventFormat event_format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return EventFormat::CanonicalCsv;
    if (path.size() >= 6 && path.substr(path.size() - 6) == ".jsonl")
        return EventFormat::CanonicalJsonl;
    throw ConfigError("cannot infer event format from '" + path + "' (use .csv or .jsonl)");
}

EventFormat event_format_from_string(const std::string& id) {
    if (id == "canonical-event-csv" || id == "csv") return EventFormat::CanonicalCsv;
    if (id == "canonical-event-jsonl" || id == "jsonl") return EventFormat::CanonicalJsonl;
    throw ConfigError("unknown event format '" + id + "'");
}

ReadEventsResult read_events(const std::string& path, EventFormat format) {
    return format == EventFormat::CanonicalCsv ? read_events_csv(path) : read_events_jsonl(path);
}

void write_events(const std::string& path, const std::vector<PacketEvent>& events,
                  EventFormat format) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write event file '" + path + "'");
    if (format == EventFormat::CanonicalCsv) {
        out << kEventHeader << "\n";
        for (const auto& e : events) {
            out << format_timestamp(e.timestamp) << ',' << e.src_mac.to_string() << ','
                << e.src_ip.to_string() << ',' << e.dst_ip.to_string() << ',';
            if (e.src_port) out << *e.src_port;
            out << ',';
            if (e.dst_port) out << *e.dst_port;
            out << ',' << e.size << ',' << to_string(e.direction) << "\n";
        }
    } else {
        for (const auto& e : events) {
            nlohmann::json j{{"timestamp", e.timestamp},
                             {"src_mac", e.src_mac.to_string()},
                             {"src_ip", e.src_ip.to_string()},
                             {"dst_ip", e.dst_ip.to_string()},
                             {"size", e.size},
                             {"direction", to_string(e.direction)}};
            if (e.src_port) j["src_port"] = *e.src_port;
            if (e.dst_port) j["dst_port"] = *e.dst_port;
            out << j.dump() << "\n";
        }
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

HeaderMapping HeaderMapping::identity() {
    HeaderMapping m;
    const auto& names = FeatureSchema::v1().slot_names();
    for (std::size_t i = 0; i < kFeatureCount; ++i) m.columns_[i] = names[i];
    m.label_rule_ = LabelColumns{"label_family", "label_vector"};
    m.timestamp_column_ = "timestamp";
    return m;
}

HeaderMapping HeaderMapping::nbaiot() {
    HeaderMapping m;
    // Published column families: MI_dir_* (source MAC-IP), H_* (source IP),
    // HH_* (channel), HH_jit_* (channel jitter), HpHp_* (socket); window
    // suffixes L5/L3/L1/L0.1/L0.01 correspond to 100ms..1min. The HH and HpHp
    // families carry std where the canonical schema wants variance.
    static const std::array<const char*, kDecayCount> kWin{"L5", "L3", "L1", "L0.1", "L0.01"};
    const auto& schema = FeatureSchema::v1();
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        const SlotDesc& slot = schema.slots()[i];
        std::string win = kWin[slot.decay_index];
        std::string family;
        switch (slot.key) {
            case KeyKind::SrcIp: family = "H"; break;
            case KeyKind::SrcMacIp: family = "MI_dir"; break;
            case KeyKind::Channel: family = "HH"; break;
            case KeyKind::ChannelJitter: family = "HH_jit"; break;
            case KeyKind::Socket: family = "HpHp"; break;
        }
        std::string stat;
        CellTransform t = CellTransform::None;
        switch (slot.stat) {
            case SlotStat::Weight: stat = "weight"; break;
            case SlotStat::Mean: stat = "mean"; break;
            case SlotStat::Variance:
                if (slot.key == KeyKind::Channel || slot.key == KeyKind::Socket) {
                    stat = "std";
                    t = CellTransform::Square;
                } else {
                    stat = "variance";
                }
                break;
            case SlotStat::Magnitude: stat = "magnitude"; break;
            case SlotStat::Radius: stat = "radius"; break;
            case SlotStat::Covariance: stat = "covariance"; break;
            case SlotStat::Pcc: stat = "pcc"; break;
        }
        m.columns_[i] = family + "_" + win + "_" + stat;
        m.transforms_[i] = t;
    }
    m.label_rule_ = std::monostate{};
    return m;
}

HeaderMapping HeaderMapping::parse(std::istream& in, const std::string& origin) {
    HeaderMapping m;
    const auto& schema = FeatureSchema::v1();
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::string> label_family, label_vector;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ParseError(origin, lineno, "expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.rfind("slot.", 0) == 0) {
            std::string slot = key.substr(5);
            if (!schema.index_of(slot))
                throw ParseError(origin, lineno, "unknown canonical slot '" + slot + "'");
            m.columns_[*schema.index_of(slot)] = value;
        } else if (key.rfind("transform.", 0) == 0) {
            std::string slot = key.substr(10);
            auto idx = schema.index_of(slot);
            if (!idx) throw ParseError(origin, lineno, "unknown canonical slot '" + slot + "'");
            if (value == "square")
                m.transforms_[*idx] = CellTransform::Square;
            else if (value == "none")
                m.transforms_[*idx] = CellTransform::None;
            else
                throw ParseError(origin, lineno, "unknown transform '" + value + "'");
        } else if (key == "label.family") {
            label_family = value;
        } else if (key == "label.vector") {
            label_vector = value;
        } else if (key == "timestamp") {
            if (!value.empty() && value[0] == '@')
                m.timestamp_column_ = value.substr(1);
            else
                throw ParseError(origin, lineno, "timestamp value must name a column as @name");
        } else {
            throw ParseError(origin, lineno, "unknown mapping key '" + key + "'");
        }
    }
    if (label_family.has_value() != label_vector.has_value())
        throw ParseError(origin, lineno, "label.family and label.vector must be set together");
    if (label_family) {
        bool fam_col = !label_family->empty() && (*label_family)[0] == '@';
        bool vec_col = !label_vector->empty() && (*label_vector)[0] == '@';
        if (fam_col != vec_col)
            throw ParseError(origin, lineno, "label rules must both be columns or both be values");
        if (fam_col) {
            m.label_rule_ = LabelColumns{label_family->substr(1), label_vector->substr(1)};
        } else {
            try {
                m.label_rule_ = AttackLabel::parse(*label_family, *label_vector);
            } catch (const ParseError& e) {
                throw ParseError(origin, lineno, e.what());
            }
        }
    }
    return m;
}

HeaderMapping HeaderMapping::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mapping file '" + path + "'");
    return parse(in, path);
}

void HeaderMapping::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mapping file '" + path + "'");
    const auto& names = FeatureSchema::v1().slot_names();
    out << "# Maps canonical feature slots onto source CSV column names.\n";
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (!columns_[i].empty()) out << "slot." << names[i] << " = " << columns_[i] << "\n";
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (transforms_[i] == CellTransform::Square)
            out << "transform." << names[i] << " = square\n";
    }
    if (const auto* cols = std::get_if<LabelColumns>(&label_rule_)) {
        out << "label.family = @" << cols->family_column << "\n";
        out << "label.vector = @" << cols->vector_column << "\n";
    } else if (const auto* fixed = std::get_if<AttackLabel>(&label_rule_)) {
        out << "label.family = " << to_string(fixed->family) << "\n";
        out << "label.vector = " << to_string(fixed->vector) << "\n";
    }
    if (timestamp_column_) out << "timestamp = @" << *timestamp_column_ << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

HeaderMapping HeaderMapping::with_label(AttackLabel label) const {
    HeaderMapping copy = *this;
    copy.label_rule_ = label;
    return copy;
}

void HeaderMapping::set_slot(const std::string& canonical, const std::string& source,
                             CellTransform t) {
    auto idx = FeatureSchema::v1().index_of(canonical);
    if (!idx) throw ConfigError("unknown canonical slot '" + canonical + "'");
    columns_[*idx] = source;
    transforms_[*idx] = t;
}

void HeaderMapping::validate_complete() const {
    std::string missing;
    const auto& names = FeatureSchema::v1().slot_names();
    std::size_t count = 0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (columns_[i].empty()) {
            ++count;
            if (!missing.empty()) missing += ", ";
            if (count <= 8) missing += names[i];
        }
    }
    if (count > 8) missing += ", ... (" + std::to_string(count) + " total)";
    if (count > 0) throw SchemaError("mapping does not cover canonical slots: " + missing);
}

const std::string& HeaderMapping::source_column(std::size_t slot_index) const {
    return columns_[slot_index];
}

CellTransform HeaderMapping::transform(std::size_t slot_index) const {
    return transforms_[slot_index];
}

std::vector<FeatureRecord> read_feature_csv(const std::string& path,
                                            const HeaderMapping& mapping) {
    mapping.validate_complete();
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
    auto header = split_csv_line(trim(line));
    std::unordered_map<std::string, std::size_t> col_index;
    for (std::size_t i = 0; i < header.size(); ++i) col_index.emplace(trim(header[i]), i);

    // Resolve every canonical slot to a source column up front.
    std::array<std::size_t, kFeatureCount> slot_col{};
    std::string missing;
    std::size_t missing_count = 0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        auto it = col_index.find(mapping.source_column(i));
        if (it == col_index.end()) {
            ++missing_count;
            if (!missing.empty()) missing += ", ";
            if (missing_count <= 8) missing += mapping.source_column(i);
            continue;
        }
        slot_col[i] = it->second;
    }
    if (missing_count > 8) missing += ", ... (" + std::to_string(missing_count) + " total)";
    if (missing_count > 0)
        throw SchemaError("feature file '" + path + "' header is missing mapped columns: " +
                          missing);

    const auto& rule = mapping.label_rule();
    std::optional<std::size_t> fam_col, vec_col, ts_col;
    if (const auto* cols = std::get_if<HeaderMapping::LabelColumns>(&rule)) {
        auto fit = col_index.find(cols->family_column);
        auto vit = col_index.find(cols->vector_column);
        if (fit == col_index.end() || vit == col_index.end())
            throw SchemaError("feature file '" + path + "' is missing label columns '" +
                              cols->family_column + "'/'" + cols->vector_column + "'");
        fam_col = fit->second;
        vec_col = vit->second;
    } else if (std::holds_alternative<std::monostate>(rule)) {
        throw ConfigError("mapping has no label rule; supply a per-file label or label columns");
    }
    if (mapping.timestamp_column()) {
        auto it = col_index.find(*mapping.timestamp_column());
        if (it != col_index.end()) ts_col = it->second;
    }

    std::vector<FeatureRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty()) continue;
        auto cells = split_csv_line(s);
        if (cells.size() != header.size())
            throw ParseError(path, lineno,
                             "expected " + std::to_string(header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
        FeatureRecord rec;
        rec.features.resize(kFeatureCount);
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            double v = parse_double(cells[slot_col[i]], path, lineno);
            if (mapping.transform(i) == CellTransform::Square) v *= v;
            if (!std::isfinite(v))
                throw ParseError(path, lineno, "non-finite feature value in column '" +
                                                   mapping.source_column(i) + "'");
            rec.features[i] = v;
        }
        if (fam_col) {
            try {
                rec.label = AttackLabel::parse(trim(cells[*fam_col]), trim(cells[*vec_col]));
            } catch (const ParseError& e) {
                throw ParseError(path, lineno, e.what());
            }
        } else {
            rec.label = std::get<AttackLabel>(rule);
        }
        if (ts_col && !trim(cells[*ts_col]).empty())
            rec.timestamp = parse_double(trim(cells[*ts_col]), path, lineno);
        records.push_back(std::move(rec));
    }
    return records;
}

void write_feature_csv(const std::string& path, const std::vector<FeatureRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write feature file '" + path + "'");
    const auto& names = FeatureSchema::v1().slot_names();
    bool with_ts = !records.empty() && records.front().timestamp.has_value();
    for (std::size_t i = 0; i < kFeatureCount; ++i) out << names[i] << ',';
    out << "label_family,label_vector";
    if (with_ts) out << ",timestamp";
    out << "\n";
    for (const auto& rec : records) {
        rec.validate();
        for (double v : rec.features) out << format_double(v) << ',';
        out << to_string(rec.label.family) << ',' << to_string(rec.label.vector);
        if (with_ts) {
            out << ',';
            if (rec.timestamp) out << format_double(*rec.timestamp);
        }
        out << "\n";
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<LabelRange> read_label_ranges(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open label file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
    ++lineno;
    if (trim(line) != "first_index,last_index,family,vector")
        throw ParseError(path, 1, "expected header 'first_index,last_index,family,vector'");
    std::vector<LabelRange> ranges;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty()) continue;
        auto cells = split_csv_line(s);
        if (cells.size() != 4) throw ParseError(path, lineno, "expected 4 cells");
        LabelRange r;
        long first = parse_long(cells[0], path, lineno, "index");
        long last = parse_long(cells[1], path, lineno, "index");
        if (first < 0 || last < first)
            throw ParseError(path, lineno, "invalid index range");
        r.first_index = static_cast<std::size_t>(first);
        r.last_index = static_cast<std::size_t>(last);
        try {
            r.label = AttackLabel::parse(trim(cells[2]), trim(cells[3]));
        } catch (const ParseError& e) {
            throw ParseError(path, lineno, e.what());
        }
        ranges.push_back(r);
    }
    return ranges;
}

void write_label_ranges(const std::string& path, const std::vector<LabelRange>& ranges) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write label file '" + path + "'");
    out << "first_index,last_index,family,vector\n";
    for (const auto& r : ranges)
        out << r.first_index << ',' << r.last_index << ',' << to_string(r.label.family) << ','
            << to_string(r.label.vector) << "\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

void apply_label_ranges(std::vector<FeatureRecord>& records,
                        const std::vector<LabelRange>& ranges) {
    std::size_t prev_end = 0;
    bool first = true;
    for (const auto& r : ranges) {
        if (!first && r.first_index <= prev_end)
            throw ConfigError("label ranges must be sorted and disjoint");
        if (r.last_index >= records.size())
            throw ConfigError("label range [" + std::to_string(r.first_index) + ", " +
                              std::to_string(r.last_index) + "] exceeds record count " +
                              std::to_string(records.size()));
        for (std::size_t i = r.first_index; i <= r.last_index; ++i) records[i].label = r.label;
        prev_end = r.last_index;
        first = false;
    }
}

DatasetSplit split_chronological(std::size_t n_records) {
    if (n_records < 3)
        throw ContractError("chronological split needs at least 3 records, got " +
                            std::to_string(n_records));
    std::size_t base = n_records / 3;
    std::size_t rem = n_records % 3;
    std::size_t n_trn = base + (rem >= 1 ? 1 : 0);
    std::size_t n_opt = base + (rem >= 2 ? 1 : 0);
    DatasetSplit s;
    s.trn = {0, n_trn};
    s.opt = {n_trn, n_trn + n_opt};
    s.tst = {n_trn + n_opt, n_records};
    return s;
}

DatasetSplit split_chronological(const std::vector<FeatureRecord>& records) {
    for (const auto& r : records)
        if (!r.label.is_benign())
            throw ContractError("chronological split expects benign-only records");
    return split_chronological(records.size());
}

std::vector<FeatureRecord> slice(const std::vector<FeatureRecord>& records, IndexRange range) {
    return {records.begin() + static_cast<std::ptrdiff_t>(range.begin),
            records.begin() + static_cast<std::ptrdiff_t>(range.end)};
}

}  // namespace warden
