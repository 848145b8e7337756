#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "iotwarden/events.hpp"
#include "iotwarden/stream_stats.hpp"

namespace warden {

enum class EventFormat { CanonicalCsv, CanonicalJsonl };

/// Picks the format from a path suffix (.csv / .jsonl); throws ConfigError otherwise.
EventFormat event_format_from_path(const std::string& path);
EventFormat event_format_from_string(const std::string& id);

struct ReadEventsResult {
    std::vector<PacketEvent> events;
    /// Number of events whose timestamp was earlier than their predecessor's.
    std::size_t non_monotonic = 0;
};

/// Reads packet events in file order. Malformed rows throw ParseError with the
/// 1-based line number; out-of-order timestamps are only counted as warnings.
ReadEventsResult read_events(const std::string& path, EventFormat format);

void write_events(const std::string& path, const std::vector<PacketEvent>& events,
                  EventFormat format);

/// Per-slot value transform applied while loading foreign feature CSVs.
enum class CellTransform : std::uint8_t { None, Square };

/// Maps the 115 canonical slots onto a source CSV's column names, carries the
/// label rule (fixed per-file label or label columns) and an optional
/// timestamp column. Text form is a key=value file; see docs/formats.md.
class HeaderMapping {
public:
    struct LabelColumns {
        std::string family_column;
        std::string vector_column;
    };
    using LabelRule = std::variant<std::monostate, AttackLabel, LabelColumns>;

    /// Canonical slot names map to themselves; labels from label_family/label_vector.
    static HeaderMapping identity();
    /// Column layout of the public N-BaIoT per-device CSVs (std columns are
    /// squared into the canonical variance slots). Those files carry no label
    /// column, so pair this with with_label() per file.
    static HeaderMapping nbaiot();

    static HeaderMapping load(const std::string& path);
    static HeaderMapping parse(std::istream& in, const std::string& origin);
    void save(const std::string& path) const;

    /// Copy of this mapping with a fixed whole-file label.
    HeaderMapping with_label(AttackLabel label) const;

    void set_slot(const std::string& canonical, const std::string& source,
                  CellTransform t = CellTransform::None);
    void set_label_rule(LabelRule rule) { label_rule_ = std::move(rule); }
    void set_timestamp_column(std::optional<std::string> col) { timestamp_column_ = std::move(col); }

    /// Throws SchemaError naming any canonical slot without a source column.
    void validate_complete() const;

    const std::string& source_column(std::size_t slot_index) const;
    CellTransform transform(std::size_t slot_index) const;
    const LabelRule& label_rule() const { return label_rule_; }
    const std::optional<std::string>& timestamp_column() const { return timestamp_column_; }

private:
    std::array<std::string, kFeatureCount> columns_{};
    std::array<CellTransform, kFeatureCount> transforms_{};
    LabelRule label_rule_;
    std::optional<std::string> timestamp_column_;
};

/// Loads a feature CSV into canonical order, whatever the source column order.
std::vector<FeatureRecord> read_feature_csv(const std::string& path, const HeaderMapping& mapping);

/// Writes the canonical feature CSV: 115 schema-v1 slot names, then
/// label_family,label_vector, then timestamp if any record carries one.
void write_feature_csv(const std::string& path, const std::vector<FeatureRecord>& records);

/// Sidecar label row: event index range [first_index, last_index] carries the label.
struct LabelRange {
    std::size_t first_index = 0;
    std::size_t last_index = 0;
    AttackLabel label;
};

std::vector<LabelRange> read_label_ranges(const std::string& path);
void write_label_ranges(const std::string& path, const std::vector<LabelRange>& ranges);

/// Stamps labels onto records by index; ranges must be sorted and disjoint.
void apply_label_ranges(std::vector<FeatureRecord>& records,
                        const std::vector<LabelRange>& ranges);

/// Contiguous index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
};

/// Chronological thirds of a device's benign data. Sizes differ by at most
/// one; any remainder goes to the earliest splits.
struct DatasetSplit {
    IndexRange trn;
    IndexRange opt;
    IndexRange tst;
};

DatasetSplit split_chronological(std::size_t n_records);
DatasetSplit split_chronological(const std::vector<FeatureRecord>& records);

/// Copies a split range out of a record sequence.
std::vector<FeatureRecord> slice(const std::vector<FeatureRecord>& records, IndexRange range);

}  // namespace warden
