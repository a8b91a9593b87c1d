#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dualstate/common.hpp"

namespace dualstate {

enum class Side { Buy, Sell, Unknown };

struct TapeRecord {
    Date date;
    double price = 0.0;
    Side side = Side::Unknown;
    std::int64_t volume = 0;

    bool operator==(const TapeRecord&) const = default;
};

struct RowError {
    std::size_t line = 0;  // 1-based line number in the stream
    std::string reason;
    std::string text;
};

struct ColumnMap {
    int date = 0;
    int price = 1;
    int side = 2;
    int volume = 3;
    char delimiter = 0;      // 0 = detect among ',', '\t', ';'
    int max_header_rows = 2; // leading rows whose first field is not a date
};

struct ParsedTape {
    std::vector<TapeRecord> records;  // sorted by date, stable within a day
    std::vector<RowError> rejected;
    std::size_t data_rows = 0;
    std::size_t header_rows = 0;
    char delimiter = ',';
};

ParsedTape parse_tape(std::istream& in, const ColumnMap& columns = {});
// Throws ErrorKind::Data when the file cannot be opened.
ParsedTape parse_tape_file(const std::filesystem::path& path, const ColumnMap& columns = {});

// Canonical form: comma-separated, two header rows, prices in shortest round-trip form.
void write_tape(std::ostream& out, const std::vector<TapeRecord>& records);
std::string side_code(Side s);

enum class SideSubset { All, Buy, Sell, Known };

struct TapeSummary {
    std::size_t trade_count = 0;
    double min_price = 0.0;
    double avg_price = 0.0;
    double max_price = 0.0;
    double std_price = 0.0;
    double avg_daily_volume = 0.0;
    double sample_volume_variance = 0.0;
    double unknown_side_fraction = 0.0;
    std::size_t trading_days = 0;
};

// Throws ErrorKind::Data on an empty selection ("no records").
TapeSummary summarize(const std::vector<TapeRecord>& records, SideSubset subset = SideSubset::All);

struct ValidationReport {
    std::size_t records = 0;
    std::size_t unknown = 0;
    double unknown_side_fraction = 0.0;
    double threshold = 0.10;
    bool unknown_flag = false;
    std::map<std::string, std::size_t> rejected_by_reason;
    std::size_t rejected_total = 0;
};

ValidationReport validate(const std::vector<TapeRecord>& records, const std::vector<RowError>& rejected = {},
                          double threshold = 0.10);

}  // namespace dualstate
