#include "dualstate/tape_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

namespace dualstate {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

char detect_delimiter(std::string_view line) {
    // Most frequent candidate wins; ties resolve in the listed order.
    char best = ',';
    std::size_t best_n = 0;
    for (char c : {',', '\t', ';'}) {
        const auto n = static_cast<std::size_t>(std::count(line.begin(), line.end(), c));
        if (n > best_n) {
            best = c;
            best_n = n;
        }
    }
    return best;
}

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::string side_code(Side s) {
    switch (s) {
        case Side::Buy: return "B";
        case Side::Sell: return "S";
        default: return "";
    }
}

ParsedTape parse_tape(std::istream& in, const ColumnMap& columns) {
    ParsedTape out;
    out.delimiter = columns.delimiter;
    const int needed = std::max({columns.date, columns.price, columns.side, columns.volume}) + 1;

    std::string line;
    std::size_t lineno = 0;
    bool data_started = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (is_blank(view) || view.front() == '#') continue;
        if (out.delimiter == 0) out.delimiter = detect_delimiter(view);
        const auto fields = split(view, out.delimiter);

        const auto date = parse_iso_date(fields[static_cast<std::size_t>(std::min<int>(columns.date, static_cast<int>(fields.size()) - 1))]);
        if (!data_started && !date && static_cast<int>(out.header_rows) < columns.max_header_rows) {
            ++out.header_rows;
            continue;
        }
        data_started = true;
        ++out.data_rows;

        auto reject = [&](const char* reason) { out.rejected.push_back({lineno, reason, line}); };
        if (static_cast<int>(fields.size()) < needed) {
            reject("missing fields");
            continue;
        }
        const auto d = parse_iso_date(fields[static_cast<std::size_t>(columns.date)]);
        if (!d) {
            reject("malformed date");
            continue;
        }
        const auto ptext = trim(fields[static_cast<std::size_t>(columns.price)]);
        double price = 0.0;
        auto pr = std::from_chars(ptext.data(), ptext.data() + ptext.size(), price);
        if (pr.ec != std::errc{} || pr.ptr != ptext.data() + ptext.size() || !std::isfinite(price)) {
            reject("malformed price");
            continue;
        }
        if (price <= 0.0) {
            reject("nonpositive price");
            continue;
        }
        const auto vtext = trim(fields[static_cast<std::size_t>(columns.volume)]);
        std::int64_t volume = 0;
        auto vr = std::from_chars(vtext.data(), vtext.data() + vtext.size(), volume);
        if (vr.ec != std::errc{} || vr.ptr != vtext.data() + vtext.size()) {
            // Spreadsheet exports sometimes carry "425.0".
            double vd = 0.0;
            auto vr2 = std::from_chars(vtext.data(), vtext.data() + vtext.size(), vd);
            if (vr2.ec != std::errc{} || vr2.ptr != vtext.data() + vtext.size() || vd != std::floor(vd)) {
                reject("malformed volume");
                continue;
            }
            volume = static_cast<std::int64_t>(vd);
        }
        if (volume <= 0) {
            reject("nonpositive volume");
            continue;
        }
        const auto stext = trim(fields[static_cast<std::size_t>(columns.side)]);
        Side side = Side::Unknown;
        if (stext == "B" || stext == "b") side = Side::Buy;
        else if (stext == "S" || stext == "s") side = Side::Sell;
        out.records.push_back({*d, price, side, volume});
    }
    if (in.bad()) throw_data("unreadable stream");
    if (out.delimiter == 0) out.delimiter = ',';
    std::stable_sort(out.records.begin(), out.records.end(),
                     [](const TapeRecord& a, const TapeRecord& b) { return a.date < b.date; });
    return out;
}

ParsedTape parse_tape_file(const std::filesystem::path& path, const ColumnMap& columns) {
    std::ifstream in(path);
    if (!in) throw_data("cannot open tape " + path.string());
    return parse_tape(in, columns);
}

void write_tape(std::ostream& out, const std::vector<TapeRecord>& records) {
    out << "Trddt,Stkprc,Parcha,Trdtims\n";
    out << "Trading Date,Trading Price CNY,Nature Of Deal,Number Of Deal\n";
    for (const auto& r : records) {
        out << r.date.iso() << ',' << fmt_double(r.price) << ',' << side_code(r.side) << ',' << r.volume << '\n';
    }
}

TapeSummary summarize(const std::vector<TapeRecord>& records, SideSubset subset) {
    auto keep = [subset](Side s) {
        switch (subset) {
            case SideSubset::Buy: return s == Side::Buy;
            case SideSubset::Sell: return s == Side::Sell;
            case SideSubset::Known: return s != Side::Unknown;
            default: return true;
        }
    };
    TapeSummary t;
    // Welford accumulators for price and per-trade volume.
    double pm = 0.0, pm2 = 0.0, vm = 0.0, vm2 = 0.0, total_volume = 0.0;
    std::size_t unknown = 0;
    std::set<std::int64_t> days;
    for (const auto& r : records) {
        if (!keep(r.side)) continue;
        ++t.trade_count;
        const double n = static_cast<double>(t.trade_count);
        if (t.trade_count == 1) {
            t.min_price = t.max_price = r.price;
        } else {
            t.min_price = std::min(t.min_price, r.price);
            t.max_price = std::max(t.max_price, r.price);
        }
        const double dp = r.price - pm;
        pm += dp / n;
        pm2 += dp * (r.price - pm);
        const double v = static_cast<double>(r.volume);
        const double dv = v - vm;
        vm += dv / n;
        vm2 += dv * (v - vm);
        total_volume += v;
        if (r.side == Side::Unknown) ++unknown;
        days.insert(r.date.serial());
    }
    if (t.trade_count == 0) throw_data("no records");
    const double n = static_cast<double>(t.trade_count);
    t.avg_price = pm;
    t.std_price = t.trade_count > 1 ? std::sqrt(pm2 / (n - 1.0)) : 0.0;
    t.sample_volume_variance = t.trade_count > 1 ? vm2 / (n - 1.0) : 0.0;
    t.trading_days = days.size();
    t.avg_daily_volume = total_volume / static_cast<double>(days.size());
    t.unknown_side_fraction = static_cast<double>(unknown) / n;
    return t;
}

ValidationReport validate(const std::vector<TapeRecord>& records, const std::vector<RowError>& rejected,
                          double threshold) {
    ValidationReport v;
    v.records = records.size();
    v.threshold = threshold;
    for (const auto& r : records)
        if (r.side == Side::Unknown) ++v.unknown;
    v.unknown_side_fraction = records.empty() ? 0.0 : static_cast<double>(v.unknown) / static_cast<double>(records.size());
    v.unknown_flag = v.unknown_side_fraction > threshold;
    for (const auto& e : rejected) ++v.rejected_by_reason[e.reason];
    v.rejected_total = rejected.size();
    return v;
}

}  // namespace dualstate
