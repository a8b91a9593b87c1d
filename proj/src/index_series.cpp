#include "dualstate/index_series.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "dualstate/stats.hpp"

namespace dualstate {

std::optional<double> IndexSeries::at(int month_key) const {
    if (months.empty()) return std::nullopt;
    const long i = static_cast<long>(month_key) - months.front();
    if (i < 0 || i >= static_cast<long>(months.size()) || months[static_cast<std::size_t>(i)] != month_key)
        return std::nullopt;
    return values[static_cast<std::size_t>(i)];
}

IndexSeries IndexSeries::standardized() const {
    IndexSeries s = *this;
    if (values.empty()) return s;
    const double m = stats::mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(values.size()));
    for (double& v : s.values) v = sd > 0.0 ? (v - m) / sd : v - m;
    return s;
}

void write_index_csv(std::ostream& out, const IndexSeries& s) {
    out << "month,value\n";
    for (std::size_t i = 0; i < s.months.size(); ++i)
        out << date_from_month_key(s.months[i]).iso().substr(0, 7) << ',' << fmt_double(s.values[i]) << '\n';
}

IndexSeries read_index_csv(std::istream& in, const std::string& name) {
    IndexSeries s;
    s.name = name;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw_data("index line " + std::to_string(lineno) + ": expected month,value");
        std::string month = line.substr(0, comma);
        if (month == "month") continue;
        if (month.size() == 7) month += "-01";
        const auto d = parse_iso_date(month);
        if (!d) throw_data("index line " + std::to_string(lineno) + ": malformed month");
        const std::string_view vs = std::string_view(line).substr(comma + 1);
        double v = 0.0;
        const auto [p, ec] = std::from_chars(vs.data(), vs.data() + vs.size(), v);
        if (ec != std::errc() || !std::isfinite(v)) throw_data("index line " + std::to_string(lineno) + ": malformed value");
        if (!s.months.empty() && d->month_key() != s.months.back() + 1)
            throw_data("index line " + std::to_string(lineno) + ": months must be contiguous");
        s.months.push_back(d->month_key());
        s.values.push_back(v);
    }
    return s;
}

IndexSeries read_index_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw_data("cannot open index file " + path.string());
    return read_index_csv(f, path.stem().string());
}

}  // namespace dualstate
