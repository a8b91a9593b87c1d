#include "dualstate/bucket_panel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace dualstate {

void BucketConfig::check() const {
    if (!(delta > 0.0) || n_buckets < 1 || n_subcells < 1) throw_usage("invalid bucket config");
}

namespace {

struct DaySlice {
    Date date;
    std::size_t begin = 0, end = 0;  // range into records
};

std::vector<DaySlice> group_days(const std::vector<TapeRecord>& records, const std::vector<Date>& calendar) {
    std::vector<DaySlice> days;
    std::size_t i = 0;
    while (i < records.size()) {
        std::size_t j = i;
        while (j < records.size() && records[j].date == records[i].date) ++j;
        if (!days.empty() && !(days.back().date < records[i].date)) throw_data("tape records are not date-sorted");
        days.push_back({records[i].date, i, j});
        i = j;
    }
    if (calendar.empty()) return days;
    std::vector<DaySlice> merged;
    std::size_t d = 0;
    std::vector<Date> cal = calendar;
    std::sort(cal.begin(), cal.end());
    cal.erase(std::unique(cal.begin(), cal.end()), cal.end());
    for (const Date& c : cal) {
        while (d < days.size() && days[d].date < c) merged.push_back(days[d++]);
        if (d < days.size() && days[d].date == c) merged.push_back(days[d++]);
        else merged.push_back({c, 0, 0});
    }
    while (d < days.size()) merged.push_back(days[d++]);
    return merged;
}

std::vector<DayRef> refs_for(const std::vector<TapeRecord>& records, const std::vector<DaySlice>& days) {
    std::vector<DayRef> out(days.size());
    std::vector<double> vwap(days.size(), 0.0);
    double first = 0.0;
    bool have_first = false;
    for (std::size_t t = 0; t < days.size(); ++t) {
        double pv = 0.0, v = 0.0;
        for (std::size_t i = days[t].begin; i < days[t].end; ++i) {
            const double vol = static_cast<double>(records[i].volume);
            pv += records[i].price * vol;
            v += vol;
        }
        out[t].date = days[t].date;
        out[t].volume = v;
        vwap[t] = v > 0.0 ? pv / v : 0.0;
        if (v > 0.0 && !have_first) {
            first = vwap[t];
            have_first = true;
        }
    }
    // Leading trade-free days take the first observed VWAP.
    for (std::size_t t = 0; t < days.size(); ++t) {
        if (t == 0) out[t].ref_price = first;
        else out[t].ref_price = out[t - 1].volume > 0.0 ? vwap[t - 1] : out[t - 1].ref_price;
    }
    return out;
}

}  // namespace

std::vector<DayRef> reference_prices(const std::vector<TapeRecord>& records, const std::vector<Date>& calendar) {
    const auto days = group_days(records, calendar);
    if (days.empty()) throw_data("no trading days");
    return refs_for(records, days);
}

Bucketing locate(double price, double ref, const BucketConfig& config) {
    double c = std::abs(price - ref);
    c = std::round(c * 1e9) / 1e9;
    Bucketing b;
    const double kf = std::floor(c / config.delta);
    if (kf >= config.n_buckets) {
        b.discarded = true;
        b.bucket = config.n_buckets;
        return b;
    }
    b.bucket = static_cast<int>(kf);
    const double cell = config.delta / config.n_subcells;
    const double within = std::round((c - b.bucket * config.delta) * 1e9) / 1e9;
    const int s = static_cast<int>(std::floor(within / cell + 1e-9));
    b.subcell = std::clamp(s, 0, config.n_subcells - 1);
    return b;
}

PanelSeries build_panels(const std::vector<TapeRecord>& records, const BucketConfig& config,
                         const std::vector<Date>& calendar, Exec exec) {
    config.check();
    const auto days = group_days(records, calendar);
    if (days.size() < 2) throw_data("panels need at least two trading days");
    const auto refs = refs_for(records, days);

    PanelSeries series;
    series.config = config;
    series.panels.resize(days.size());
    const int nb = config.n_buckets, ns = config.n_subcells;
    const long nd = static_cast<long>(days.size());

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long t = 0; t < nd; ++t) {
        DailyPanel& p = series.panels[static_cast<std::size_t>(t)];
        p.date = days[static_cast<std::size_t>(t)].date;
        p.ref_price = refs[static_cast<std::size_t>(t)].ref_price;
        p.buy_vol.assign(nb, 0.0);
        p.sell_vol.assign(nb, 0.0);
        p.imb_vol.assign(nb, 0.0);
        p.buy_vwap.assign(nb, 0.0);
        p.sell_vwap.assign(nb, 0.0);
        p.fine_buy.assign(static_cast<std::size_t>(nb * ns), 0.0);
        p.fine_sell.assign(static_cast<std::size_t>(nb * ns), 0.0);
        std::vector<double> buy_pv(nb, 0.0), sell_pv(nb, 0.0);
        const auto& slice = days[static_cast<std::size_t>(t)];
        p.empty_day = slice.begin == slice.end;
        for (std::size_t i = slice.begin; i < slice.end; ++i) {
            const auto& r = records[i];
            const double v = static_cast<double>(r.volume);
            p.total_volume += v;
            if (r.side == Side::Unknown) {
                p.unknown_volume += v;
                continue;
            }
            const auto loc = locate(r.price, p.ref_price, config);
            if (loc.discarded) {
                p.discarded_volume += v;
                ++p.discarded_trades;
                continue;
            }
            const std::size_t cell = static_cast<std::size_t>(loc.bucket * ns + loc.subcell);
            if (r.side == Side::Buy) {
                p.buy_vol[loc.bucket] += v;
                buy_pv[loc.bucket] += v * r.price;
                p.fine_buy[cell] += v;
            } else {
                p.sell_vol[loc.bucket] += v;
                sell_pv[loc.bucket] += v * r.price;
                p.fine_sell[cell] += v;
            }
        }
        for (int k = 0; k < nb; ++k) {
            const double b = p.buy_vol[k], s = p.sell_vol[k];
            p.buy_vwap[k] = b > 0.0 ? buy_pv[k] / b : 0.0;
            p.sell_vwap[k] = s > 0.0 ? sell_pv[k] / s : 0.0;
            if (config.imbalance == ImbalanceMode::Arithmetic) p.imb_vol[k] = b - s;
            else p.imb_vol[k] = (b > s ? 1.0 : (b < s ? -1.0 : 0.0)) * std::sqrt(b * s);
        }
    }
    for (const auto& p : series.panels) series.discarded_trades += p.discarded_trades;
    return series;
}

void write_panels_csv(std::ostream& out, const PanelSeries& series) {
    out << "date,bucket,buy_vol,sell_vol,imb_vol,buy_vwap,sell_vwap\n";
    for (const auto& p : series.panels)
        for (std::size_t k = 0; k < p.buy_vol.size(); ++k)
            out << p.date.iso() << ',' << k << ',' << fmt_double(p.buy_vol[k]) << ',' << fmt_double(p.sell_vol[k]) << ','
                << fmt_double(p.imb_vol[k]) << ',' << fmt_double(p.buy_vwap[k]) << ',' << fmt_double(p.sell_vwap[k]) << '\n';
}

void write_fine_csv(std::ostream& out, const PanelSeries& series) {
    const int ns = series.config.n_subcells;
    out << "date,side,bucket";
    for (int j = 0; j < ns; ++j) out << ",c" << j;
    out << '\n';
    for (const auto& p : series.panels) {
        for (int side = 0; side < 2; ++side) {
            for (int k = 0; k < series.config.n_buckets; ++k) {
                const double* row = side == 0 ? p.fine_buy_row(k, ns) : p.fine_sell_row(k, ns);
                out << p.date.iso() << ',' << (side == 0 ? "B" : "S") << ',' << k;
                for (int j = 0; j < ns; ++j) out << ',' << fmt_double(row[j]);
                out << '\n';
            }
        }
    }
}

}  // namespace dualstate
