#include "dualstate/state_space.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace dualstate {

const char* mode_name(StateMode m) {
    switch (m) {
        case StateMode::Buy: return "buy";
        case StateMode::Sell: return "sell";
        default: return "imbalance";
    }
}

StateMode parse_mode(const std::string& s) {
    if (s == "buy") return StateMode::Buy;
    if (s == "sell") return StateMode::Sell;
    if (s == "imbalance" || s == "imb") return StateMode::Imbalance;
    throw_usage("unknown state mode '" + s + "'");
}

namespace {

void profile(const DailyPanel& p, const BucketConfig& cfg, StateMode mode, int k, std::vector<double>& out) {
    const int ns = cfg.n_subcells;
    const double* b = p.fine_buy_row(k, ns);
    const double* s = p.fine_sell_row(k, ns);
    for (int j = 0; j < ns; ++j) {
        switch (mode) {
            case StateMode::Buy: out[j] = b[j]; break;
            case StateMode::Sell: out[j] = s[j]; break;
            default:
                if (cfg.imbalance == ImbalanceMode::Arithmetic) out[j] = b[j] - s[j];
                else out[j] = (b[j] > s[j] ? 1.0 : (b[j] < s[j] ? -1.0 : 0.0)) * std::sqrt(b[j] * s[j]);
        }
    }
}

double profile_corr(const std::vector<double>& x, const std::vector<double>& y, bool& degenerate) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    degenerate = !(sxx > 0.0 && syy > 0.0);
    if (degenerate) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace

std::vector<double> corr_vector(const DailyPanel& a, const DailyPanel& b, const BucketConfig& config, StateMode mode,
                                std::size_t* zero_variance) {
    const auto need = static_cast<std::size_t>(config.n_buckets * config.n_subcells);
    if (a.fine_buy.size() != need || b.fine_buy.size() != need) throw_data("panel config mismatch");
    std::vector<double> out(static_cast<std::size_t>(config.n_buckets));
    std::vector<double> x(static_cast<std::size_t>(config.n_subcells)), y(x.size());
    for (int k = 0; k < config.n_buckets; ++k) {
        profile(a, config, mode, k, x);
        profile(b, config, mode, k, y);
        bool degenerate = false;
        out[static_cast<std::size_t>(k)] = profile_corr(x, y, degenerate);
        if (degenerate && zero_variance) ++*zero_variance;
    }
    return out;
}

StateMatrix state_matrix(const PanelSeries& series, StateMode mode, Exec exec) {
    const auto& P = series.panels;
    if (P.size() < 2) throw_data("state matrix needs at least two days");
    const long rows = static_cast<long>(P.size()) - 1;
    StateMatrix S;
    S.mode = mode;
    S.values.resize(rows, series.config.n_buckets);
    S.dates.resize(static_cast<std::size_t>(rows));
    std::vector<std::size_t> degenerate(static_cast<std::size_t>(rows), 0);

#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (long t = 0; t < rows; ++t) {
        const auto ut = static_cast<std::size_t>(t);
        const auto v = corr_vector(P[ut], P[ut + 1], series.config, mode, &degenerate[ut]);
        for (int k = 0; k < series.config.n_buckets; ++k) S.values(t, k) = v[static_cast<std::size_t>(k)];
        S.dates[ut] = P[ut + 1].date;
    }
    for (auto d : degenerate) S.zero_variance_entries += d;
    return S;
}

Attenuation attenuation(double rho, double nsr1, double nsr2) {
    if (nsr1 < 0.0 || nsr2 < 0.0 || std::abs(rho) > 1.0) throw_usage("attenuation needs nsr >= 0 and |rho| <= 1");
    return {rho * (1.0 - 0.5 * (nsr1 + nsr2)), rho / std::sqrt((1.0 + nsr1) * (1.0 + nsr2))};
}

void write_states_csv(std::ostream& out, const StateMatrix& s) {
    out << "date,mode";
    for (Eigen::Index k = 0; k < s.values.cols(); ++k) out << ",x" << k;
    out << '\n';
    for (Eigen::Index t = 0; t < s.values.rows(); ++t) {
        out << (static_cast<std::size_t>(t) < s.dates.size() ? s.dates[static_cast<std::size_t>(t)].iso() : "") << ','
            << mode_name(s.mode);
        for (Eigen::Index k = 0; k < s.values.cols(); ++k) out << ',' << fmt_double(s.values(t, k));
        out << '\n';
    }
}

StateMatrix read_states_csv(std::istream& in) {
    StateMatrix s;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            header = true;
            if (line.rfind("date", 0) == 0) continue;
        }
        std::vector<std::string_view> f;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            f.push_back(std::string_view(line).substr(start, pos == std::string::npos ? std::string::npos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        const std::string where = "states line " + std::to_string(lineno);
        if (f.size() < 3) throw_data(where + ": expected date, mode and values");
        const auto d = parse_iso_date(f[0]);
        if (!d) throw_data(where + ": malformed date");
        s.dates.push_back(*d);
        s.mode = parse_mode(std::string(f[1]));
        std::vector<double> r;
        for (std::size_t i = 2; i < f.size(); ++i) {
            double v = 0.0;
            const auto [p, ec] = std::from_chars(f[i].data(), f[i].data() + f[i].size(), v);
            if (ec != std::errc() || p != f[i].data() + f[i].size()) throw_data(where + ": malformed value");
            r.push_back(v);
        }
        if (!rows.empty() && r.size() != rows.front().size()) throw_data(where + ": ragged row");
        rows.push_back(std::move(r));
    }
    s.values.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t k = 0; k < rows[t].size(); ++k) s.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(k)) = rows[t][k];
    return s;
}

}  // namespace dualstate
