#include "dualstate/liquidity_lab.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dualstate/stats.hpp"

namespace dualstate {

namespace {

void check_pair(const DailyPanel& prev, const DailyPanel& cur) {
    if (!(prev.date < cur.date)) throw_data("cost panels are not in date order");
    const auto n = prev.buy_vol.size();
    if (cur.buy_vol.size() != n || prev.sell_vol.size() != n || cur.sell_vol.size() != n || prev.buy_vwap.size() != n ||
        prev.sell_vwap.size() != n)
        throw_data("cost panels differ in bucket count");
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : "NA"; }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::vector<double> trading_cost(const DailyPanel& prev, const DailyPanel& cur, std::vector<bool>* no_quote) {
    check_pair(prev, cur);
    const auto n = cur.buy_vol.size();
    std::vector<double> pi(n, 0.0);
    if (no_quote) no_quote->assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const bool ask = prev.buy_vol[i] > 0.0;
        const bool bid = prev.sell_vol[i] > 0.0;
        pi[i] = (ask ? prev.buy_vwap[i] * cur.buy_vol[i] : 0.0) - (bid ? prev.sell_vwap[i] * cur.sell_vol[i] : 0.0);
        if (no_quote) (*no_quote)[i] = !ask || !bid;
    }
    return pi;
}

std::vector<double> amihud_lambda(const std::vector<double>& pi, const DailyPanel& prev, const DailyPanel& cur,
                                  std::vector<bool>* illiquid) {
    const auto n = pi.size();
    if (cur.buy_vol.size() != n || prev.sell_vol.size() != n) throw_data("lambda inputs differ in bucket count");
    std::vector<double> lam(n, 0.0);
    if (illiquid) illiquid->assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const double den = 0.5 * (cur.buy_vol[i] + prev.sell_vol[i]);
        if (den > 0.0) lam[i] = std::abs(pi[i]) / den;
        else if (illiquid) (*illiquid)[i] = true;
    }
    return lam;
}

CostSeries cost_series(const PanelSeries& series, Exec exec) {
    const auto& P = series.panels;
    if (P.size() < 2) throw_data("cost series needs at least two days");
    const auto T1 = static_cast<Eigen::Index>(P.size() - 1);
    const auto nb = static_cast<Eigen::Index>(series.config.n_buckets);
    CostSeries c;
    c.pi.resize(T1, nb);
    c.lambda.resize(T1, nb);
    c.lambda_avg.assign(static_cast<std::size_t>(T1), 0.0);
    std::vector<std::size_t> nq(static_cast<std::size_t>(T1)), il(static_cast<std::size_t>(T1));
    std::vector<std::string> errors(static_cast<std::size_t>(T1));
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
    for (Eigen::Index t = 0; t < T1; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        try {
            std::vector<bool> q, l;
            const auto pi = trading_cost(P[ti], P[ti + 1], &q);
            const auto lam = amihud_lambda(pi, P[ti], P[ti + 1], &l);
            double s = 0.0;
            for (Eigen::Index k = 0; k < nb; ++k) {
                c.pi(t, k) = pi[static_cast<std::size_t>(k)];
                c.lambda(t, k) = lam[static_cast<std::size_t>(k)];
                s += lam[static_cast<std::size_t>(k)];
            }
            c.lambda_avg[ti] = s / static_cast<double>(nb);
            nq[ti] = static_cast<std::size_t>(std::count(q.begin(), q.end(), true));
            il[ti] = static_cast<std::size_t>(std::count(l.begin(), l.end(), true));
        } catch (const std::exception& e) {
            errors[ti] = e.what();
        }
    }
    for (const auto& e : errors)
        if (!e.empty()) throw_data(e);
    for (std::size_t t = 0; t < nq.size(); ++t) {
        c.no_quote += nq[t];
        c.illiquid += il[t];
        c.dates.push_back(P[t + 1].date);
    }
    return c;
}

void write_lambda_csv(std::ostream& out, const CostSeries& c) {
    out << "date,bucket,pi,lambda\n";
    for (Eigen::Index t = 0; t < c.lambda.rows(); ++t)
        for (Eigen::Index k = 0; k < c.lambda.cols(); ++k)
            out << c.dates[static_cast<std::size_t>(t)].iso() << ',' << k << ',' << fmt_double(c.pi(t, k)) << ','
                << fmt_double(c.lambda(t, k)) << '\n';
}

void write_lambda_avg_csv(std::ostream& out, const CostSeries& c) {
    out << "date,lambda_avg\n";
    for (std::size_t t = 0; t < c.lambda_avg.size(); ++t)
        out << c.dates[t].iso() << ',' << fmt_double(c.lambda_avg[t]) << '\n';
}

std::vector<std::pair<int, int>> EventStudyConfig::windows() const {
    if (!prediction_windows.empty()) return prediction_windows;
    std::vector<std::pair<int, int>> w;
    for (int s = 2 * period_length; s + 2 * period_length <= n_periods * period_length; s += period_length)
        w.emplace_back(s, s + 2 * period_length);
    return w;
}

void EventStudyConfig::check(std::size_t rows) const {
    if (period_length < 1 || n_periods < 2) throw_usage("event study needs positive period length and >= 2 periods");
    const auto [p0, p1] = training_periods;
    if (p0 < 0 || p1 != p0 + 1 || p1 >= n_periods) throw_usage("training periods must be two adjacent periods");
    if (static_cast<std::size_t>(n_periods * period_length) > rows)
        throw_data("lambda series has " + std::to_string(rows) + " rows, periods need " +
                   std::to_string(n_periods * period_length));
    if (window_rows < 1 || window_rows > 2 * period_length) throw_usage("window_rows must fit inside the training sample");
    if (seeds.empty()) throw_usage("event study needs at least one seed");
    if (permutation_draws < 1) throw_usage("permutation draws must be positive");
    for (const auto& [b, e] : windows())
        if (b < 0 || e <= b || e > n_periods * period_length) throw_usage("prediction window outside the sample");
}

HypothesisReport event_study(const CostSeries& costs, const IndexSeries& index, const EventStudyConfig& config,
                             Exec exec) {
    const auto rows = static_cast<std::size_t>(costs.lambda.rows());
    config.check(rows);
    const Eigen::Index nb = costs.lambda.cols();
    const int tr0 = config.training_periods.first * config.period_length;
    const int tr1 = (config.training_periods.second + 1) * config.period_length;
    const int H = config.window_rows;

    std::vector<int> month(rows);
    for (std::size_t t = 0; t < rows; ++t) month[t] = costs.dates[t].month_key();
    auto idx_of = [&](std::size_t t) {
        const auto v = index.at(month[t]);
        if (!v) throw_data("index has no value for month " + date_from_month_key(month[t]).iso().substr(0, 7));
        return *v;
    };

    double sum = 0.0, ss = 0.0, cnt = 0.0;
    for (int t = tr0; t < tr1; ++t)
        for (Eigen::Index k = 0; k < nb; ++k) {
            const double v = costs.lambda(t, k);
            sum += v;
            ss += v * v;
            cnt += 1.0;
        }
    const double mu = sum / cnt;
    const double var = ss / cnt - mu * mu;
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;

    auto image = [&](const std::vector<std::size_t>& rows_in) {
        std::vector<double> x(static_cast<std::size_t>(H * nb));
        for (int r = 0; r < H; ++r) {
            const auto t = static_cast<Eigen::Index>(rows_in[static_cast<std::size_t>(r) % rows_in.size()]);
            for (Eigen::Index k = 0; k < nb; ++k)
                x[static_cast<std::size_t>(r * nb + k)] = (costs.lambda(t, k) - mu) / sd;
        }
        return x;
    };

    nn::Dataset data;
    for (int s = tr0; s + H <= tr1; ++s) {
        std::vector<std::size_t> win;
        double lab = 0.0;
        for (int r = s; r < s + H; ++r) {
            win.push_back(static_cast<std::size_t>(r));
            lab += idx_of(static_cast<std::size_t>(r));
        }
        data.inputs.push_back(image(win));
        data.targets.push_back(lab / H);
    }
    const double lm = stats::mean(data.targets);
    double lss = 0.0;
    for (double y : data.targets) lss += (y - lm) * (y - lm);
    const double lsd = lss > 0.0 ? std::sqrt(lss / static_cast<double>(data.targets.size())) : 1.0;
    for (double& y : data.targets) y = (y - lm) / lsd;

    const auto n_nets = static_cast<long>(config.seeds.size());
    std::vector<nn::TrainedNet> nets(config.seeds.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long i = 0; i < n_nets; ++i) {
        const auto spec = nn::cnn7(H, static_cast<int>(nb), config.activation, config.seeds[static_cast<std::size_t>(i)],
                                   config.hidden, nn::PoolKind::Average);
        nets[static_cast<std::size_t>(i)] = nn::train(nn::init_net(spec), data, config.rounds, config.learning_rate);
    }

    // Average-lambda monthly series over months with enough rows in the whole sample.
    std::map<int, std::vector<std::size_t>> month_rows;
    for (std::size_t t = 0; t < rows; ++t) month_rows[month[t]].push_back(t);
    std::map<int, double> avg_by_month;
    for (const auto& [m, rs] : month_rows) {
        if (static_cast<int>(rs.size()) < config.min_month_rows || !index.at(m)) continue;
        double a = 0.0;
        for (auto t : rs) a += costs.lambda_avg[t];
        avg_by_month[m] = a / static_cast<double>(rs.size());
    }

    HypothesisReport rep;
    rep.index = index.name;
    {
        std::vector<double> a, y;
        for (const auto& [m, v] : avg_by_month) {
            a.push_back(v);
            y.push_back(*index.at(m));
        }
        rep.full_pearson = stats::pearson(a, y);
    }

    const auto wins = config.windows();
    for (std::size_t w = 0; w < wins.size(); ++w) {
        const auto [b, e] = wins[w];
        WindowResult res;
        res.begin = b;
        res.end = e;
        std::map<int, std::vector<std::size_t>> inside;
        for (int t = b; t < e; ++t) inside[month[static_cast<std::size_t>(t)]].push_back(static_cast<std::size_t>(t));

        stats::PairSample win, ref;
        for (const auto& [m, rs] : inside) {
            if (static_cast<int>(rs.size()) < config.min_month_rows) continue;
            const auto x = image(rs);
            double p = 0.0;
            for (const auto& net : nets) p += nn::predict(net, x);
            win.x.push_back(p / static_cast<double>(nets.size()));
            win.y.push_back(idx_of(rs.front()));
        }
        for (const auto& [m, v] : avg_by_month) {
            if (inside.count(m)) continue;
            ref.x.push_back(v);
            ref.y.push_back(*index.at(m));
        }
        res.months = win.x.size();
        res.reference_months = ref.x.size();
        res.r_pearson = stats::pearson(win.x, win.y);
        res.r_spearman = stats::spearman(win.x, win.y);
        res.ref_pearson = stats::pearson(ref.x, ref.y);
        res.ref_spearman = stats::spearman(ref.x, ref.y);
        if (res.r_pearson && res.ref_pearson)
            res.p_pearson = stats::fisher_z_p(*res.r_pearson, res.months, *res.ref_pearson, res.reference_months);
        if (res.r_spearman && res.ref_spearman)
            res.p_spearman = stats::spearman_permutation_p(win, ref, config.permutation_draws,
                                                           mix_seed(config.permutation_seed, w));
        rep.windows.push_back(res);
    }
    return rep;
}

std::string hypothesis_json(const HypothesisReport& r) {
    nlohmann::json j;
    j["index"] = r.index;
    j["full_pearson"] = opt_json(r.full_pearson);
    auto& ws = j["windows"] = nlohmann::json::array();
    for (const auto& w : r.windows) {
        ws.push_back({{"begin", w.begin},
                      {"end", w.end},
                      {"months", w.months},
                      {"reference_months", w.reference_months},
                      {"r_pearson", opt_json(w.r_pearson)},
                      {"r_spearman", opt_json(w.r_spearman)},
                      {"ref_pearson", opt_json(w.ref_pearson)},
                      {"ref_spearman", opt_json(w.ref_spearman)},
                      {"p_pearson", opt_json(w.p_pearson)},
                      {"p_spearman", opt_json(w.p_spearman)}});
    }
    return j.dump();
}

void write_hypothesis_csv(std::ostream& out, const HypothesisReport& r) {
    out << "index,window,months,r_pearson,p_pearson,r_spearman,p_spearman\n";
    for (const auto& w : r.windows)
        out << r.index << ',' << w.begin << '-' << w.end << ',' << w.months << ',' << opt_str(w.r_pearson) << ','
            << opt_str(w.p_pearson) << ',' << opt_str(w.r_spearman) << ',' << opt_str(w.p_spearman) << '\n';
}

}  // namespace dualstate
