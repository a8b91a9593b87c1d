#include "dualstate/synth_market.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace dualstate {

namespace {

constexpr double kBucketDelta = 0.5;  // pairs are kept inside one bucket of this width

double round2(double p) { return std::round(p * 100.0) / 100.0; }

bool valid_coupling(double g) { return std::isfinite(g) && std::abs(g) <= 1.0; }

std::vector<double> standardize(std::vector<double> x) {
    if (x.empty()) return x;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    const double sd = std::sqrt(ss / static_cast<double>(x.size()));
    for (double& v : x) v = sd > 0.0 ? (v - m) / sd : 0.0;
    return x;
}

const Shock* shock_at(const std::vector<Shock>& shocks, int day) {
    for (const auto& s : shocks)
        if (day >= s.begin && day < s.end) return &s;
    return nullptr;
}

std::vector<TapeRecord> gen_trader(const MarketConfig& cfg, const GroundTruth& truth, int trader) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(trader)));
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::normal_distribution<double> N(0.0, 1.0);
    std::lognormal_distribution<double> LN(cfg.volume_mu, cfg.volume_sigma);
    std::poisson_distribution<int> P(cfg.trades_per_day);

    std::vector<double> hot(static_cast<std::size_t>(std::max(cfg.hot_spots, 1)));
    for (double& h : hot) h = U(rng) * cfg.hot_span;
    std::uniform_int_distribution<std::size_t> pick(0, hot.size() - 1);

    std::vector<TapeRecord> out;
    out.reserve(static_cast<std::size_t>(cfg.n_days * cfg.trades_per_day * 1.1));
    double ref = cfg.price0;
    for (int t = 0; t < cfg.n_days; ++t) {
        const auto ti = static_cast<std::size_t>(t);
        const Shock* shock = shock_at(cfg.shocks, t);
        const double vol_mult = shock ? shock->volume_mult : 1.0;
        const double ss = truth.spread[ti];
        const double p_buy = std::clamp(0.5 + 0.5 * truth.tilt[ti], 0.05, 0.95);
        const double p_up = 0.5 + 0.5 * std::tanh((truth.level[ti] - ref) / cfg.level_pull);
        const Date date = truth.calendar[ti];
        const std::size_t day_begin = out.size();

        auto emit = [&](double price, Side side, std::int64_t vol) {
            if (cfg.unknown_fraction > 0.0 && U(rng) < cfg.unknown_fraction) side = Side::Unknown;
            if (vol > 0) out.push_back({date, std::max(round2(price), 0.01), side, vol});
        };
        auto draw_volume = [&] {
            const double v = std::max(1.0, std::round(LN(rng)));
            return static_cast<std::int64_t>(std::round(v * vol_mult));
        };

        const int n = P(rng);
        for (int e = 0; e < n; ++e) {
            const double d = U(rng) < p_up ? 1.0 : -1.0;
            if (cfg.paired_fraction > 0.0 && U(rng) < cfg.paired_fraction) {
                // Round trip at one mid: redraw until both rounded legs share a bucket.
                double lo = 0.0, hi = 0.0;
                for (int attempt = 0; attempt < 64; ++attempt) {
                    const double c = ss + U(rng) * std::max(cfg.diffuse_span - 1.0 - ss, 0.0);
                    const double mid = ref + d * c;
                    hi = round2(mid + ss / 2.0);
                    lo = round2(mid - ss / 2.0);
                    const double ch = std::abs(hi - ref) / kBucketDelta, cl = std::abs(lo - ref) / kBucketDelta;
                    const bool edge = std::abs(ch - std::round(ch)) < 1e-6 || std::abs(cl - std::round(cl)) < 1e-6;
                    if (std::floor(ch) == std::floor(cl) && !edge && lo > 0.01) break;
                }
                const auto v = draw_volume();
                emit(hi, Side::Buy, v);
                emit(lo, Side::Sell, v);
                continue;
            }
            const double u = U(rng);
            Side side;
            bool at_hot;
            if (u < cfg.accumulation) {
                side = Side::Buy;
                at_hot = true;
            } else {
                side = U(rng) < p_buy ? Side::Buy : Side::Sell;
                at_hot = side == Side::Buy && U(rng) < cfg.hot_prob;
            }
            double c;
            if (at_hot) c = std::abs(hot[pick(rng)] + N(rng) * cfg.hot_jitter);
            else c = U(rng) * cfg.diffuse_span;
            const double half = (side == Side::Buy ? 0.5 : -0.5) * ss;
            emit(ref + d * c + half, side, draw_volume());
        }

        double pv = 0.0, v = 0.0;
        for (std::size_t i = day_begin; i < out.size(); ++i) {
            const double vol = static_cast<double>(out[i].volume);
            pv += out[i].price * vol;
            v += vol;
        }
        if (t == 0 && cfg.opening_cross && v > 0.0) {
            // Panels reference the first day to its own VWAP; an unsigned cross pins
            // that VWAP to price0 so day 0 is bucketed like every later day.
            double big = std::max(v, 1000.0);
            double p = round2((ref * (v + big) - pv) / big);
            while (p < 0.01) {
                big *= 2.0;
                p = round2((ref * (v + big) - pv) / big);
            }
            const auto vol = static_cast<std::int64_t>(big);
            out.push_back({date, p, Side::Unknown, vol});
            pv += p * static_cast<double>(vol);
            v += static_cast<double>(vol);
        }
        if (v > 0.0) ref = pv / v;
    }
    return out;
}

}  // namespace

void MarketConfig::check() const {
    if (n_traders < 1) throw_usage("n_traders must be >= 1");
    if (n_days < 2) throw_usage("n_days must be >= 2");
    if (!(trades_per_day >= 0.0) || !(volume_sigma >= 0.0) || !(spread >= 0.0) || !(level_sigma >= 0.0))
        throw_usage("intensities must be nonnegative");
    if (!(price0 > 0.0) || !(level_pull > 0.0)) throw_usage("price0 and level_pull must be positive");
    if (!valid_coupling(g_sent) || !valid_coupling(g_ret) || !valid_coupling(g_yield))
        throw_usage("couplings must lie in [-1, 1]");
    if (!std::isfinite(g_liq)) throw_usage("g_liq must be finite");
    for (double phi : {ar.sentiment, ar.returns, ar.yield})
        if (!(std::abs(phi) < 1.0)) throw_usage("AR coefficients must lie in (-1, 1)");
    if (!(std::abs(ar.returns_on_sentiment) <= 1.0)) throw_usage("returns cross-loading must lie in [-1, 1]");
    for (double f : {accumulation, hot_prob, paired_fraction, unknown_fraction})
        if (!(f >= 0.0 && f <= 1.0)) throw_usage("fractions must lie in [0, 1]");
    if (hot_spots < 1 || !(hot_span > 0.0) || !(diffuse_span > 0.0) || !(hot_jitter >= 0.0))
        throw_usage("invalid hot-spot parameters");
    for (const auto& s : shocks) {
        if (s.begin < 0 || s.end > n_days || s.begin >= s.end) throw_usage("shock window outside the sample");
        if (!(s.volume_mult >= 0.0) || !(s.spread_mult >= 0.0)) throw_usage("shock multipliers must be nonnegative");
    }
}

std::vector<Date> trading_calendar(Date start, int n_days) {
    std::vector<Date> out;
    out.reserve(static_cast<std::size_t>(std::max(n_days, 0)));
    std::int64_t s = start.serial();
    while (static_cast<int>(out.size()) < n_days) {
        const Date d = Date::from_serial(s++);
        const int wd = d.weekday();
        if (wd != 0 && wd != 6) out.push_back(d);
    }
    return out;
}

std::vector<double> ar1_path(int n, double phi, std::mt19937_64& rng) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> x(static_cast<std::size_t>(std::max(n, 0)));
    if (x.empty()) return x;
    x[0] = N(rng) / std::sqrt(1.0 - phi * phi);
    for (std::size_t m = 1; m < x.size(); ++m) x[m] = phi * x[m - 1] + N(rng);
    return x;
}

GroundTruth gen_indexes(const MarketConfig& config) {
    config.check();
    GroundTruth g;
    g.calendar = trading_calendar(config.start, config.n_days);
    const int m0 = g.calendar.front().month_key();
    const int m1 = g.calendar.back().month_key();
    const int n_months = m1 - m0 + 1;
    for (const auto& d : g.calendar) g.month_of_day.push_back(d.month_key());

    std::mt19937_64 rng(mix_seed(config.seed, 1));
    const auto sent = standardize(ar1_path(n_months, config.ar.sentiment, rng));
    const auto own = standardize(ar1_path(n_months, config.ar.returns, rng));
    const auto yld = standardize(ar1_path(n_months, config.ar.yield, rng));
    const double b = config.ar.returns_on_sentiment;
    std::vector<double> ret(static_cast<std::size_t>(n_months));
    for (std::size_t m = 0; m < ret.size(); ++m) ret[m] = b * sent[m] + std::sqrt(1.0 - b * b) * own[m];

    std::vector<int> months(static_cast<std::size_t>(n_months));
    for (int m = 0; m < n_months; ++m) months[static_cast<std::size_t>(m)] = m0 + m;
    g.sentiment = {"sentiment", months, sent};
    g.returns = {"returns", months, standardize(ret)};
    g.yield = {"yield", months, yld};

    std::mt19937_64 lrng(mix_seed(config.seed, 2));
    std::normal_distribution<double> N(0.0, config.level_sigma);
    double log_level = std::log(config.price0);
    for (std::size_t t = 0; t < g.calendar.size(); ++t) {
        if (t > 0) log_level += N(lrng);
        g.level.push_back(std::exp(log_level));
        const auto m = static_cast<std::size_t>(g.month_of_day[t] - m0);
        const double zs = g.sentiment.values[m];
        g.tilt.push_back(config.g_sent * zs + config.g_ret * g.returns.values[m] + config.g_yield * g.yield.values[m]);
        const Shock* s = shock_at(config.shocks, static_cast<int>(t));
        g.spread.push_back(config.spread * std::exp(config.g_liq * zs) * (s ? s->spread_mult : 1.0));
    }
    g.shocks = config.shocks;
    return g;
}

Market gen_tapes(const MarketConfig& config, const GroundTruth& indexes, Exec exec) {
    config.check();
    if (indexes.calendar.size() != static_cast<std::size_t>(config.n_days))
        throw_usage("indexes do not span the configured days");
    Market m;
    m.truth = indexes;
    m.tapes.resize(static_cast<std::size_t>(config.n_traders));
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (int k = 0; k < config.n_traders; ++k) m.tapes[static_cast<std::size_t>(k)] = gen_trader(config, indexes, k);
    return m;
}

Market generate(const MarketConfig& config, Exec exec) { return gen_tapes(config, gen_indexes(config), exec); }

MarketConfig inject_shock(const MarketConfig& config, const Shock& shock) {
    if (shock.begin < 0 || shock.end > config.n_days || shock.begin >= shock.end)
        throw_usage("shock window outside the sample");
    for (const auto& s : config.shocks)
        if (shock.begin < s.end && s.begin < shock.end) throw_usage("overlapping shocks");
    MarketConfig out = config;
    out.shocks.push_back(shock);
    std::sort(out.shocks.begin(), out.shocks.end(), [](const Shock& a, const Shock& b) { return a.begin < b.begin; });
    out.check();
    return out;
}

std::vector<TapeRecord> balanced_book(int n_days, double level, double spread, double delta, int n_buckets,
                                      std::int64_t volume, Date start) {
    std::vector<TapeRecord> out;
    for (const auto& d : trading_calendar(start, n_days)) {
        for (int k = 0; k < n_buckets; ++k) {
            for (double sign : {1.0, -1.0}) {
                const double mid = level + sign * (k + 0.5) * delta;
                out.push_back({d, mid + spread / 2.0, Side::Buy, volume});
                out.push_back({d, mid - spread / 2.0, Side::Sell, volume});
            }
        }
    }
    return out;
}

std::string truth_json(const GroundTruth& truth) {
    nlohmann::json j;
    auto series = [](const IndexSeries& s) {
        nlohmann::json o;
        o["name"] = s.name;
        std::vector<std::string> months;
        for (int m : s.months) months.push_back(date_from_month_key(m).iso().substr(0, 7));
        o["months"] = months;
        o["values"] = s.values;
        return o;
    };
    j["indexes"] = {series(truth.sentiment), series(truth.returns), series(truth.yield)};
    std::vector<std::string> dates;
    for (const auto& d : truth.calendar) dates.push_back(d.iso());
    j["calendar"] = dates;
    j["tilt"] = truth.tilt;
    j["level"] = truth.level;
    j["spread"] = truth.spread;
    auto& sh = j["shocks"] = nlohmann::json::array();
    for (const auto& s : truth.shocks)
        sh.push_back({{"begin", s.begin}, {"end", s.end}, {"volume_mult", s.volume_mult}, {"spread_mult", s.spread_mult}});
    return j.dump(1);
}

}  // namespace dualstate
