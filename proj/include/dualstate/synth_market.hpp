#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dualstate/common.hpp"
#include "dualstate/index_series.hpp"
#include "dualstate/tape_io.hpp"

namespace dualstate {

struct Shock {
    int begin = 0;  // trading-day index, inclusive
    int end = 0;    // exclusive
    double volume_mult = 1.0;
    double spread_mult = 1.0;
};

struct IndexAR {
    double sentiment = 0.6;
    double returns = 0.3;
    double yield = 0.5;
    double returns_on_sentiment = 0.5;  // cross-loading of returns on sentiment
};

struct MarketConfig {
    int n_traders = 5;
    int n_days = 485;
    Date start{2009, 1, 5};
    std::uint64_t seed = 1;

    double trades_per_day = 130.0;  // Poisson mean of order events per trader-day
    double price0 = 9.0;
    double level_sigma = 0.01;      // daily log step of the shared level
    double level_pull = 4.0;        // CNY scale of the direction pull toward the level
    double volume_mu = 4.690;       // lognormal log-mean (ln 150 - 0.32)
    double volume_sigma = 0.8;
    double spread = 0.02;

    double g_sent = 0.9;
    double g_ret = 0.0;
    double g_yield = 0.0;
    double g_liq = 0.0;             // spread = spread * exp(g_liq * sentiment)
    IndexAR ar;

    // Directional flow: a share of trades are accumulation buys at trader hot spots;
    // the rest buy with the tilted probability. Buys land on a hot spot with
    // probability hot_prob, sells spread uniformly over [0, diffuse_span).
    double accumulation = 0.3;
    double hot_prob = 0.9;
    int hot_spots = 32;
    double hot_span = 8.0;
    double hot_jitter = 0.01;
    double diffuse_span = 8.5;

    double paired_fraction = 0.0;   // dealer round trips: both legs in one bucket
    double unknown_fraction = 0.0;  // records emitted without a side flag
    bool opening_cross = true;      // one unsigned day-0 trade pinning that day's VWAP to price0

    std::vector<Shock> shocks;

    void check() const;
};

struct GroundTruth {
    std::vector<Date> calendar;
    std::vector<int> month_of_day;   // month key per trading day
    IndexSeries sentiment, returns, yield;  // standardized
    std::vector<double> tilt;        // planted imbalance tilt per day
    std::vector<double> level;       // shared price level per day
    std::vector<double> spread;      // effective spread per day
    std::vector<Shock> shocks;
};

struct Market {
    std::vector<std::vector<TapeRecord>> tapes;
    GroundTruth truth;
};

// Weekdays starting at `start`.
std::vector<Date> trading_calendar(Date start, int n_days);

// Stationary AR(1) path, x0 drawn from the stationary law.
std::vector<double> ar1_path(int n, double phi, std::mt19937_64& rng);

GroundTruth gen_indexes(const MarketConfig& config);
Market gen_tapes(const MarketConfig& config, const GroundTruth& indexes, Exec exec = Exec::Parallel);
Market generate(const MarketConfig& config, Exec exec = Exec::Parallel);

// Returns a copy with the shock registered. Throws Usage on overlap or out-of-sample windows.
MarketConfig inject_shock(const MarketConfig& config, const Shock& shock);

// Identical days of paired trades at level +- (k + 1/2) delta in every bucket:
// buy at mid + spread/2, sell at mid - spread/2, `volume` shares per leg.
std::vector<TapeRecord> balanced_book(int n_days, double level, double spread, double delta, int n_buckets,
                                      std::int64_t volume, Date start = {2009, 1, 5});

std::string truth_json(const GroundTruth& truth);

}  // namespace dualstate
