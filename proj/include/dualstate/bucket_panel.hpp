#pragma once

#include <iosfwd>
#include <vector>

#include "dualstate/common.hpp"
#include "dualstate/tape_io.hpp"

namespace dualstate {

enum class ImbalanceMode { Arithmetic, Geometric };

struct BucketConfig {
    double delta = 0.5;
    int n_buckets = 16;
    int n_subcells = 50;
    ImbalanceMode imbalance = ImbalanceMode::Arithmetic;

    bool operator==(const BucketConfig&) const = default;
    void check() const;
};

struct DailyPanel {
    Date date;
    double ref_price = 0.0;
    std::vector<double> buy_vol, sell_vol, imb_vol;
    std::vector<double> buy_vwap, sell_vwap;  // 0 when the side is empty
    // n_buckets x n_subcells, row-major by bucket.
    std::vector<double> fine_buy, fine_sell;

    double total_volume = 0.0;
    double unknown_volume = 0.0;
    double discarded_volume = 0.0;
    std::size_t discarded_trades = 0;
    bool empty_day = false;

    const double* fine_buy_row(int k, int n_subcells) const { return fine_buy.data() + k * n_subcells; }
    const double* fine_sell_row(int k, int n_subcells) const { return fine_sell.data() + k * n_subcells; }
};

struct PanelSeries {
    std::vector<DailyPanel> panels;
    BucketConfig config;
    std::size_t discarded_trades = 0;
};

struct DayRef {
    Date date;
    double ref_price = 0.0;
    double volume = 0.0;
};

// Records must be date-sorted. Optional calendar inserts trade-free days
// (their reference carries forward).
std::vector<DayRef> reference_prices(const std::vector<TapeRecord>& records, const std::vector<Date>& calendar = {});

PanelSeries build_panels(const std::vector<TapeRecord>& records, const BucketConfig& config = {},
                         const std::vector<Date>& calendar = {}, Exec exec = Exec::Parallel);

struct Bucketing {
    int bucket = 0;
    int subcell = 0;
    bool discarded = false;
};

// c = |price - ref| snapped to 1e-9 so equal shifts of price and reference
// cannot move a trade across a cell edge through rounding.
Bucketing locate(double price, double ref, const BucketConfig& config);

// Long format: date, bucket, buy_vol, sell_vol, imb_vol, buy_vwap, sell_vwap.
void write_panels_csv(std::ostream& out, const PanelSeries& series);
// Wide format: date, side, bucket, then one column per sub-cell.
void write_fine_csv(std::ostream& out, const PanelSeries& series);

}  // namespace dualstate
