#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dualstate/bucket_panel.hpp"
#include "dualstate/index_series.hpp"
#include "dualstate/neural_kit.hpp"

namespace dualstate {

// Per bucket: ask(t-1) * buys(t) - bid(t-1) * sells(t), with ask and bid the
// prior-day buy-side and sell-side VWAPs. A side with no prior-day quote
// contributes 0 and marks the bucket in `no_quote`.
std::vector<double> trading_cost(const DailyPanel& prev, const DailyPanel& cur, std::vector<bool>* no_quote = nullptr);

// |pi| / ((buys(t) + sells(t-1)) / 2); zero denominator gives 0 and marks `illiquid`.
std::vector<double> amihud_lambda(const std::vector<double>& pi, const DailyPanel& prev, const DailyPanel& cur,
                                  std::vector<bool>* illiquid = nullptr);

struct CostSeries {
    Eigen::MatrixXd pi;              // (T-1) x n_buckets
    Eigen::MatrixXd lambda;          // (T-1) x n_buckets
    std::vector<double> lambda_avg;  // bucket mean per row
    std::vector<Date> dates;         // later day of each pair
    std::size_t no_quote = 0;
    std::size_t illiquid = 0;
};

CostSeries cost_series(const PanelSeries& series, Exec exec = Exec::Parallel);

void write_lambda_csv(std::ostream& out, const CostSeries& c);
void write_lambda_avg_csv(std::ostream& out, const CostSeries& c);

// Windows are [begin, end) ranges of cost-series rows.
struct EventStudyConfig {
    int period_length = 60;
    int n_periods = 8;
    std::pair<int, int> training_periods{0, 1};
    std::vector<std::pair<int, int>> prediction_windows;  // empty: five 120-row windows stepping by 60

    int window_rows = 21;        // CNN input height
    int min_month_rows = 10;     // months with fewer rows inside a window are skipped
    int rounds = 150;
    double learning_rate = 0.02;
    nn::Activation activation = nn::Activation::ReLU;
    int hidden = 16;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int permutation_draws = 10000;
    std::uint64_t permutation_seed = 1;

    std::vector<std::pair<int, int>> windows() const;
    void check(std::size_t rows) const;
};

struct WindowResult {
    int begin = 0, end = 0;
    std::size_t months = 0;
    std::size_t reference_months = 0;
    std::optional<double> r_pearson, r_spearman;
    std::optional<double> ref_pearson, ref_spearman;
    std::optional<double> p_pearson, p_spearman;  // empty = NA
};

struct HypothesisReport {
    std::string index;
    std::vector<WindowResult> windows;
    std::optional<double> full_pearson;  // average-lambda vs index over all eligible months
};

// Trains the CNN on sliding windows of standardized lambda rows inside the
// training periods (label: mean monthly index over the window rows), then
// predicts each eligible month of each window and compares the window's
// prediction/index correlation with the average-lambda/index correlation over
// the eligible months that do not touch the window.
HypothesisReport event_study(const CostSeries& costs, const IndexSeries& index, const EventStudyConfig& config,
                             Exec exec = Exec::Parallel);

std::string hypothesis_json(const HypothesisReport& r);
void write_hypothesis_csv(std::ostream& out, const HypothesisReport& r);

}  // namespace dualstate
