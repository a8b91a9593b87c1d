#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dualstate/common.hpp"
#include "dualstate/index_series.hpp"
#include "dualstate/neural_kit.hpp"

namespace dualstate {

struct MonthlyMoments {
    std::vector<int> months;
    Eigen::MatrixXd table;           // months x 4: mean, variance, skewness, excess kurtosis
    std::vector<std::size_t> counts; // pooled values per month
    std::vector<bool> low_sample;    // fewer than min_values pooled values
    std::vector<bool> degenerate;    // zero variance; skew and kurtosis set to 0
};

// Population moments of all residual entries falling in each calendar month.
MonthlyMoments monthly_moments(const Eigen::MatrixXd& residuals, const std::vector<Date>& dates,
                               std::size_t min_values = 8);

// One trader's regression residuals, rows dated by the later day of each pair.
struct TraderResiduals {
    std::string id;
    Eigen::MatrixXd residuals;
    std::vector<Date> dates;
};

enum class Protocol { Shallow, Deep10, CNN7 };
const char* protocol_name(Protocol p);

struct BackcastReport {
    Protocol protocol = Protocol::Shallow;
    std::string index;
    std::vector<int> months;
    std::vector<double> actual;
    std::vector<double> predicted;  // mean over runs, index units
    std::vector<double> runs;       // per-run correlation with the index
    double mean_r = 0.0;
    double half_width = 0.0;        // Student-t 10% half-width over runs
    bool undefined = false;         // constant index or predictions; r reported 0
    double in_sample_r = 0.0;       // Deep10: last-day holdout of the training trader
    std::size_t padded_months = 0;  // CNN7: windows padded or truncated
};

struct ShallowOptions {
    int hidden = 8;
    nn::Activation activation = nn::Activation::Tanh;
    int rounds = 500;
    double learning_rate = 0.05;
    std::uint64_t seed = 1;
};

// Leave-one-out over months; features and target standardized on each training fold.
BackcastReport shallow_backcast(const MonthlyMoments& moments, const IndexSeries& index, const ShallowOptions& opt = {},
                                Exec exec = Exec::Parallel);

struct DeepOptions {
    nn::Activation activation = nn::Activation::Tanh;
    int rounds = 200;
    double learning_rate = 0.02;
    std::uint64_t seed = 1;
};

// Trains on A's rows except each month's last day, checks in-sample on those last days,
// then averages predictions over B's rows per month.
BackcastReport deep_backcast(const TraderResiduals& train, const TraderResiduals& predict, const IndexSeries& index,
                             const DeepOptions& opt = {});

struct CnnOptions {
    int runs = 6;
    std::vector<std::uint64_t> seeds;  // empty: 1..runs
    int rounds = 60;
    double learning_rate = 0.02;
    nn::Activation activation = nn::Activation::Tanh;
    nn::PoolKind pool = nn::PoolKind::Average;
    int hidden = 16;
    int window_rows = 21;
};

// Month windows: that month's residual rows zero-padded or truncated to window_rows.
std::vector<std::vector<double>> month_windows(const TraderResiduals& tr, const std::vector<int>& months, int rows,
                                               std::size_t* padded = nullptr);

// Training and prediction traders must be disjoint (checked by id).
BackcastReport cnn_backcast(const std::vector<TraderResiduals>& training, const std::vector<TraderResiduals>& prediction,
                            const IndexSeries& index, const CnnOptions& opt = {}, Exec exec = Exec::Parallel);

std::string report_json(const BackcastReport& r);

}  // namespace dualstate
