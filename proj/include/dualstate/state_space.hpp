#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "dualstate/bucket_panel.hpp"

namespace dualstate {

enum class StateMode { Buy, Sell, Imbalance };

const char* mode_name(StateMode m);
StateMode parse_mode(const std::string& s);

struct StateMatrix {
    Eigen::MatrixXd values;   // rows = day pairs (t, t+1)
    StateMode mode = StateMode::Imbalance;
    std::vector<Date> dates;  // date of day t+1 for row t
    std::size_t zero_variance_entries = 0;
};

std::vector<double> corr_vector(const DailyPanel& a, const DailyPanel& b, const BucketConfig& config, StateMode mode,
                                std::size_t* zero_variance = nullptr);

StateMatrix state_matrix(const PanelSeries& series, StateMode mode, Exec exec = Exec::Parallel);

struct Attenuation {
    double approx = 0.0;  // rho * (1 - (n1 + n2) / 2)
    double exact = 0.0;   // rho / sqrt((1 + n1)(1 + n2))
};

Attenuation attenuation(double rho, double nsr1, double nsr2);

// Columns: date, mode, x0..x{n-1}.
void write_states_csv(std::ostream& out, const StateMatrix& s);
StateMatrix read_states_csv(std::istream& in);

}  // namespace dualstate
