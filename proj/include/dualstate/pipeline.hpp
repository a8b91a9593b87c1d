#pragma once

#include <vector>

#include "dualstate/bucket_panel.hpp"
#include "dualstate/dual_regression.hpp"
#include "dualstate/residual_study.hpp"
#include "dualstate/state_space.hpp"

namespace dualstate {

struct TapeAnalysis {
    PanelSeries panels;
    StateMatrix states;
    RegressionOutput fit;
};

// Panels, state matrix and dual-space fit for one tape.
TapeAnalysis analyze_tape(const std::vector<TapeRecord>& records, const BucketConfig& config = {},
                          StateMode mode = StateMode::Imbalance, const FitOptions& fit = {},
                          const std::vector<Date>& calendar = {}, Exec exec = Exec::Parallel);

TraderResiduals residuals_of(const std::string& id, const TapeAnalysis& a);

}  // namespace dualstate
