#include "dualstate/pipeline.hpp"

namespace dualstate {

TapeAnalysis analyze_tape(const std::vector<TapeRecord>& records, const BucketConfig& config, StateMode mode,
                          const FitOptions& fit, const std::vector<Date>& calendar, Exec exec) {
    TapeAnalysis a;
    a.panels = build_panels(records, config, calendar, exec);
    a.states = state_matrix(a.panels, mode, exec);
    a.fit = fit_beta(a.states, fit);
    return a;
}

TraderResiduals residuals_of(const std::string& id, const TapeAnalysis& a) {
    return {id, a.fit.residuals, a.fit.dates};
}

}  // namespace dualstate
