#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dualstate/state_space.hpp"

namespace dualstate {

struct DualVector {
    std::vector<double> re, im;
};

// X~(w) = sum_k X(k) exp(-2 pi i w k / n), unnormalized.
DualVector forward_dual(std::span<const double> row);

struct RealRow {
    std::vector<double> values;
    double max_imag = 0.0;
};

// Inverse with 1/n. Throws ErrorKind::Numeric when max |imag| > imag_tol.
RealRow inverse_dual(const DualVector& v, double imag_tol = 1e-9);

// T x n real rows -> T x 2n rows [Re | Im].
Eigen::MatrixXd stack_dual(const Eigen::MatrixXd& X);

struct FitOptions {
    bool intercept = true;
    double rcond = 1e-12;     // relative eigenvalue cutoff on the Gram matrix
    double imag_tol = 1e-9;
};

struct DualFit {
    Eigen::MatrixXd beta;       // 2n x 2n, dependent index first
    Eigen::VectorXd intercept;  // 2n, zero without intercept
    Eigen::MatrixXd fitted;     // (T-1) x 2n
    Eigen::MatrixXd dependent;  // (T-1) x 2n, Z_{t+1} - Z_t
    int rank = 0;
    int regressors = 0;
};

// Least squares of Z_{t+1} - Z_t on Z_t (plus intercept) in the stacked dual space.
DualFit fit_dual(const Eigen::MatrixXd& Z, const FitOptions& opt = {});

struct RegressionOutput {
    Eigen::MatrixXd predictions;  // (T-1) x n
    Eigen::MatrixXd residuals;    // (T-1) x n, dX - predictions
    Eigen::MatrixXd dX;           // (T-1) x n
    Eigen::MatrixXd beta;         // 2n x 2n
    Eigen::VectorXd intercept;
    double max_imag = 0.0;
    int rank = 0;
    int regressors = 0;
    std::vector<Date> dates;      // date of the later day in each dX row
};

RegressionOutput fit_beta(const StateMatrix& states, const FitOptions& opt = {});
std::vector<RegressionOutput> fit_many(const std::vector<StateMatrix>& states, const FitOptions& opt = {},
                                       Exec exec = Exec::Parallel);

struct VarianceSplit {
    std::vector<double> P, F;
    std::vector<bool> degenerate;
};

VarianceSplit variance_split(const RegressionOutput& out);

struct BetaSimilarity {
    double col_corr = 0.0;  // mean Pearson over matching columns
    double row_corr = 0.0;  // mean Pearson over matching rows
    int cols_used = 0;
    int rows_used = 0;
};

// Columns or rows that are constant in either matrix (the structurally zero
// imaginary parts of the DC and Nyquist terms) are skipped.
BetaSimilarity beta_similarity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

Eigen::MatrixXd determination_matrix(const std::vector<RegressionOutput>& outputs);

// Per-bucket residual autocorrelation at the given lag.
std::vector<double> residual_autocorr(const RegressionOutput& out, int lag = 1);

}  // namespace dualstate
