#include "dualstate/dual_regression.hpp"

#include <algorithm>
#include <cmath>

#include "dualstate/spectral.hpp"
#include "dualstate/stats.hpp"

namespace dualstate {

using spectral::cplx;

DualVector forward_dual(std::span<const double> row) {
    const std::size_t n = row.size();
    std::vector<cplx> in(n), out(n);
    for (std::size_t k = 0; k < n; ++k) in[k] = row[k];
    if (n > 0) spectral::dft({static_cast<int>(n)}, in.data(), out.data(), -1);
    DualVector v;
    v.re.resize(n);
    v.im.resize(n);
    for (std::size_t w = 0; w < n; ++w) {
        v.re[w] = out[w].real();
        v.im[w] = out[w].imag();
    }
    return v;
}

namespace {

RealRow inverse_raw(const double* re, const double* im, std::size_t n) {
    std::vector<cplx> in(n), out(n);
    for (std::size_t w = 0; w < n; ++w) in[w] = cplx(re[w], im[w]);
    RealRow r;
    r.values.resize(n);
    if (n == 0) return r;
    spectral::dft({static_cast<int>(n)}, in.data(), out.data(), +1);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        r.values[k] = out[k].real() * scale;
        r.max_imag = std::max(r.max_imag, std::abs(out[k].imag() * scale));
    }
    return r;
}

}  // namespace

RealRow inverse_dual(const DualVector& v, double imag_tol) {
    if (v.re.size() != v.im.size()) throw_usage("dual vector halves differ in length");
    auto r = inverse_raw(v.re.data(), v.im.data(), v.re.size());
    if (r.max_imag > imag_tol) throw_numeric("non-real reconstruction (max imag " + fmt_double(r.max_imag) + ")");
    return r;
}

Eigen::MatrixXd stack_dual(const Eigen::MatrixXd& X) {
    const Eigen::Index n = X.cols();
    Eigen::MatrixXd Z(X.rows(), 2 * n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
        for (Eigen::Index k = 0; k < n; ++k) row[static_cast<std::size_t>(k)] = X(t, k);
        const auto d = forward_dual(row);
        for (Eigen::Index w = 0; w < n; ++w) {
            Z(t, w) = d.re[static_cast<std::size_t>(w)];
            Z(t, n + w) = d.im[static_cast<std::size_t>(w)];
        }
    }
    return Z;
}

DualFit fit_dual(const Eigen::MatrixXd& Z, const FitOptions& opt) {
    if (Z.rows() < 2) throw_data("regression needs at least two state rows");
    const Eigen::Index T1 = Z.rows() - 1, m = Z.cols();
    const Eigen::Index p = m + (opt.intercept ? 1 : 0);

    Eigen::MatrixXd A(T1, p);
    A.leftCols(m) = Z.topRows(T1);
    if (opt.intercept) A.col(m).setOnes();
    DualFit f;
    f.dependent = Z.bottomRows(T1) - Z.topRows(T1);
    f.regressors = static_cast<int>(p);

    // Gram pseudoinverse; conjugate symmetry of real-sourced rows leaves it singular.
    const Eigen::MatrixXd G = A.transpose() * A;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        if (top > 0.0 && ev(i) > opt.rcond * top) {
            inv(i) = 1.0 / ev(i);
            ++f.rank;
        }
    }
    const Eigen::MatrixXd& V = es.eigenvectors();
    const Eigen::MatrixXd pinv = V * inv.asDiagonal() * V.transpose();
    const Eigen::MatrixXd B = pinv * (A.transpose() * f.dependent);  // p x m

    f.beta = B.topRows(m).transpose();
    f.intercept = opt.intercept ? Eigen::VectorXd(B.row(m).transpose()) : Eigen::VectorXd::Zero(m);
    f.fitted = A * B;
    return f;
}

RegressionOutput fit_beta(const StateMatrix& states, const FitOptions& opt) {
    const Eigen::MatrixXd& X = states.values;
    if (X.rows() < 2) throw_data("regression needs at least two state rows");
    const Eigen::Index n = X.cols();
    const auto fit = fit_dual(stack_dual(X), opt);

    RegressionOutput out;
    const Eigen::Index T1 = X.rows() - 1;
    out.dX = X.bottomRows(T1) - X.topRows(T1);
    out.predictions.resize(T1, n);
    for (Eigen::Index t = 0; t < T1; ++t) {
        std::vector<double> re(static_cast<std::size_t>(n)), im(static_cast<std::size_t>(n));
        for (Eigen::Index w = 0; w < n; ++w) {
            re[static_cast<std::size_t>(w)] = fit.fitted(t, w);
            im[static_cast<std::size_t>(w)] = fit.fitted(t, n + w);
        }
        const auto r = inverse_raw(re.data(), im.data(), static_cast<std::size_t>(n));
        out.max_imag = std::max(out.max_imag, r.max_imag);
        for (Eigen::Index k = 0; k < n; ++k) out.predictions(t, k) = r.values[static_cast<std::size_t>(k)];
    }
    if (out.max_imag > opt.imag_tol) throw_numeric("non-real reconstruction (max imag " + fmt_double(out.max_imag) + ")");
    out.residuals = out.dX - out.predictions;
    out.beta = fit.beta;
    out.intercept = fit.intercept;
    out.rank = fit.rank;
    out.regressors = fit.regressors;
    if (!states.dates.empty()) out.dates.assign(states.dates.begin() + 1, states.dates.end());
    return out;
}

std::vector<RegressionOutput> fit_many(const std::vector<StateMatrix>& states, const FitOptions& opt, Exec exec) {
    std::vector<RegressionOutput> out(states.size());
    std::vector<std::string> errors(states.size());
    const long n = static_cast<long>(states.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
    for (long i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = fit_beta(states[static_cast<std::size_t>(i)], opt);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty()) throw_numeric("tape " + std::to_string(i) + ": " + errors[i]);
    return out;
}

VarianceSplit variance_split(const RegressionOutput& out) {
    const Eigen::Index n = out.dX.cols();
    VarianceSplit v;
    v.P.assign(static_cast<std::size_t>(n), 0.0);
    v.F.assign(static_cast<std::size_t>(n), 0.0);
    v.degenerate.assign(static_cast<std::size_t>(n), false);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double den = out.dX.col(k).squaredNorm();
        if (!(den > 0.0)) {
            v.degenerate[static_cast<std::size_t>(k)] = true;
            continue;
        }
        v.F[static_cast<std::size_t>(k)] = out.residuals.col(k).squaredNorm() / den;
        v.P[static_cast<std::size_t>(k)] = out.predictions.col(k).squaredNorm() / den;
    }
    return v;
}

namespace {

std::optional<double> corr_of(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return stats::pearson(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())),
                          std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
}

}  // namespace

BetaSimilarity beta_similarity(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw_usage("beta matrices differ in shape");
    BetaSimilarity s;
    double cs = 0.0, rs = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (auto r = corr_of(a.col(j), b.col(j))) {
            cs += *r;
            ++s.cols_used;
        }
    }
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (auto r = corr_of(a.row(i).transpose(), b.row(i).transpose())) {
            rs += *r;
            ++s.rows_used;
        }
    }
    s.col_corr = s.cols_used ? cs / s.cols_used : 0.0;
    s.row_corr = s.rows_used ? rs / s.rows_used : 0.0;
    return s;
}

namespace {

Eigen::VectorXd row_variance(const Eigen::MatrixXd& M) {
    Eigen::VectorXd v(M.rows());
    for (Eigen::Index t = 0; t < M.rows(); ++t) {
        const double m = M.row(t).mean();
        v(t) = (M.row(t).array() - m).square().mean();
    }
    return v;
}

}  // namespace

Eigen::MatrixXd determination_matrix(const std::vector<RegressionOutput>& outputs) {
    const std::size_t n = outputs.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (outputs[i].dates != outputs[0].dates || outputs[i].predictions.rows() != outputs[0].predictions.rows())
            throw_data("determination matrix needs outputs on identical dates");
    }
    std::vector<Eigen::VectorXd> pv(n), rv(n);
    for (std::size_t i = 0; i < n; ++i) {
        pv[i] = row_variance(outputs[i].predictions);
        rv[i] = row_variance(outputs[i].residuals);
    }
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (auto r = corr_of(pv[i], rv[j])) D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *r * *r;
    return D;
}

std::vector<double> residual_autocorr(const RegressionOutput& out, int lag) {
    const Eigen::Index T = out.residuals.rows();
    std::vector<double> ac(static_cast<std::size_t>(out.residuals.cols()), 0.0);
    if (lag < 1 || T <= lag) return ac;
    for (Eigen::Index k = 0; k < out.residuals.cols(); ++k) {
        const Eigen::VectorXd a = out.residuals.col(k).head(T - lag);
        const Eigen::VectorXd b = out.residuals.col(k).tail(T - lag);
        if (auto r = corr_of(a, b)) ac[static_cast<std::size_t>(k)] = *r;
    }
    return ac;
}

}  // namespace dualstate
