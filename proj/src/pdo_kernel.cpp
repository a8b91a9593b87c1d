#include "dualstate/pdo_kernel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <unsupported/Eigen/MatrixFunctions>

#include "dualstate/common.hpp"
#include "dualstate/spectral.hpp"

namespace dualstate {

void DiffusionParams::check() const {
    const auto n = drift.size();
    if (sigma.rows() != n || sigma.cols() != n) throw_usage("drift and diffusion dimensions differ");
    if (!drift.allFinite() || !sigma.allFinite()) throw_usage("diffusion parameters must be finite");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) throw_usage("diffusion matrix is not symmetric");
    if (n > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * scale) throw_usage("diffusion matrix is not positive semidefinite");
    }
}

std::complex<double> diffusion_symbol(const DiffusionParams& p, const Eigen::VectorXd& k, double t) {
    if (k.size() != p.drift.size()) throw_usage("wavenumber dimension does not match the drift");
    const double re = -k.dot(p.sigma * k) * t;
    const double im = k.dot(p.drift) * t;
    return std::exp(std::complex<double>(re, im));
}

SpectralGrid SpectralGrid::uniform(const std::vector<int>& n, const std::vector<double>& lower,
                                   const std::vector<double>& length) {
    if (n.empty() || n.size() != lower.size() || n.size() != length.size()) throw_usage("grid axis specs differ in length");
    SpectralGrid g;
    std::size_t total = 1;
    for (std::size_t d = 0; d < n.size(); ++d) {
        if (n[d] < 1 || !(length[d] > 0.0)) throw_usage("grid axes need positive size and length");
        std::vector<double> ax(static_cast<std::size_t>(n[d]));
        const double h = length[d] / n[d];
        for (int i = 0; i < n[d]; ++i) ax[static_cast<std::size_t>(i)] = lower[d] + i * h;
        g.axes.push_back(std::move(ax));
        total *= static_cast<std::size_t>(n[d]);
    }
    g.values.assign(total, 0.0);
    return g;
}

std::vector<int> SpectralGrid::extents() const {
    std::vector<int> e;
    for (const auto& a : axes) e.push_back(static_cast<int>(a.size()));
    return e;
}

void SpectralGrid::check() const {
    if (axes.empty()) throw_data("grid has no axes");
    std::size_t total = 1;
    for (const auto& a : axes) {
        if (a.empty()) throw_data("grid axis is empty");
        total *= a.size();
        if (a.size() < 2) continue;
        const double h = a[1] - a[0];
        if (!(h > 0.0)) throw_data("grid axis is not increasing");
        for (std::size_t i = 1; i < a.size(); ++i)
            if (std::abs((a[i] - a[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) throw_data("grid is not uniform");
    }
    if (values.size() != total) throw_data("grid value count does not match its points");
}

std::vector<double> SpectralGrid::wavenumbers(std::size_t axis) const {
    const auto& a = axes.at(axis);
    const auto n = static_cast<int>(a.size());
    const double h = n > 1 ? a[1] - a[0] : 1.0;
    std::vector<double> k(static_cast<std::size_t>(n));
    for (int m = 0; m < n; ++m) {
        const int mm = m <= (n - 1) / 2 ? m : m - n;  // even n: Nyquist lands on -n/2
        k[static_cast<std::size_t>(m)] = 2.0 * std::numbers::pi * mm / (n * h);
    }
    return k;
}

SpectralGrid pdo_evolve(const SpectralGrid& f, const DiffusionParams& p, double t) {
    f.check();
    p.check();
    if (!(t >= 0.0)) throw_usage("evolution time must be nonnegative");
    const std::size_t dim = f.axes.size();
    if (static_cast<std::size_t>(p.drift.size()) != dim) throw_usage("diffusion dimension does not match the grid");
    const auto ext = f.extents();

    std::vector<spectral::cplx> F(f.values.size());
    spectral::dft(ext, f.values.data(), F.data(), -1);

    std::vector<std::vector<double>> ks(dim);
    for (std::size_t d = 0; d < dim; ++d) ks[d] = f.wavenumbers(d);

    std::vector<int> idx(dim, 0);
    Eigen::VectorXd k(static_cast<Eigen::Index>(dim));
    for (std::size_t lin = 0; lin < F.size(); ++lin) {
        std::vector<std::size_t> nyq;
        for (std::size_t d = 0; d < dim; ++d) {
            k(static_cast<Eigen::Index>(d)) = ks[d][static_cast<std::size_t>(idx[d])];
            if (ext[d] % 2 == 0 && ext[d] > 1 && idx[d] == ext[d] / 2) nyq.push_back(d);
        }
        std::complex<double> A = 0.0;
        const std::size_t combos = std::size_t{1} << nyq.size();
        for (std::size_t c = 0; c < combos; ++c) {
            Eigen::VectorXd kc = k;
            for (std::size_t j = 0; j < nyq.size(); ++j)
                if (c >> j & 1U) kc(static_cast<Eigen::Index>(nyq[j])) = -kc(static_cast<Eigen::Index>(nyq[j]));
            A += diffusion_symbol(p, kc, t);
        }
        F[lin] *= A / static_cast<double>(combos);
        for (std::size_t d = dim; d-- > 0;) {
            if (++idx[d] < ext[d]) break;
            idx[d] = 0;
        }
    }

    SpectralGrid out = f;
    spectral::dft(ext, F.data(), out.values.data(), +1);
    const double inv = 1.0 / static_cast<double>(F.size());
    for (auto& v : out.values) v *= inv;
    return out;
}

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& M) {
    if (M.rows() != M.cols()) throw_usage("matrix_exp needs a square matrix");
    if (!M.allFinite()) throw_usage("matrix_exp needs finite entries");
    if (M.size() == 0) return M;
    return M.exp();
}

Eigen::VectorXd propagate_state(const Eigen::VectorXd& x0, const Eigen::MatrixXd& beta,
                                const std::vector<Eigen::VectorXd>& noise, int steps, double dt) {
    if (beta.rows() != x0.size() || beta.cols() != x0.size()) throw_usage("beta and state dimensions differ");
    if (steps < 0) throw_usage("steps must be nonnegative");
    if (!noise.empty() && noise.size() < static_cast<std::size_t>(steps)) throw_usage("noise path shorter than the steps");
    const Eigen::MatrixXd E = matrix_exp(beta * dt);
    Eigen::VectorXd y = x0;
    for (int s = 0; s < steps; ++s) {
        if (!noise.empty()) {
            const auto& e = noise[static_cast<std::size_t>(s)];
            if (e.size() != x0.size()) throw_usage("noise and state dimensions differ");
            y += e * dt;
        }
        y = E * y;
    }
    return y;
}

Eigen::MatrixXd beta_symbol(const Eigen::MatrixXd& beta, double t, double T) {
    if (T < t) throw_usage("beta_symbol needs T >= t");
    return matrix_exp(beta * (T - t));
}

void write_grid_csv(std::ostream& out, const SpectralGrid& g) {
    g.check();
    const auto ext = g.extents();
    out << "point,re,im\n";
    std::vector<int> idx(ext.size(), 0);
    for (std::size_t lin = 0; lin < g.values.size(); ++lin) {
        for (std::size_t d = 0; d < ext.size(); ++d) {
            if (d) out << ' ';
            out << fmt_double(g.axes[d][static_cast<std::size_t>(idx[d])]);
        }
        out << ',' << fmt_double(g.values[lin].real()) << ',' << fmt_double(g.values[lin].imag()) << '\n';
        for (std::size_t d = ext.size(); d-- > 0;) {
            if (++idx[d] < ext[d]) break;
            idx[d] = 0;
        }
    }
}

}  // namespace dualstate
