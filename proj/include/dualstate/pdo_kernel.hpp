#pragma once

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace dualstate {

struct DiffusionParams {
    Eigen::VectorXd drift;  // a
    Eigen::MatrixXd sigma;  // symmetric positive semidefinite
    // Throws Usage on shape mismatch, asymmetry or a negative eigenvalue.
    void check() const;
};

// exp((i k.a - k' Sigma k) t)
std::complex<double> diffusion_symbol(const DiffusionParams& p, const Eigen::VectorXd& k, double t);

// Row-major samples over the tensor product of the axes (last axis fastest).
struct SpectralGrid {
    std::vector<std::vector<double>> axes;
    std::vector<std::complex<double>> values;

    static SpectralGrid uniform(const std::vector<int>& n, const std::vector<double>& lower,
                                const std::vector<double>& length);
    std::vector<int> extents() const;
    // Angular wavenumbers of one axis in transform order: 2 pi m / (n h).
    std::vector<double> wavenumbers(std::size_t axis) const;
    // Throws Data on a non-uniform axis or a value count mismatch.
    void check() const;
};

// Periodic spectral solution: transform, multiply by the symbol, invert.
// At an even-length Nyquist index the symbol is averaged over +k and -k so
// real inputs stay real.
SpectralGrid pdo_evolve(const SpectralGrid& f, const DiffusionParams& p, double t);

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& M);

// Y_0 = X0, Y_{s+1} = E (Y_s + noise_s dt) with E = exp(beta dt); returns Y_T, i.e.
// exp(beta T dt) X0 + sum_{s<T} exp(beta (T - s) dt) noise_s dt.
Eigen::VectorXd propagate_state(const Eigen::VectorXd& x0, const Eigen::MatrixXd& beta,
                                const std::vector<Eigen::VectorXd>& noise, int steps, double dt);

// exp(beta (T - t)); throws Usage when T < t.
Eigen::MatrixXd beta_symbol(const Eigen::MatrixXd& beta, double t, double T);

void write_grid_csv(std::ostream& out, const SpectralGrid& g);

}  // namespace dualstate
