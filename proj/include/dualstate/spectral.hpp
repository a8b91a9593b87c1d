#pragma once

#include <complex>
#include <vector>

namespace dualstate::spectral {

using cplx = std::complex<double>;

// Unnormalized transforms over a row-major n-D array of the given extents.
// sign = -1 forward, +1 backward. Backed by FFTW plans cached per shape;
// in and out must not alias.
void dft(const std::vector<int>& extents, const cplx* in, cplx* out, int sign);

inline std::vector<cplx> dft1(const std::vector<cplx>& in, int sign) {
    std::vector<cplx> out(in.size());
    dft({static_cast<int>(in.size())}, in.data(), out.data(), sign);
    return out;
}

}  // namespace dualstate::spectral
