#include "dualstate/spectral.hpp"

#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

namespace dualstate::spectral {

namespace {

struct PlanCache {
    std::mutex mu;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

// Planning is not thread-safe in FFTW; execution on fresh arrays is.
fftw_plan plan_for(const std::vector<int>& extents, int sign) {
    auto& c = cache();
    std::lock_guard<std::mutex> lock(c.mu);
    auto key = std::make_pair(extents, sign);
    auto it = c.plans.find(key);
    if (it != c.plans.end()) return it->second;
    std::size_t n = 1;
    for (int e : extents) n *= static_cast<std::size_t>(e);
    auto* a = fftw_alloc_complex(n);
    auto* b = fftw_alloc_complex(n);
    fftw_plan p = fftw_plan_dft(static_cast<int>(extents.size()), extents.data(), a, b,
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(a);
    fftw_free(b);
    c.plans.emplace(key, p);
    return p;
}

}  // namespace

void dft(const std::vector<int>& extents, const cplx* in, cplx* out, int sign) {
    fftw_plan p = plan_for(extents, sign);
    // FFTW never writes to the input of an out-of-place complex transform.
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)), reinterpret_cast<fftw_complex*>(out));
}

}  // namespace dualstate::spectral
