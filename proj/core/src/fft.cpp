#include "homlab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace homlab::fft {

namespace {

std::mutex plan_mutex;

using DftKey = std::tuple<std::vector<int>, int>;
using R2rKey = std::vector<int>;

fftw_plan dft_plan(const std::vector<int>& dims, int sign) {
    static std::map<DftKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    const DftKey key{dims, sign};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<fftw_complex> dummy(1);
    // Planning against a dummy buffer: UNALIGNED makes the plan valid for
    // any array passed to fftw_execute_dft later.
    fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                                dummy.data(), dummy.data(),
                                sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(key, p);
    return p;
}

fftw_plan r2r_plan(const std::vector<int>& dims) {
    static std::map<R2rKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto it = cache.find(dims);
    if (it != cache.end()) return it->second;
    std::vector<double> dummy(1);
    std::vector<fftw_r2r_kind> kinds(dims.size(), FFTW_RODFT00);
    fftw_plan p = fftw_plan_r2r(static_cast<int>(dims.size()), dims.data(),
                                dummy.data(), dummy.data(), kinds.data(),
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(dims, p);
    return p;
}

} // namespace

void torus_dft(std::complex<double>* data, const std::vector<int>& dims, int sign) {
    fftw_plan p = dft_plan(dims, sign);
    auto* raw = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(p, raw, raw);
}

void dst1(double* data, const std::vector<int>& dims) {
    fftw_plan p = r2r_plan(dims);
    fftw_execute_r2r(p, data, data);
}

double dst1_norm(const std::vector<int>& dims) {
    double s = 1.0;
    for (int n : dims) s *= 2.0 * (n + 1);
    return s;
}

} // namespace homlab::fft
