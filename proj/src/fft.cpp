#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

namespace timelab::detail {

namespace {

// FFTW plan creation is not thread safe; execution via fftw_execute_dft is.
// Plans are cached per shape and created with ESTIMATE (deterministic choice
// run to run) | UNALIGNED (execute on arbitrary caller buffers).
class PlanCache {
public:
    fftw_plan get(std::size_t n, std::size_t howmany, std::size_t stride,
                  std::size_t dist, int sign) {
        const Key key{n, howmany, stride, dist, sign};
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        std::vector<fftw_complex> buf((howmany - 1) * dist + (n - 1) * stride + 1);
        int ni = static_cast<int>(n);
        fftw_plan plan = fftw_plan_many_dft(
            1, &ni, static_cast<int>(howmany),
            buf.data(), nullptr, static_cast<int>(stride), static_cast<int>(dist),
            buf.data(), nullptr, static_cast<int>(stride), static_cast<int>(dist),
            sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        cache_.emplace(key, plan);
        return plan;
    }

private:
    using Key = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;
    std::mutex mutex_;
    std::map<Key, fftw_plan> cache_;
};

PlanCache& plans() {
    static PlanCache cache;
    return cache;
}

}  // namespace

void centered_dft(const std::complex<double>* in, std::complex<double>* out,
                  std::size_t n, double x_min, double dx, double dp, bool forward,
                  std::size_t howmany, std::size_t stride, std::size_t dist) {
    using std::numbers::pi;
    if (dist == 0) dist = n;

    // Index twist u_j = (-1)^j exp(-i pi j / n) and the x_min carrier phase;
    // together they turn the offset-frequency sum into a plain DFT.
    std::vector<std::complex<double>> twist(n), carrier(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double ph = -pi * static_cast<double>(j) / static_cast<double>(n);
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        twist[j] = sgn * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double pk = dp * (static_cast<double>(k) - 0.5 * static_cast<double>(n) + 0.5);
        const double ph = pk * x_min;
        carrier[k] = std::complex<double>(std::cos(ph), std::sin(ph));
    }

    const double fwd_scale = dx / std::sqrt(2.0 * pi);
    const double bwd_scale = dp / std::sqrt(2.0 * pi);

    fftw_plan plan = plans().get(n, howmany, stride, dist, forward ? FFTW_FORWARD : FFTW_BACKWARD);

    // Stage into a contiguous-ish scratch matching the caller layout so the
    // twists can be applied without touching the caller's input.
    std::vector<std::complex<double>> work((howmany - 1) * dist + (n - 1) * stride + 1);
    if (forward) {
        for (std::size_t h = 0; h < howmany; ++h)
            for (std::size_t j = 0; j < n; ++j)
                work[h * dist + j * stride] = in[h * dist + j * stride] * twist[j];
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()),
                         reinterpret_cast<fftw_complex*>(work.data()));
        for (std::size_t h = 0; h < howmany; ++h)
            for (std::size_t k = 0; k < n; ++k)
                out[h * dist + k * stride] =
                    work[h * dist + k * stride] * std::conj(carrier[k]) * fwd_scale;
    } else {
        for (std::size_t h = 0; h < howmany; ++h)
            for (std::size_t k = 0; k < n; ++k)
                work[h * dist + k * stride] = in[h * dist + k * stride] * carrier[k];
        fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(work.data()),
                         reinterpret_cast<fftw_complex*>(work.data()));
        for (std::size_t h = 0; h < howmany; ++h)
            for (std::size_t j = 0; j < n; ++j)
                out[h * dist + j * stride] =
                    work[h * dist + j * stride] * std::conj(twist[j]) * bwd_scale;
    }
}

}  // namespace timelab::detail
