#include "mtd/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <memory>

namespace mtd::fft {
namespace {

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

ComplexGrid transform(const ComplexGrid& in, int sign) {
    ComplexGrid out(in.rows(), in.cols());
    if (in.empty()) return out;
    ComplexGrid work = in;
    auto* src = reinterpret_cast<fftw_complex*>(work.storage().data());
    auto* dst = reinterpret_cast<fftw_complex*>(out.storage().data());
    std::unique_lock lock(plan_mutex());
    Plan plan(fftw_plan_dft_2d(static_cast<int>(in.rows()), static_cast<int>(in.cols()), src, dst, sign,
                               FFTW_ESTIMATE));
    lock.unlock();
    fftw_execute(plan.get());
    return out;
}

void transform_nd(std::vector<Complex>& data, std::span<const int> dims, int sign) {
    if (data.empty()) return;
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    std::unique_lock lock(plan_mutex());
    Plan plan(fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), buf, buf, sign, FFTW_ESTIMATE));
    lock.unlock();
    fftw_execute(plan.get());
}

} // namespace

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

void forward_nd(std::vector<Complex>& data, std::span<const int> dims) { transform_nd(data, dims, FFTW_FORWARD); }

void inverse_nd(std::vector<Complex>& data, std::span<const int> dims) {
    transform_nd(data, dims, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(data.size(), 1));
    for (auto& v : data) v *= scale;
}

ComplexGrid forward(const ComplexGrid& in) { return transform(in, FFTW_FORWARD); }

ComplexGrid forward(const RealGrid& in) {
    ComplexGrid c(in.rows(), in.cols());
    std::copy(in.values().begin(), in.values().end(), c.values().begin());
    return forward(c);
}

ComplexGrid inverse(const ComplexGrid& in) {
    ComplexGrid out = transform(in, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(in.size(), 1));
    for (auto& v : out.values()) v *= scale;
    return out;
}

RealGrid inverse_real(const ComplexGrid& in) {
    const ComplexGrid c = inverse(in);
    RealGrid out(c.rows(), c.cols());
    for (std::size_t i = 0; i < c.size(); ++i) out.values()[i] = c.values()[i].real();
    return out;
}

std::size_t good_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t f : {2, 3, 5, 7})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

} // namespace mtd::fft
