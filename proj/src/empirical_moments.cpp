#include "mtd/empirical_moments.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "mtd/error.hpp"
#include "mtd/fft.hpp"

namespace mtd {
namespace {

int window_extent(double radius) { return static_cast<int>(std::ceil(2.0 * radius - 1e-9)); }

void check_sizes(std::size_t n_grid, double radius) {
    if (!(radius > 0.0)) throw ConfigError("image radius must be positive");
    if (static_cast<double>(n_grid) <= 4.0 * radius) {
        std::ostringstream msg;
        msg << "measurement of side " << n_grid << " is too small for radius " << radius << " (need N > 4n)";
        throw ConfigError(msg.str());
    }
}

double dot(const double* a, const double* b, std::size_t len) {
    double s = 0.0;
#pragma omp simd reduction(+ : s)
    for (std::size_t i = 0; i < len; ++i) s += a[i] * b[i];
    return s;
}

// Kahan-compensated accumulator for per-row partial sums.
struct Compensated {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

MomentSet empty_set(std::size_t n_grid, double radius) {
    MomentSet ms;
    ms.extent = window_extent(radius);
    ms.grid_size = n_grid;
    ms.radius = radius;
    ms.a2.assign(ms.shift_count(), 0.0);
    ms.a3.assign(ms.shift_count() * ms.shift_count(), 0.0);
    return ms;
}

void fill_lower(MomentSet& ms) {
    const std::size_t s = ms.shift_count();
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < i; ++j) ms.a3[i * s + j] = ms.a3[j * s + i];
}

// Rows are processed one at a time so that the m rows touched by every shift
// stay in cache; each row contributes one dot product per (l1, l2) pair.
MomentSet direct_ac(const RealGrid& g, double radius) {
    const std::size_t n_grid = g.rows();
    MomentSet ms = empty_set(n_grid, radius);
    const int m = ms.extent;
    const std::size_t s = ms.shift_count();

    Compensated a1;
    std::vector<Compensated> a2(s), a3(s * s);
    std::vector<double> prod(n_grid);

    for (std::size_t y = 0; y < n_grid; ++y) {
        const double* r0 = g.row(y);
        double row_total = 0.0;
#pragma omp simd reduction(+ : row_total)
        for (std::size_t x = 0; x < n_grid; ++x) row_total += r0[x];
        a1.add(row_total);

        for (std::size_t i1 = 0; i1 < s; ++i1) {
            const int y1 = static_cast<int>(i1) / m, x1 = static_cast<int>(i1) % m;
            if (y + static_cast<std::size_t>(y1) >= n_grid) continue;
            const std::size_t len1 = n_grid - static_cast<std::size_t>(x1);
            const double* r1 = g.row(y + static_cast<std::size_t>(y1)) + x1;
            double pair_total = 0.0;
#pragma omp simd reduction(+ : pair_total)
            for (std::size_t x = 0; x < len1; ++x) {
                prod[x] = r0[x] * r1[x];
                pair_total += prod[x];
            }
            a2[i1].add(pair_total);

            for (std::size_t i2 = i1; i2 < s; ++i2) {
                const int y2 = static_cast<int>(i2) / m, x2 = static_cast<int>(i2) % m;
                if (y + static_cast<std::size_t>(y2) >= n_grid) continue;
                const std::size_t len = n_grid - static_cast<std::size_t>(std::max(x1, x2));
                a3[i1 * s + i2].add(dot(prod.data(), g.row(y + static_cast<std::size_t>(y2)) + x2, len));
            }
        }
    }

    const double norm = 1.0 / (static_cast<double>(n_grid) * static_cast<double>(n_grid));
    ms.a1 = a1.sum * norm;
    for (std::size_t i = 0; i < s; ++i) ms.a2[i] = a2[i].sum * norm;
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = i; j < s; ++j) ms.a3[i * s + j] = a3[i * s + j].sum * norm;
    fill_lower(ms);
    return ms;
}

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const {
        std::lock_guard lock(fft::plan_mutex());
        fftw_destroy_plan(p);
    }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
template <typename T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

// C[s] = sum_x P[x] M[x + s] for s in the window, via conj(P^) M^ on a padded
// grid large enough that no circular wrap reaches the window.
MomentSet fft_ac(const RealGrid& g, double radius) {
    const std::size_t n_grid = g.rows();
    MomentSet ms = empty_set(n_grid, radius);
    const int m = ms.extent;
    const std::size_t s = ms.shift_count();
    const std::size_t side = fft::good_size(n_grid + static_cast<std::size_t>(m));
    const std::size_t half = side / 2 + 1;
    const std::size_t real_len = side * side;
    const std::size_t cplx_len = side * half;

    FftwBuffer<double> real_buf(static_cast<double*>(fftw_malloc(sizeof(double) * real_len)));
    FftwBuffer<fftw_complex> m_hat(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cplx_len)));
    FftwBuffer<fftw_complex> p_hat(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * cplx_len)));
    if (!real_buf || !m_hat || !p_hat) throw NumericalError("FFT buffer allocation failed");

    const int dims = static_cast<int>(side);
    std::unique_lock lock(fft::plan_mutex());
    Plan r2c_m(fftw_plan_dft_r2c_2d(dims, dims, real_buf.get(), m_hat.get(), FFTW_ESTIMATE));
    Plan r2c_p(fftw_plan_dft_r2c_2d(dims, dims, real_buf.get(), p_hat.get(), FFTW_ESTIMATE));
    Plan c2r(fftw_plan_dft_c2r_2d(dims, dims, p_hat.get(), real_buf.get(), FFTW_ESTIMATE));
    lock.unlock();

    auto load = [&](auto&& value) {
        std::fill(real_buf.get(), real_buf.get() + real_len, 0.0);
        for (std::size_t y = 0; y < n_grid; ++y)
            for (std::size_t x = 0; x < n_grid; ++x) real_buf[y * side + x] = value(y, x);
    };

    load([&](std::size_t y, std::size_t x) { return g(y, x); });
    fftw_execute(r2c_m.get());

    const double norm = 1.0 / (static_cast<double>(n_grid) * static_cast<double>(n_grid));
    const double inv_len = 1.0 / static_cast<double>(real_len);
    double total = 0.0;
    for (std::size_t y = 0; y < n_grid; ++y)
        for (std::size_t x = 0; x < n_grid; ++x) total += g(y, x);
    ms.a1 = total * norm;

    for (std::size_t i1 = 0; i1 < s; ++i1) {
        const std::size_t y1 = i1 / static_cast<std::size_t>(m), x1 = i1 % static_cast<std::size_t>(m);
        load([&](std::size_t y, std::size_t x) {
            return (y + y1 < n_grid && x + x1 < n_grid) ? g(y, x) * g(y + y1, x + x1) : 0.0;
        });
        double p_total = 0.0;
        for (std::size_t i = 0; i < real_len; ++i) p_total += real_buf[i];
        ms.a2[i1] = p_total * norm;

        fftw_execute(r2c_p.get());
        for (std::size_t i = 0; i < cplx_len; ++i) {
            const double pr = p_hat[i][0], pi = -p_hat[i][1];
            const double mr = m_hat[i][0], mi = m_hat[i][1];
            p_hat[i][0] = pr * mr - pi * mi;
            p_hat[i][1] = pr * mi + pi * mr;
        }
        fftw_execute(c2r.get());
        for (std::size_t i2 = 0; i2 < s; ++i2) {
            const std::size_t y2 = i2 / static_cast<std::size_t>(m), x2 = i2 % static_cast<std::size_t>(m);
            ms.a3[i1 * s + i2] = real_buf[y2 * side + x2] * inv_len * norm;
        }
    }
    return ms;
}

} // namespace

MomentSet empirical_ac(const RealGrid& grid, double radius, AcMethod method) {
    if (grid.rows() != grid.cols()) throw ConfigError("measurement grid must be square");
    check_sizes(grid.rows(), radius);
    return method == AcMethod::Fft ? fft_ac(grid, radius) : direct_ac(grid, radius);
}

MomentSet empirical_ac(const Measurement& m, AcMethod method) { return empirical_ac(m.grid, m.radius, method); }

void MomentAccumulator::add(const MomentSet& ms) {
    if (count_ == 0) {
        sum_ = ms;
        count_ = 1;
        return;
    }
    if (ms.grid_size != sum_.grid_size || ms.radius != sum_.radius || ms.extent != sum_.extent)
        throw ConfigError("moment sets disagree on (N, n)");
    sum_.a1 += ms.a1;
    for (std::size_t i = 0; i < sum_.a2.size(); ++i) sum_.a2[i] += ms.a2[i];
    for (std::size_t i = 0; i < sum_.a3.size(); ++i) sum_.a3[i] += ms.a3[i];
    ++count_;
}

MomentSet MomentAccumulator::mean() const {
    if (count_ == 0) throw ConfigError("no moment sets to average");
    MomentSet out = sum_;
    const double w = 1.0 / static_cast<double>(count_);
    out.a1 *= w;
    for (double& v : out.a2) v *= w;
    for (double& v : out.a3) v *= w;
    return out;
}

NoiseFloorDiagnostics noise_floor_check(const MomentSet& ms, double sigma, double gamma, double s1,
                                        double s2_zero) {
    NoiseFloorDiagnostics d;
    const double rate = occupancy_rate(gamma);
    const double var = sigma * sigma;
    const std::size_t s = ms.shift_count();
    d.a2_zero_residual = ms.a2[0] - (rate * s2_zero + var);
    for (std::size_t i = 1; i < s; ++i) d.a2_offzero_max_abs = std::max(d.a2_offzero_max_abs, std::abs(ms.a2[i]));
    d.spike_prediction = rate * s1 * var;
    if (s > 1) {
        double l1 = 0.0, l2 = 0.0, diag = 0.0;
        for (std::size_t i = 1; i < s; ++i) {
            l1 += ms.a3[i];
            l2 += ms.a3[i * s];
            diag += ms.a3[i * s + i];
        }
        const double cnt = static_cast<double>(s - 1);
        d.spike_l1_mean = l1 / cnt;
        d.spike_l2_mean = l2 / cnt;
        d.spike_diagonal_mean = diag / cnt;
    }
    return d;
}

} // namespace mtd
