#include "mtd/ctf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "mtd/error.hpp"

namespace mtd {
namespace {

using fft::Complex;

constexpr char grid_magic[8] = {'M', 'T', 'D', 'C', 'T', 'F', '1', '\0'};

std::size_t wrap(long k, std::size_t n) {
    const long m = static_cast<long>(n);
    return static_cast<std::size_t>(((k % m) + m) % m);
}

// Signed frequency of lattice index i.
long signed_freq(std::size_t i, std::size_t n) {
    const long k = static_cast<long>(i);
    return 2 * k >= static_cast<long>(n) ? k - static_cast<long>(n) : k;
}

} // namespace

CtfSpec ctf_from_kernel(const RealGrid& kernel) {
    if (kernel.empty() || kernel.rows() != kernel.cols()) throw ConfigError("CTF kernel must be square and non-empty");
    return {fft::forward(kernel), kernel};
}

CtfSpec ctf_from_transfer(const fft::ComplexGrid& transfer) {
    const std::size_t n = transfer.rows();
    if (n == 0 || transfer.cols() != n) throw ConfigError("CTF transfer must be square and non-empty");
    double peak = 0.0, asym = 0.0;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            peak = std::max(peak, std::abs(transfer(r, c)));
            asym = std::max(asym, std::abs(transfer(r, c) - std::conj(transfer((n - r) % n, (n - c) % n))));
        }
    if (asym > 1e-9 * std::max(peak, 1e-300)) throw ConfigError("CTF transfer is not Hermitian symmetric");
    return {transfer, fft::inverse_real(transfer)};
}

CtfSpec radial_ctf(std::size_t grid_size, std::span<const std::pair<double, double>> profile) {
    if (grid_size == 0) throw ConfigError("CTF grid size must be positive");
    if (profile.empty()) throw ConfigError("CTF profile is empty");
    std::vector<std::pair<double, double>> pts(profile.begin(), profile.end());
    std::sort(pts.begin(), pts.end());
    auto value = [&](double f) {
        if (f <= pts.front().first) return pts.front().second;
        if (f >= pts.back().first) return pts.back().second;
        const auto hi = std::upper_bound(pts.begin(), pts.end(), f,
                                         [](double v, const auto& p) { return v < p.first; });
        const auto lo = hi - 1;
        const double t = (f - lo->first) / (hi->first - lo->first);
        return lo->second + t * (hi->second - lo->second);
    };
    fft::ComplexGrid transfer(grid_size, grid_size);
    const double n = static_cast<double>(grid_size);
    for (std::size_t r = 0; r < grid_size; ++r)
        for (std::size_t c = 0; c < grid_size; ++c) {
            const double fy = static_cast<double>(signed_freq(r, grid_size)) / n;
            const double fx = static_cast<double>(signed_freq(c, grid_size)) / n;
            transfer(r, c) = value(std::hypot(fy, fx));
        }
    // Even grids: the Nyquist row/column pairs with itself, so a radial
    // profile is already Hermitian.
    return ctf_from_transfer(transfer);
}

CtfSpec load_ctf_profile(const std::filesystem::path& path, std::size_t grid_size) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open CTF profile " + path.string());
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        double f = 0.0, v = 0.0;
        if (!(ls >> f)) continue;
        if (!(ls >> v)) throw ConfigError("CTF profile line " + std::to_string(line_no) + " needs two columns");
        pts.emplace_back(f, v);
    }
    return radial_ctf(grid_size, pts);
}

CtfSpec load_ctf_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open CTF grid " + path.string());
    char magic[8];
    std::uint64_t n = 0;
    in.read(magic, 8);
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!in || !std::equal(magic, magic + 8, grid_magic)) throw ConfigError("not a CTF grid file: " + path.string());
    if (n == 0 || n > (1u << 16)) throw ConfigError("implausible CTF grid size");
    fft::ComplexGrid transfer(n, n);
    in.read(reinterpret_cast<char*>(transfer.storage().data()),
            static_cast<std::streamsize>(sizeof(Complex) * transfer.size()));
    if (!in) throw ConfigError("truncated CTF grid file: " + path.string());
    return ctf_from_transfer(transfer);
}

void save_ctf_grid(const std::filesystem::path& path, const CtfSpec& ctf) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    const std::uint64_t n = ctf.transfer.rows();
    out.write(grid_magic, 8);
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(ctf.transfer.storage().data()),
              static_cast<std::streamsize>(sizeof(Complex) * ctf.transfer.size()));
}

RealGrid apply_ctf(const RealGrid& m, const CtfSpec& ctf) {
    if (m.rows() != ctf.transfer.rows() || m.cols() != ctf.transfer.cols())
        throw ConfigError("measurement and CTF sizes differ");
    auto spectrum = fft::forward(m);
    for (std::size_t i = 0; i < spectrum.size(); ++i) spectrum.values()[i] *= ctf.transfer.values()[i];
    return fft::inverse_real(spectrum);
}

SpectralStatistics spectral_statistics(const RealGrid& y, int window) {
    const std::size_t n = y.rows();
    if (n == 0 || y.cols() != n) throw ConfigError("measurement must be square and non-empty");
    if (window < 0 || 2 * static_cast<std::size_t>(window) >= n)
        throw ConfigError("bispectrum window must satisfy 0 <= K < N/2");
    const auto hat = fft::forward(y);
    SpectralStatistics s;
    s.grid_size = n;
    s.mean = hat(0, 0);
    s.power = RealGrid(n, n);
    for (std::size_t i = 0; i < hat.size(); ++i) s.power.values()[i] = std::norm(hat.values()[i]);
    s.window = window;
    const int side = s.side();
    s.bispectrum.resize(static_cast<std::size_t>(side) * side * side * side);
    auto at = [&](long ky, long kx) { return hat(wrap(ky, n), wrap(kx, n)); };
    for (int k1y = -window; k1y <= window; ++k1y)
        for (int k1x = -window; k1x <= window; ++k1x) {
            const Complex a = at(k1y, k1x);
            const std::size_t base = s.cell(k1y, k1x) * static_cast<std::size_t>(side * side);
            for (int k2y = -window; k2y <= window; ++k2y)
                for (int k2x = -window; k2x <= window; ++k2x)
                    s.bispectrum[base + s.cell(k2y, k2x)] =
                        a * std::conj(at(k2y, k2x)) * at(k2y - k1y, k2x - k1x);
        }
    return s;
}

std::vector<std::pair<int, int>> inadmissible_frequencies(const CtfSpec& ctf, double threshold) {
    const std::size_t n = ctf.transfer.rows();
    double peak = 0.0;
    for (const auto& v : ctf.transfer.values()) peak = std::max(peak, std::abs(v));
    std::vector<std::pair<int, int>> bad;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c)
            if (!(std::abs(ctf.transfer(r, c)) > threshold * peak))
                bad.emplace_back(static_cast<int>(signed_freq(r, n)), static_cast<int>(signed_freq(c, n)));
    return bad;
}

SpectralStatistics deconvolve_moments(const SpectralStatistics& y, const CtfSpec& ctf, double threshold) {
    const std::size_t n = y.grid_size;
    if (ctf.transfer.rows() != n || ctf.transfer.cols() != n) throw ConfigError("statistics and CTF sizes differ");
    if (const auto bad = inadmissible_frequencies(ctf, threshold); !bad.empty()) {
        std::ostringstream msg;
        msg << "inadmissible CTF: " << bad.size() << " frequencies with |h^| <= " << threshold << " max|h^|:";
        for (std::size_t i = 0; i < std::min<std::size_t>(bad.size(), 8); ++i)
            msg << " (" << bad[i].first << ", " << bad[i].second << ")";
        if (bad.size() > 8) msg << " ...";
        throw NumericalError(msg.str());
    }
    const auto& h = ctf.transfer;
    SpectralStatistics m = y;
    m.mean = y.mean / h(0, 0);
    for (std::size_t i = 0; i < h.size(); ++i) m.power.values()[i] = y.power.values()[i] / std::norm(h.values()[i]);
    auto at = [&](long ky, long kx) { return h(wrap(ky, n), wrap(kx, n)); };
    const int w = y.window, side = y.side();
    for (int k1y = -w; k1y <= w; ++k1y)
        for (int k1x = -w; k1x <= w; ++k1x) {
            const Complex a = at(k1y, k1x);
            const std::size_t base = y.cell(k1y, k1x) * static_cast<std::size_t>(side * side);
            for (int k2y = -w; k2y <= w; ++k2y)
                for (int k2x = -w; k2x <= w; ++k2x)
                    m.bispectrum[base + y.cell(k2y, k2x)] /= a * std::conj(at(k2y, k2x)) * at(k2y - k1y, k2x - k1x);
        }
    return m;
}

} // namespace mtd
