#include "mtd/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mtd/error.hpp"

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace mtd::io {
namespace {

constexpr char basis_magic[8] = {'M', 'T', 'D', 'B', 'A', 'S', '1', '\0'};
constexpr char meas_magic[8] = {'M', 'T', 'D', 'M', 'E', 'A', '1', '\0'};
constexpr char moment_magic[8] = {'M', 'T', 'D', 'M', 'O', 'M', '1', '\0'};
constexpr char sep_magic[8] = {'M', 'T', 'D', 'S', 'E', 'P', '1', '\0'};

class Writer {
public:
    Writer(const fs::path& path, const char (&magic)[8]) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw ConfigError("cannot write " + path.string());
        out_.write(magic, 8);
    }
    template <typename T>
    void put(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    template <typename T>
    void put_all(std::span<const T> v) {
        out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    }
    ~Writer() noexcept(false) {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0) throw ConfigError("write failed: " + path_.string());
    }

private:
    std::ofstream out_;
    fs::path path_;
};

class Reader {
public:
    Reader(const fs::path& path, const char (&magic)[8], const char* what) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw ConfigError("cannot open " + path.string());
        char m[8] = {};
        in_.read(m, 8);
        if (!in_ || std::memcmp(m, magic, 8) != 0) throw ConfigError(path.string() + " is not a " + what + " file");
    }
    template <typename T>
    T get() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof v);
        check();
        return v;
    }
    template <typename T>
    void get_all(std::span<T> v) {
        in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
        check();
    }

private:
    void check() {
        if (!in_) throw ConfigError("truncated file: " + path_.string());
    }
    std::ifstream in_;
    fs::path path_;
};

std::uint64_t checked_size(std::uint64_t v, std::uint64_t limit, const char* what) {
    if (v > limit) throw ConfigError(std::string("implausible ") + what + " in file header");
    return v;
}

} // namespace

void save_basis(const fs::path& path, const BasisTables& tables) {
    const auto& spec = tables.spec();
    Writer w(path, basis_magic);
    w.put(spec.radius());
    w.put(spec.bandlimit());
    w.put(static_cast<std::uint64_t>(spec.box_size()));
    w.put(static_cast<std::uint64_t>(spec.dft_length()));
    w.put(static_cast<std::uint64_t>(spec.coefficient_count()));
    for (std::size_t i = 0; i < spec.coefficient_count(); ++i) w.put_all(tables.psi(i).values());
    for (std::size_t i = 0; i < spec.coefficient_count(); ++i) w.put_all(tables.psi_hat(i).values());
}

BasisTables load_basis(const fs::path& path, const BasisSpec& spec) {
    Reader r(path, basis_magic, "basis cache");
    const double radius = r.get<double>();
    const double bandlimit = r.get<double>();
    const auto box = r.get<std::uint64_t>();
    const auto dft = r.get<std::uint64_t>();
    const auto count = r.get<std::uint64_t>();
    if (radius != spec.radius() || bandlimit != spec.bandlimit() || box != static_cast<std::uint64_t>(spec.box_size()) ||
        dft != static_cast<std::uint64_t>(spec.dft_length()) || count != spec.coefficient_count())
        throw ConfigError("basis cache " + path.string() + " was written for a different basis");
    std::vector<ComplexGrid> psi, psi_hat;
    for (std::size_t i = 0; i < count; ++i) {
        ComplexGrid g(box, box);
        r.get_all(g.values());
        psi.push_back(std::move(g));
    }
    for (std::size_t i = 0; i < count; ++i) {
        ComplexGrid g(dft, dft);
        r.get_all(g.values());
        psi_hat.push_back(std::move(g));
    }
    return BasisTables(spec, std::move(psi), std::move(psi_hat));
}

fs::path basis_cache_file(const fs::path& dir, const BasisSpec& spec) {
    std::ostringstream name;
    // Exact bit patterns keep distinct bandlimits apart.
    name << "basis_n" << std::hexfloat << spec.radius() << "_l" << spec.bandlimit() << "_v"
         << std::dec << spec.coefficient_count() << ".bin";
    std::string s = name.str();
    std::replace(s.begin(), s.end(), '+', 'p');
    return dir / s;
}

BasisTables cached_basis(const BasisSpec& spec, const std::optional<fs::path>& dir) {
    if (!dir) return BasisTables(spec);
    const auto file = basis_cache_file(*dir, spec);
    if (fs::exists(file)) {
        try {
            return load_basis(file, spec);
        } catch (const ConfigError&) {
            // stale or corrupt entry: rebuild and overwrite
        }
    }
    BasisTables tables(spec);
    fs::create_directories(*dir);
    const auto tmp = file.string() + ".tmp";
    save_basis(tmp, tables);
    fs::rename(tmp, file);
    return tables;
}

std::optional<fs::path> cache_dir_from_env() {
    const char* v = std::getenv("MTD_CACHE_DIR");
    if (!v || !*v) return std::nullopt;
    return fs::path(v);
}

void save_measurement(const fs::path& path, const Measurement& m) {
    Writer w(path, meas_magic);
    w.put(static_cast<std::uint64_t>(m.size()));
    w.put(m.radius);
    w.put(m.sigma);
    w.put(m.seed);
    w.put(static_cast<std::uint64_t>(m.placements ? m.placements->size() : 0));
    w.put_all(m.grid.values());
}

Measurement load_measurement(const fs::path& path) {
    Reader r(path, meas_magic, "measurement");
    Measurement m;
    const auto n = checked_size(r.get<std::uint64_t>(), 1u << 17, "grid size");
    m.radius = r.get<double>();
    m.sigma = r.get<double>();
    m.seed = r.get<std::uint64_t>();
    r.get<std::uint64_t>(); // occurrence count, informational
    m.grid = RealGrid(n, n);
    r.get_all(m.grid.values());
    return m;
}

fs::path manifest_path(const fs::path& measurement) { return fs::path(measurement.string() + ".json"); }

Json placements_to_json(const std::vector<Placement>& placements) {
    Json arr = Json::array();
    for (const auto& p : placements) arr.push_back({p.location.row, p.location.col, p.angle});
    return arr;
}

std::vector<Placement> placements_from_json(const Json& manifest) {
    if (!manifest.contains("placements")) throw ConfigError("manifest has no placements");
    std::vector<Placement> out;
    for (const auto& e : manifest.at("placements")) {
        if (!e.is_array() || e.size() != 3) throw ConfigError("placement entries must be [row, col, angle]");
        out.push_back({{e[0].get<int>(), e[1].get<int>()}, e[2].get<double>()});
    }
    return out;
}

void save_moments(const fs::path& path, const MomentSet& ms, std::uint64_t measurements) {
    Writer w(path, moment_magic);
    w.put(static_cast<std::uint64_t>(ms.grid_size));
    w.put(ms.radius);
    w.put(static_cast<std::int64_t>(ms.extent));
    w.put(measurements);
    w.put(ms.a1);
    w.put_all(std::span<const double>(ms.a2));
    w.put_all(std::span<const double>(ms.a3));
}

MomentSet load_moments(const fs::path& path, std::uint64_t* measurements) {
    Reader r(path, moment_magic, "moment set");
    MomentSet ms;
    ms.grid_size = r.get<std::uint64_t>();
    ms.radius = r.get<double>();
    const auto extent = r.get<std::int64_t>();
    if (extent < 1 || extent > 64) throw ConfigError("implausible shift extent in " + path.string());
    ms.extent = static_cast<int>(extent);
    const auto count = r.get<std::uint64_t>();
    if (measurements) *measurements = count;
    ms.a1 = r.get<double>();
    ms.a2.resize(ms.shift_count());
    ms.a3.resize(ms.shift_count() * ms.shift_count());
    r.get_all(std::span<double>(ms.a2));
    r.get_all(std::span<double>(ms.a3));
    return ms;
}

void save_separation(const fs::path& path, const SeparationFunctions& sep) {
    Writer w(path, sep_magic);
    w.put(sep.radius);
    w.put(static_cast<std::int64_t>(sep.half_width));
    w.put(static_cast<std::uint64_t>(sep.count));
    w.put(sep.xi_outside);
    w.put(sep.zeta_outside);
    const int hw = sep.half_width, side = sep.side();
    const auto cells = static_cast<std::size_t>(side * side);
    auto coord = [&](std::size_t c, std::int32_t& dy, std::int32_t& dx) {
        dy = static_cast<std::int32_t>(c / static_cast<std::size_t>(side)) - hw;
        dx = static_cast<std::int32_t>(c % static_cast<std::size_t>(side)) - hw;
    };
    w.put(static_cast<std::uint64_t>(std::count_if(sep.xi.begin(), sep.xi.end(), [](double v) { return v != 0.0; })));
    for (std::size_t c = 0; c < cells; ++c)
        if (sep.xi[c] != 0.0) {
            std::int32_t dy, dx;
            coord(c, dy, dx);
            w.put(dy);
            w.put(dx);
            w.put(sep.xi[c]);
        }
    w.put(static_cast<std::uint64_t>(
        std::count_if(sep.zeta.begin(), sep.zeta.end(), [](double v) { return v != 0.0; })));
    for (std::size_t c = 0; c < cells * cells; ++c)
        if (sep.zeta[c] != 0.0) {
            std::int32_t y1, x1, y2, x2;
            coord(c / cells, y1, x1);
            coord(c % cells, y2, x2);
            w.put(y1);
            w.put(x1);
            w.put(y2);
            w.put(x2);
            w.put(sep.zeta[c]);
        }
}

SeparationFunctions load_separation(const fs::path& path) {
    Reader r(path, sep_magic, "separation function");
    const double radius = r.get<double>();
    SeparationFunctions sep = empty_separation(radius);
    if (r.get<std::int64_t>() != sep.half_width) throw ConfigError("separation window does not match its radius");
    sep.count = r.get<std::uint64_t>();
    sep.xi_outside = r.get<double>();
    sep.zeta_outside = r.get<double>();
    const auto cells = static_cast<std::size_t>(sep.side() * sep.side());
    const auto nx = checked_size(r.get<std::uint64_t>(), cells, "xi entry count");
    for (std::uint64_t i = 0; i < nx; ++i) {
        const auto dy = r.get<std::int32_t>(), dx = r.get<std::int32_t>();
        const double v = r.get<double>();
        if (!sep.in_window(dy, dx)) throw ConfigError("xi entry outside the window");
        sep.xi[sep.cell(dy, dx)] = v;
    }
    const auto nz = checked_size(r.get<std::uint64_t>(), cells * cells, "zeta entry count");
    for (std::uint64_t i = 0; i < nz; ++i) {
        const auto y1 = r.get<std::int32_t>(), x1 = r.get<std::int32_t>();
        const auto y2 = r.get<std::int32_t>(), x2 = r.get<std::int32_t>();
        const double v = r.get<double>();
        if (!sep.in_window(y1, x1) || !sep.in_window(y2, x2)) throw ConfigError("zeta entry outside the window");
        sep.zeta[sep.cell(y1, x1) * cells + sep.cell(y2, x2)] = v;
    }
    return sep;
}

Json coefficients_to_json(const BasisSpec& spec, const CoefficientVector& alpha) {
    Json arr = Json::array();
    for (std::size_t i = 0; i < spec.coefficient_count(); ++i) {
        const auto& idx = spec.indices()[i];
        arr.push_back({{"nu", idx.nu}, {"q", idx.q}, {"value", {alpha.values[i].real(), alpha.values[i].imag()}}});
    }
    return arr;
}

CoefficientVector coefficients_from_json(const BasisSpec& spec, const Json& j) {
    if (!j.is_array() || j.size() != spec.coefficient_count())
        throw ConfigError("coefficient list does not match the basis size");
    CoefficientVector alpha{std::vector<Complex>(spec.coefficient_count())};
    for (const auto& e : j) {
        const BasisIndex idx{e.at("nu").get<int>(), e.at("q").get<int>()};
        const auto& v = e.at("value");
        alpha.values[spec.position(idx)] = {v.at(0).get<double>(), v.at(1).get<double>()};
    }
    return alpha;
}

Json recovery_to_json(const BasisSpec& spec, const RecoveryResult& r) {
    return {
        {"coefficients", coefficients_to_json(spec, from_params(spec, r.params))},
        {"params", r.params},
        {"gamma", r.gamma},
        {"objective", r.objective},
        {"iterations", r.iterations},
        {"converged", r.converged},
        {"degraded", r.degraded},
        {"failed", r.failed},
        {"message", r.message},
        {"start_seed", r.start_seed},
        {"gamma_trace_stage1", r.gamma_trace_stage1},
        {"gamma_trace_stage2", r.gamma_trace_stage2},
    };
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << std::setw(2) << j << '\n';
}

void write_pgm(const fs::path& path, const RealGrid& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    double lo = 0.0, hi = 0.0;
    if (!image.empty()) {
        const auto [mn, mx] = std::minmax_element(image.values().begin(), image.values().end());
        lo = *mn;
        hi = *mx;
    }
    const double span = hi > lo ? hi - lo : 1.0;
    out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
    for (double v : image.values()) {
        const auto level = static_cast<unsigned char>(std::lround(std::clamp((v - lo) / span, 0.0, 1.0) * 255.0));
        out.put(static_cast<char>(level));
    }
}

} // namespace mtd::io
