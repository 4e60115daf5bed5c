#pragma once

// File formats. Binary files are little-endian: an 8-byte magic, a fixed
// header, then row-major float64 (complex values as re, im pairs).

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mtd/basis.hpp"
#include "mtd/empirical_moments.hpp"
#include "mtd/measurement.hpp"
#include "mtd/recovery.hpp"
#include "mtd/separation.hpp"

namespace mtd::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// Basis cache: radius, bandlimit, box side, DFT length, |V|, then Psi on the
// box and Psi-hat on the lattice for every V entry.
void save_basis(const fs::path& path, const BasisTables& tables);
/// Throws ConfigError when the file was written for another spec.
BasisTables load_basis(const fs::path& path, const BasisSpec& spec);
fs::path basis_cache_file(const fs::path& dir, const BasisSpec& spec);
/// Reads the cached tables from `dir` when present, otherwise builds and
/// stores them. No directory means no caching.
BasisTables cached_basis(const BasisSpec& spec, const std::optional<fs::path>& dir);
/// Directory named by MTD_CACHE_DIR, if set and non-empty.
std::optional<fs::path> cache_dir_from_env();

// Measurement: N, n, sigma, seed, occurrence count, grid.
void save_measurement(const fs::path& path, const Measurement& m);
Measurement load_measurement(const fs::path& path);
/// Sidecar manifest path: "<file>.json".
fs::path manifest_path(const fs::path& measurement);
std::vector<Placement> placements_from_json(const Json& manifest);
Json placements_to_json(const std::vector<Placement>& placements);

// MomentSet: N, n, extent, number of averaged measurements, a1, a2, a3.
void save_moments(const fs::path& path, const MomentSet& ms, std::uint64_t measurements = 1);
MomentSet load_moments(const fs::path& path, std::uint64_t* measurements = nullptr);

// Separation functions in coordinate form: nonzero xi and zeta entries only.
void save_separation(const fs::path& path, const SeparationFunctions& sep);
SeparationFunctions load_separation(const fs::path& path);

Json coefficients_to_json(const BasisSpec& spec, const CoefficientVector& alpha);
/// Throws ConfigError when the entries do not match the spec's index set.
CoefficientVector coefficients_from_json(const BasisSpec& spec, const Json& j);
Json recovery_to_json(const BasisSpec& spec, const RecoveryResult& r);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);

/// 8-bit binary PGM, linearly mapped from [min, max].
void write_pgm(const fs::path& path, const RealGrid& image);

} // namespace mtd::io
