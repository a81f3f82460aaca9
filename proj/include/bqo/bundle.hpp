#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bqo/gramians.hpp"
#include "bqo/linalg.hpp"
#include "bqo/simulation.hpp"
#include "bqo/system.hpp"

namespace bqo {

namespace fs = std::filesystem;

/// Row-major CSV, one row per line, entries in %.16e (17 significant digits,
/// enough for an exact round trip). An empty matrix is an empty file.
void write_matrix_csv(const fs::path& path, const Matrix& m);
/// Throws kIo on a missing file and kBadSpec on ragged or unparsable rows.
/// With `skip_header` the first line is ignored.
Matrix read_matrix_csv(const fs::path& path, bool skip_header = false);

/// manifest.json {n, m, p, gamma_applied} plus A.csv, B.csv, C.csv, N1.csv..,
/// M1.csv.. holding the physical (unscaled) matrices.
void save_system(const fs::path& dir, const BqoSystem& sys);
/// Rebuilds the system and reattaches gamma_applied.
BqoSystem load_system(const fs::path& dir);

/// P.csv, Q.csv (if present), one CSV per intermediate and residuals.json
/// with variant, residuals, iterations, phi and warnings.
void save_gramians(const fs::path& dir, const GramianSet& g);
GramianSet load_gramians(const fs::path& dir);

/// Header "t,y1,..,yp" followed by one row per sample.
void write_trajectory_csv(const fs::path& path, const Trajectory& traj);
/// Single column with header `name`.
void write_vector_csv(const fs::path& path, const std::string& name,
                      const Vector& v);

/// Record written next to every CLI output bundle.
struct RunManifest {
  std::string command;
  std::vector<std::string> inputs;
  std::map<std::string, std::string> options;
  std::string output_dir;
  std::string tool_version;
};

void write_run_manifest(const fs::path& dir, const RunManifest& manifest);
RunManifest read_run_manifest(const fs::path& dir);

}  // namespace bqo
