#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "bqo/system.hpp"

namespace bqo {

enum class HeatOutput {
  kOnesQuadratic,      // M_2 = (1/k^4) ones(n, n)
  kIdentityQuadratic,  // M_2 = (1/k^2) I
};

std::string_view to_string(HeatOutput v);
/// Accepts "ones", "ones_quadratic", "identity", "identity_quadratic".
std::optional<HeatOutput> parse_heat_output(std::string_view tag);

struct HeatBenchmarkSpec {
  int k = 10;
  HeatOutput output_variant = HeatOutput::kOnesQuadratic;
  double gamma = 1.0;
};

/// Heat equation on the unit square, k x k interior grid with h = 1/(k+1).
/// Robin control on the left (u_1) and bottom (u_2) edge, Dirichlet zero on
/// the other two. Unknown (i, j) sits at index (j-1) k + (i-1).
///
/// The Robin rows carry u (x_b - 1) / h, split into N_k = diag(1/h) on the
/// edge rows and B(:, k) = -1/h on the same rows. Outputs are the average
/// temperature y_1 = (1/k^2) sum x and y_2 = x^T M_2 x; C row 2 and M_1 are
/// zero. The input scaling spec.gamma is attached to the returned system.
/// Throws kBadSpec for k < 3 or gamma outside (0, 1].
BqoSystem heat_system(const HeatBenchmarkSpec& spec);

/// Random stable system: A = Q^T D Q with Q Haar-orthogonal and
/// D = diag(-(1 + 9 u_i)), Gaussian B, C, N_k and symmetrized Gaussian M_j.
/// N_k are rescaled so max(||[N_k]||^2, ||[N_k^T]||^2) = margin * 2 alpha /
/// beta^2 and M_j so ||[M_j]||^2 equals the same value. Deterministic in seed.
/// Throws kBadSpec for margin outside (0, 1) or nonpositive dimensions.
BqoSystem random_admissible(int n, int m, int p, std::uint64_t seed,
                            double margin);

}  // namespace bqo
