// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "phylab/channel.hpp"
#include "phylab/constellation.hpp"
#include "phylab/numerics.hpp"
#include "phylab/types.hpp"

namespace phylab::classical {

struct DoaEstimates {
  std::vector<double> angles_deg;  // ascending
  bool degenerate = false;         // fewer spectrum peaks than requested sources
};

/// MUSIC estimation on a ULA. snapshots is num_antennas x num_snapshots.
/// Builds the sample covariance, splits off the noise subspace, scans the
/// pseudo-spectrum over [-90, 90] degrees in grid_step_deg steps and returns
/// the num_sources largest local maxima (ties toward the smaller angle).
DoaEstimates music_doa(const ComplexMatrix& snapshots, int num_sources,
                       const channel::UlaConfig& ula, double grid_step_deg = 0.1);

/// Least-squares pilot estimates h_k = y_k / x_k on the pilot comb
/// (positions 0, spacing, 2*spacing, ...), linearly interpolated on real and
/// imaginary parts in between and held flat after the last pilot.
ComplexVector ls_channel_estimate(const ComplexVector& y_freq, const ComplexVector& pilot_values,
                                  const channel::OfdmConfig& cfg);

struct DetectionResult {
  ComplexVector symbols;           // sliced constellation points
  std::vector<std::uint8_t> bits;  // demapped bits, stream-major
};

/// Zero-forcing detection: x = pinv(h) * y, then per-entry nearest-point
/// slicing. h must have full column rank.
DetectionResult zf_detect(const ComplexMatrix& h, const ComplexVector& y, const Constellation& c);

/// Power-domain NOMA power split; fractions must be positive and sum to 1.
struct NomaConfig {
  std::vector<double> powers;
  void validate() const;
};

/// y = sum_i sqrt(p_i) x_i, all user streams the same length.
ComplexVector noma_superpose(const std::vector<ComplexVector>& user_symbols,
                             const NomaConfig& cfg);

struct SicResult {
  std::vector<ComplexVector> symbols;            // per user, sliced
  std::vector<std::vector<std::uint8_t>> bits;   // per user
  std::vector<bool> undecodable;                 // zero-gain users
  std::vector<int> decode_order;                 // user indices, first decoded first
};

/// Successive interference cancellation at a single receiver observing
/// y = sum_i g_i sqrt(p_i) x_i + n. Users are decoded in descending received
/// power p_i |g_i|^2 (ties toward the lower user index); each decoded
/// contribution is re-synthesized and subtracted.
SicResult sic_decode(const ComplexVector& y, const std::vector<Complex>& gains,
                     const NomaConfig& cfg, const Constellation& c);

/// Per-user Shannon rates log2(1 + SINR) under the same SIC ordering:
/// a user decoded earlier sees every not-yet-decoded user as interference.
RealVector achievable_rate(const std::vector<Complex>& gains, const NomaConfig& cfg,
                           double noise_variance);

/// Systematic Hamming(7,4): codeword = [d0 d1 d2 d3 p0 p1 p2]. The decoder
/// corrects every single-bit error.
std::array<std::uint8_t, 7> hamming74_encode(const std::array<std::uint8_t, 4>& data);
std::array<std::uint8_t, 4> hamming74_decode(const std::array<std::uint8_t, 7>& code);

/// Unitary precoder/combiner pair plus the per-stream gains of the
/// effective channel combiner * h * precoder.
struct PrecoderPair {
  ComplexMatrix precoder;   // num_tx x num_streams, ||precoder||_F^2 = num_streams
  ComplexMatrix combiner;   // num_streams x num_rx
  RealVector effective_diag;
};

/// Top singular vectors; the effective channel is diag(sigma_1..sigma_ns).
PrecoderPair svd_precoder(const ComplexMatrix& h, int num_streams);

/// GMD factors; the effective channel is upper triangular with all diagonal
/// entries equal to the geometric mean of the retained singular values.
PrecoderPair gmd_precoder(const ComplexMatrix& h, int num_streams);

struct HybridFactors {
  ComplexMatrix f_rf;             // num_tx x num_rf, entries of modulus 1/sqrt(num_tx)
  ComplexMatrix f_bb;             // num_rf x num_streams
  std::vector<double> residuals;  // ||f_opt - f_rf f_bb||_F after each iteration
};

/// Alternating minimization of ||f_opt - f_rf f_bb||_F under the constant
/// modulus constraint |f_rf(i,j)| = 1/sqrt(num_tx). Each round sweeps every
/// analog phase once (per-entry exact minimizer given the rest), then solves
/// f_bb by least squares; both steps descend, so residuals never increase.
/// Initialization: each stream gets a chain carrying its target phases, and
/// spare chains pair up with streams to split magnitudes across two phasors,
/// which represents f_opt exactly once num_rf_chains >= 2*num_streams.
/// Runs exactly iters rounds; the returned f_bb is rescaled at the end so
/// ||f_rf f_bb||_F^2 = num_streams.
HybridFactors hybrid_decompose(const ComplexMatrix& f_opt, int num_rf_chains, int iters);

}  // namespace phylab::classical
