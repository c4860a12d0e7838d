// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "phylab/constellation.hpp"
#include "phylab/rng.hpp"
#include "phylab/types.hpp"

namespace phylab::channel {

/// Uniform linear array, spacing in carrier wavelengths.
struct UlaConfig {
  int num_antennas = 16;
  double element_spacing_wavelengths = 0.5;
  void validate() const;
};

/// Clustered multipath (Saleh-Valenzuela style) narrowband channel.
struct SvChannelParams {
  int num_tx = 16;
  int num_rx = 4;
  int num_clusters = 3;
  int rays_per_cluster = 4;
  double angle_spread_deg = 7.5;  // Laplacian scale of ray offsets around each cluster
  double carrier_ghz = 28.0;
  double element_spacing_wavelengths = 0.5;
  int total_rays() const { return num_clusters * rays_per_cluster; }
  void validate() const;
};

struct PathComponent {
  double aoa_rad = 0.0;
  double aod_rad = 0.0;
  Complex gain{0.0, 0.0};
};

/// A drawn channel: matrix plus the path list that produced it.
struct ChannelRealization {
  ComplexMatrix h;  // num_rx x num_tx (uplink SIMO: num_antennas x 1)
  std::vector<PathComponent> paths;
};

/// Cyclic-prefix OFDM numerology with a frequency-domain pilot comb.
struct OfdmConfig {
  int num_subcarriers = 16;
  int cp_length = 4;
  int num_taps = 3;       // channel delay spread in samples
  int pilot_spacing = 1;  // pilot every k-th subcarrier; must divide num_subcarriers
  classical::ConstellationKind constellation = classical::ConstellationKind::QPSK;

  bool isi_free() const { return cp_length >= num_taps - 1; }
  int num_pilots() const { return num_subcarriers / pilot_spacing; }
  void validate() const;
};

/// ULA response for angle theta (radians, |theta| <= pi/2):
/// entry n is exp(-j 2 pi spacing n sin(theta)).
ComplexVector steering_vector(double theta_rad, const UlaConfig& ula);

/// h = sum_l gain_l * a(aoa_l) from an explicit path list.
ChannelRealization uplink_from_paths(const UlaConfig& ula, const std::vector<PathComponent>& paths);

/// num_paths paths with aoa ~ U(-pi/2, pi/2) and gain ~ CN(0, 1/num_paths),
/// so E ||h||^2 = num_antennas.
ChannelRealization sample_uplink_channel(const UlaConfig& ula, int num_paths, Rng& rng);

/// H = sqrt(num_tx*num_rx / L) * sum_l gain_l * ar(aoa_l) at(aod_l)^H / sqrt(num_tx*num_rx)
/// from an explicit ray list (the steering outer product is normalized so a
/// single unit-gain ray gives ||H||_F^2 = num_tx*num_rx).
ChannelRealization sv_from_paths(const SvChannelParams& params,
                                 const std::vector<PathComponent>& paths);

/// Clustered draw: cluster centers uniform in (-pi/2, pi/2) for both ends,
/// per-ray Laplacian offsets with scale angle_spread_deg, ray gains
/// CN(0, 1/L). E ||H||_F^2 = num_tx * num_rx.
ChannelRealization sample_sv_channel(const SvChannelParams& params, Rng& rng);

/// Unitary IDFT of one symbol followed by a cyclic prefix of cp_length
/// samples. Input length num_subcarriers, output num_subcarriers + cp_length.
ComplexVector ofdm_modulate(const ComplexVector& freq_symbols, const OfdmConfig& cfg);

/// Strips the cyclic prefix and applies the unitary DFT.
ComplexVector ofdm_demodulate(const ComplexVector& time_samples, const OfdmConfig& cfg);

/// Linear convolution with the tap vector, truncated to the input length
/// (zero initial state).
ComplexVector apply_multipath(const ComplexVector& x, const ComplexVector& taps);

/// Adds circular complex Gaussian noise with variance
/// signal_power * 10^(-snr_db/10) per sample. +infinity snr is a no-op.
ComplexVector apply_awgn(const ComplexVector& x, double snr_db, double signal_power, Rng& rng);

/// Per-subcarrier response of a tap vector: the plain (non-unitary) DFT of
/// the zero-padded taps. With cp >= taps-1 the end-to-end OFDM link is
/// y_k = response_k * x_k.
ComplexVector channel_freq_response(const ComplexVector& taps, int num_subcarriers);

/// Random taps with a normalized exponentially decaying power profile.
ComplexVector sample_multipath_taps(int num_taps, Rng& rng);

}  // namespace phylab::channel
