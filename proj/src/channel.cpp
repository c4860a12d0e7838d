// SPDX-License-Identifier: Apache-2.0
#include "phylab/channel.hpp"

#include <cmath>

namespace phylab::channel {

void UlaConfig::validate() const {
  if (num_antennas < 1) throw std::invalid_argument("UlaConfig: num_antennas must be >= 1");
  if (!(element_spacing_wavelengths > 0.0))
    throw std::invalid_argument("UlaConfig: element spacing must be positive");
}

void SvChannelParams::validate() const {
  if (num_tx < 1 || num_rx < 1)
    throw std::invalid_argument("SvChannelParams: array sizes must be >= 1");
  if (num_clusters < 1 || rays_per_cluster < 1)
    throw std::invalid_argument("SvChannelParams: cluster layout must be >= 1");
  if (angle_spread_deg < 0.0)
    throw std::invalid_argument("SvChannelParams: angle spread must be >= 0");
  if (!(carrier_ghz > 0.0))
    throw std::invalid_argument("SvChannelParams: carrier frequency must be positive");
}

void OfdmConfig::validate() const {
  if (num_subcarriers < 1) throw std::invalid_argument("OfdmConfig: num_subcarriers must be >= 1");
  if (cp_length < 0) throw std::invalid_argument("OfdmConfig: cp_length must be >= 0");
  if (num_taps < 1) throw std::invalid_argument("OfdmConfig: num_taps must be >= 1");
  if (pilot_spacing < 1 || num_subcarriers % pilot_spacing != 0)
    throw std::invalid_argument("OfdmConfig: pilot_spacing must divide num_subcarriers");
}

ComplexVector steering_vector(double theta_rad, const UlaConfig& ula) {
  ula.validate();
  if (!(std::abs(theta_rad) <= kPi / 2.0))
    throw std::invalid_argument("steering_vector: |theta| must be <= pi/2");
  ComplexVector a(ula.num_antennas);
  const double phase_step = -2.0 * kPi * ula.element_spacing_wavelengths * std::sin(theta_rad);
  for (int n = 0; n < ula.num_antennas; ++n) a(n) = std::exp(kJ * (phase_step * n));
  return a;
}

ChannelRealization uplink_from_paths(const UlaConfig& ula,
                                     const std::vector<PathComponent>& paths) {
  if (paths.empty()) throw std::invalid_argument("uplink_from_paths: path list is empty");
  ChannelRealization out;
  out.h = ComplexMatrix::Zero(ula.num_antennas, 1);
  for (const PathComponent& p : paths) out.h.col(0) += p.gain * steering_vector(p.aoa_rad, ula);
  out.paths = paths;
  return out;
}

ChannelRealization sample_uplink_channel(const UlaConfig& ula, int num_paths, Rng& rng) {
  if (num_paths < 1) throw std::invalid_argument("sample_uplink_channel: num_paths must be >= 1");
  std::vector<PathComponent> paths(static_cast<std::size_t>(num_paths));
  for (PathComponent& p : paths) {
    p.aoa_rad = rng.uniform(-kPi / 2.0, kPi / 2.0);
    p.aod_rad = 0.0;
    p.gain = rng.complex_gaussian(1.0 / num_paths);
  }
  return uplink_from_paths(ula, paths);
}

ChannelRealization sv_from_paths(const SvChannelParams& params,
                                 const std::vector<PathComponent>& paths) {
  params.validate();
  if (paths.empty()) throw std::invalid_argument("sv_from_paths: path list is empty");
  const UlaConfig rx{params.num_rx, params.element_spacing_wavelengths};
  const UlaConfig tx{params.num_tx, params.element_spacing_wavelengths};
  const double gamma = std::sqrt(static_cast<double>(params.num_tx) * params.num_rx /
                                 static_cast<double>(paths.size()));
  const double outer_norm = std::sqrt(static_cast<double>(params.num_tx) * params.num_rx);
  ChannelRealization out;
  out.h = ComplexMatrix::Zero(params.num_rx, params.num_tx);
  for (const PathComponent& p : paths) {
    out.h += (gamma * p.gain / outer_norm) * steering_vector(p.aoa_rad, rx) *
             steering_vector(p.aod_rad, tx).adjoint();
  }
  out.paths = paths;
  return out;
}

namespace {

// Ray angle: cluster center plus Laplacian offset, reflected back into
// (-pi/2, pi/2) so the steering vector stays valid.
double fold_angle(double theta) {
  const double half = kPi / 2.0;
  while (theta > half || theta < -half) {
    if (theta > half) theta = kPi - theta;
    if (theta < -half) theta = -kPi - theta;
  }
  return theta;
}

}  // namespace

ChannelRealization sample_sv_channel(const SvChannelParams& params, Rng& rng) {
  params.validate();
  const double spread_rad = params.angle_spread_deg * kPi / 180.0;
  const int total = params.total_rays();
  std::vector<PathComponent> paths;
  paths.reserve(static_cast<std::size_t>(total));
  for (int c = 0; c < params.num_clusters; ++c) {
    const double center_aoa = rng.uniform(-kPi / 2.0, kPi / 2.0);
    const double center_aod = rng.uniform(-kPi / 2.0, kPi / 2.0);
    for (int r = 0; r < params.rays_per_cluster; ++r) {
      PathComponent p;
      p.aoa_rad = fold_angle(center_aoa + rng.laplace(spread_rad));
      p.aod_rad = fold_angle(center_aod + rng.laplace(spread_rad));
      // Unit-variance ray gains; the 1/sqrt(L) in sv_from_paths scaling
      // makes E||H||_F^2 = num_tx * num_rx.
      p.gain = rng.complex_gaussian(1.0);
      paths.push_back(p);
    }
  }
  return sv_from_paths(params, paths);
}

namespace {

// Direct unitary DFT/IDFT with recurrence twiddles; symbol sizes here are
// small enough that O(S^2) is not a bottleneck.
ComplexVector unitary_dft(const ComplexVector& x, bool inverse) {
  const Eigen::Index s = x.size();
  const double base = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(s);
  const double scale = 1.0 / std::sqrt(static_cast<double>(s));
  ComplexVector out(s);
  for (Eigen::Index k = 0; k < s; ++k) {
    const Complex step = std::exp(kJ * (base * static_cast<double>(k)));
    Complex w(1.0, 0.0);
    Complex acc(0.0, 0.0);
    for (Eigen::Index n = 0; n < s; ++n) {
      acc += x(n) * w;
      w *= step;
    }
    out(k) = scale * acc;
  }
  return out;
}

}  // namespace

ComplexVector ofdm_modulate(const ComplexVector& freq_symbols, const OfdmConfig& cfg) {
  cfg.validate();
  if (freq_symbols.size() != cfg.num_subcarriers)
    throw std::invalid_argument("ofdm_modulate: symbol count != num_subcarriers");
  const ComplexVector time = unitary_dft(freq_symbols, true);
  ComplexVector out(cfg.num_subcarriers + cfg.cp_length);
  out.head(cfg.cp_length) = time.tail(cfg.cp_length);
  out.tail(cfg.num_subcarriers) = time;
  return out;
}

ComplexVector ofdm_demodulate(const ComplexVector& time_samples, const OfdmConfig& cfg) {
  cfg.validate();
  if (time_samples.size() != cfg.num_subcarriers + cfg.cp_length)
    throw std::invalid_argument("ofdm_demodulate: sample count != num_subcarriers + cp_length");
  return unitary_dft(time_samples.tail(cfg.num_subcarriers), false);
}

ComplexVector apply_multipath(const ComplexVector& x, const ComplexVector& taps) {
  if (taps.size() < 1) throw std::invalid_argument("apply_multipath: empty tap vector");
  require_finite(taps, "apply_multipath taps");
  ComplexVector y = ComplexVector::Zero(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    Complex acc(0.0, 0.0);
    const Eigen::Index lmax = std::min<Eigen::Index>(taps.size() - 1, n);
    for (Eigen::Index l = 0; l <= lmax; ++l) acc += taps(l) * x(n - l);
    y(n) = acc;
  }
  return y;
}

ComplexVector apply_awgn(const ComplexVector& x, double snr_db, double signal_power, Rng& rng) {
  if (!(signal_power > 0.0)) throw std::invalid_argument("apply_awgn: signal_power must be positive");
  if (std::isinf(snr_db) && snr_db > 0.0) return x;
  const double variance = signal_power * std::pow(10.0, -snr_db / 10.0);
  ComplexVector y(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n) y(n) = x(n) + rng.complex_gaussian(variance);
  return y;
}

ComplexVector channel_freq_response(const ComplexVector& taps, int num_subcarriers) {
  if (num_subcarriers < 1)
    throw std::invalid_argument("channel_freq_response: num_subcarriers must be >= 1");
  ComplexVector h(num_subcarriers);
  for (int k = 0; k < num_subcarriers; ++k) {
    Complex acc(0.0, 0.0);
    for (Eigen::Index l = 0; l < taps.size(); ++l)
      acc += taps(l) * std::exp(kJ * (-2.0 * kPi * k * static_cast<double>(l) / num_subcarriers));
    h(k) = acc;
  }
  return h;
}

ComplexVector sample_multipath_taps(int num_taps, Rng& rng) {
  if (num_taps < 1) throw std::invalid_argument("sample_multipath_taps: num_taps must be >= 1");
  RealVector profile(num_taps);
  for (int l = 0; l < num_taps; ++l) profile(l) = std::exp(-l);
  profile /= profile.sum();
  ComplexVector taps(num_taps);
  for (int l = 0; l < num_taps; ++l) taps(l) = rng.complex_gaussian(profile(l));
  return taps;
}

}  // namespace phylab::channel
