// SPDX-License-Identifier: Apache-2.0
#include "phylab/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace phylab::classical {

DoaEstimates music_doa(const ComplexMatrix& snapshots, int num_sources,
                       const channel::UlaConfig& ula, double grid_step_deg) {
  ula.validate();
  const Eigen::Index n = snapshots.rows(), t = snapshots.cols();
  if (n != ula.num_antennas)
    throw std::invalid_argument("music_doa: snapshot rows != num_antennas");
  if (num_sources < 1 || num_sources >= n)
    throw std::invalid_argument("music_doa: need 1 <= num_sources < num_antennas");
  if (t < num_sources)
    throw std::invalid_argument("music_doa: need at least num_sources snapshots");
  if (!(grid_step_deg > 0.0))
    throw std::invalid_argument("music_doa: grid step must be positive");
  require_finite(snapshots, "music_doa");

  const ComplexMatrix cov = (snapshots * snapshots.adjoint()) / static_cast<double>(t);
  const numerics::EigFactors e = numerics::eig_hermitian(cov);
  const ComplexMatrix noise_basis = e.vectors.rightCols(n - num_sources);

  const int grid_points = static_cast<int>(std::floor(180.0 / grid_step_deg)) + 1;
  ComplexMatrix steering(n, grid_points);
  std::vector<double> angles(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i) {
    const double deg = std::min(-90.0 + i * grid_step_deg, 90.0);
    angles[static_cast<std::size_t>(i)] = deg;
    steering.col(i) = channel::steering_vector(deg * kPi / 180.0, ula);
  }
  // Pseudo-spectrum 1 / ||E_n^H a(theta)||^2, larger means closer to signal.
  const RealVector denom = (noise_basis.adjoint() * steering).colwise().squaredNorm();
  RealVector spectrum(grid_points);
  for (int i = 0; i < grid_points; ++i) spectrum(i) = 1.0 / std::max(denom(i), 1e-300);

  std::vector<int> peaks;
  for (int i = 0; i < grid_points; ++i) {
    const bool left_ok = i == 0 || spectrum(i) > spectrum(i - 1);
    const bool right_ok = i == grid_points - 1 || spectrum(i) >= spectrum(i + 1);
    if (left_ok && right_ok) peaks.push_back(i);
  }
  // Height descending; equal heights keep grid order, i.e. the smaller angle.
  std::stable_sort(peaks.begin(), peaks.end(),
                   [&](int a, int b) { return spectrum(a) > spectrum(b); });

  DoaEstimates out;
  const std::size_t take = std::min<std::size_t>(peaks.size(), static_cast<std::size_t>(num_sources));
  out.degenerate = take < static_cast<std::size_t>(num_sources);
  for (std::size_t i = 0; i < take; ++i)
    out.angles_deg.push_back(angles[static_cast<std::size_t>(peaks[i])]);
  std::sort(out.angles_deg.begin(), out.angles_deg.end());
  return out;
}

ComplexVector ls_channel_estimate(const ComplexVector& y_freq, const ComplexVector& pilot_values,
                                  const channel::OfdmConfig& cfg) {
  cfg.validate();
  if (y_freq.size() != cfg.num_subcarriers)
    throw std::invalid_argument("ls_channel_estimate: y length != num_subcarriers");
  if (pilot_values.size() != cfg.num_pilots())
    throw std::invalid_argument("ls_channel_estimate: pilot count != num_subcarriers / spacing");

  const int np = cfg.num_pilots();
  ComplexVector at_pilots(np);
  for (int p = 0; p < np; ++p) {
    if (std::abs(pilot_values(p)) == 0.0)
      throw std::invalid_argument("ls_channel_estimate: zero pilot value");
    at_pilots(p) = y_freq(p * cfg.pilot_spacing) / pilot_values(p);
  }

  ComplexVector h(cfg.num_subcarriers);
  for (int k = 0; k < cfg.num_subcarriers; ++k) {
    const int p = k / cfg.pilot_spacing;
    if (p + 1 >= np) {
      h(k) = at_pilots(np - 1);  // flat past the last pilot
      continue;
    }
    const double frac = static_cast<double>(k - p * cfg.pilot_spacing) / cfg.pilot_spacing;
    h(k) = (1.0 - frac) * at_pilots(p) + frac * at_pilots(p + 1);
  }
  return h;
}

DetectionResult zf_detect(const ComplexMatrix& h, const ComplexVector& y, const Constellation& c) {
  if (h.rows() != y.size()) throw std::invalid_argument("zf_detect: h rows != y length");
  require_finite(h, "zf_detect h");
  Eigen::CompleteOrthogonalDecomposition<ComplexMatrix> cod(h);
  if (cod.rank() < h.cols())
    throw std::invalid_argument("zf_detect: channel matrix is rank deficient");
  const ComplexVector x = cod.solve(y);

  DetectionResult out;
  out.symbols.resize(x.size());
  out.bits.resize(static_cast<std::size_t>(x.size()) * c.bits_per_symbol());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int label = c.slice_label(x(i));
    out.symbols(i) = c.map_label(label);
    c.label_to_bits(label, out.bits.data() + i * c.bits_per_symbol());
  }
  return out;
}

void NomaConfig::validate() const {
  if (powers.size() < 2) throw std::invalid_argument("NomaConfig: need at least two users");
  double sum = 0.0;
  for (double p : powers) {
    if (!(p > 0.0)) throw std::invalid_argument("NomaConfig: power fractions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("NomaConfig: power fractions must sum to 1");
}

ComplexVector noma_superpose(const std::vector<ComplexVector>& user_symbols,
                             const NomaConfig& cfg) {
  cfg.validate();
  if (user_symbols.size() != cfg.powers.size())
    throw std::invalid_argument("noma_superpose: user count != power count");
  const Eigen::Index len = user_symbols.front().size();
  ComplexVector y = ComplexVector::Zero(len);
  for (std::size_t i = 0; i < user_symbols.size(); ++i) {
    if (user_symbols[i].size() != len)
      throw std::invalid_argument("noma_superpose: user streams differ in length");
    y += std::sqrt(cfg.powers[i]) * user_symbols[i];
  }
  return y;
}

namespace {

// Indices sorted by received power p_i |g_i|^2 descending, ties toward the
// lower user index.
std::vector<int> sic_order(const std::vector<Complex>& gains, const std::vector<double>& powers) {
  std::vector<int> order(gains.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return powers[static_cast<std::size_t>(a)] * std::norm(gains[static_cast<std::size_t>(a)]) >
           powers[static_cast<std::size_t>(b)] * std::norm(gains[static_cast<std::size_t>(b)]);
  });
  return order;
}

}  // namespace

SicResult sic_decode(const ComplexVector& y, const std::vector<Complex>& gains,
                     const NomaConfig& cfg, const Constellation& c) {
  cfg.validate();
  if (gains.size() != cfg.powers.size())
    throw std::invalid_argument("sic_decode: gain count != power count");

  const std::size_t users = gains.size();
  SicResult out;
  out.symbols.assign(users, ComplexVector::Zero(y.size()));
  out.bits.assign(users, std::vector<std::uint8_t>(
                             static_cast<std::size_t>(y.size()) * c.bits_per_symbol(), 0));
  out.undecodable.assign(users, false);
  out.decode_order = sic_order(gains, cfg.powers);

  ComplexVector residual = y;
  for (int user : out.decode_order) {
    const std::size_t u = static_cast<std::size_t>(user);
    const Complex scale = std::sqrt(cfg.powers[u]) * gains[u];
    if (std::abs(scale) == 0.0) {
      out.undecodable[u] = true;
      continue;
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const int label = c.slice_label(residual(i) / scale);
      out.symbols[u](i) = c.map_label(label);
      c.label_to_bits(label, out.bits[u].data() + i * c.bits_per_symbol());
    }
    residual -= scale * out.symbols[u];
  }
  return out;
}

RealVector achievable_rate(const std::vector<Complex>& gains, const NomaConfig& cfg,
                           double noise_variance) {
  cfg.validate();
  if (gains.size() != cfg.powers.size())
    throw std::invalid_argument("achievable_rate: gain count != power count");
  if (!(noise_variance > 0.0))
    throw std::invalid_argument("achievable_rate: noise variance must be positive");

  const std::vector<int> order = sic_order(gains, cfg.powers);
  RealVector rates(static_cast<Eigen::Index>(gains.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t u = static_cast<std::size_t>(order[i]);
    const double signal = cfg.powers[u] * std::norm(gains[u]);
    // Summed fresh per user: a running subtraction can leave a negative
    // rounding residual that swamps a tiny noise variance.
    double interference = 0.0;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const std::size_t v = static_cast<std::size_t>(order[j]);
      interference += cfg.powers[v] * std::norm(gains[v]);
    }
    rates(static_cast<Eigen::Index>(u)) =
        std::log2(1.0 + signal / (noise_variance + interference));
  }
  return rates;
}

namespace {

// Parity-check columns of the systematic Hamming(7,4) code; all distinct and
// nonzero, so every single-bit error has a unique syndrome.
constexpr std::uint8_t kHammingColumns[7] = {0b110, 0b101, 0b011, 0b111, 0b100, 0b010, 0b001};

}  // namespace

std::array<std::uint8_t, 7> hamming74_encode(const std::array<std::uint8_t, 4>& data) {
  for (std::uint8_t b : data)
    if (b > 1) throw std::invalid_argument("hamming74_encode: bits must be 0 or 1");
  std::array<std::uint8_t, 7> code{};
  for (int i = 0; i < 4; ++i) code[static_cast<std::size_t>(i)] = data[static_cast<std::size_t>(i)];
  code[4] = data[0] ^ data[1] ^ data[3];
  code[5] = data[0] ^ data[2] ^ data[3];
  code[6] = data[1] ^ data[2] ^ data[3];
  return code;
}

std::array<std::uint8_t, 4> hamming74_decode(const std::array<std::uint8_t, 7>& code) {
  for (std::uint8_t b : code)
    if (b > 1) throw std::invalid_argument("hamming74_decode: bits must be 0 or 1");
  std::array<std::uint8_t, 7> c = code;
  const std::uint8_t s = static_cast<std::uint8_t>(((c[0] ^ c[1] ^ c[3] ^ c[4]) << 2) |
                                                   ((c[0] ^ c[2] ^ c[3] ^ c[5]) << 1) |
                                                   (c[1] ^ c[2] ^ c[3] ^ c[6]));
  if (s != 0) {
    for (int i = 0; i < 7; ++i) {
      if (kHammingColumns[i] == s) {
        c[static_cast<std::size_t>(i)] ^= 1;
        break;
      }
    }
  }
  return {c[0], c[1], c[2], c[3]};
}

PrecoderPair svd_precoder(const ComplexMatrix& h, int num_streams) {
  if (num_streams < 1) throw std::invalid_argument("svd_precoder: num_streams must be >= 1");
  const numerics::SvdFactors f = numerics::svd(h);
  const Eigen::Index kmax = std::min(h.rows(), h.cols());
  if (num_streams > kmax || !(f.sigma(num_streams - 1) > 1e-12 * f.sigma(0)))
    throw std::invalid_argument("svd_precoder: num_streams exceeds the channel rank");
  PrecoderPair out;
  out.precoder = f.v.leftCols(num_streams);
  out.combiner = f.u.leftCols(num_streams).adjoint();
  out.effective_diag = f.sigma.head(num_streams);
  return out;
}

PrecoderPair gmd_precoder(const ComplexMatrix& h, int num_streams) {
  if (num_streams < 1) throw std::invalid_argument("gmd_precoder: num_streams must be >= 1");
  const numerics::GmdFactors g = numerics::gmd(h, num_streams);
  PrecoderPair out;
  out.precoder = g.p;
  out.combiner = g.q.adjoint();
  out.effective_diag = RealVector::Constant(num_streams, g.sigma_bar);
  return out;
}

HybridFactors hybrid_decompose(const ComplexMatrix& f_opt, int num_rf_chains, int iters) {
  const Eigen::Index num_tx = f_opt.rows(), num_streams = f_opt.cols();
  if (num_rf_chains < num_streams)
    throw std::invalid_argument("hybrid_decompose: need num_rf_chains >= num_streams");
  if (num_rf_chains > num_tx)
    throw std::invalid_argument("hybrid_decompose: need num_rf_chains <= num_tx");
  if (iters < 1) throw std::invalid_argument("hybrid_decompose: iters must be >= 1");
  require_finite(f_opt, "hybrid_decompose");

  const double mod = 1.0 / std::sqrt(static_cast<double>(num_tx));
  HybridFactors out;
  out.f_rf = ComplexMatrix::Constant(num_tx, num_rf_chains, Complex(mod, 0.0));

  // Streams 0..num_split-1 own two chains (2k, 2k+1) and split their target
  // column across two phasors: any z with |z| <= 2 b mod equals
  // b mod e^{j(psi+delta)} + b mod e^{j(psi-delta)} with cos(delta) scaled to
  // |z|. Remaining streams own one chain carrying their target phases.
  const Eigen::Index num_split = std::min(num_streams, num_rf_chains - num_streams);
  for (Eigen::Index k = 0; k < num_streams; ++k) {
    if (k < num_split) {
      double beta = std::max(f_opt.col(k).cwiseAbs().maxCoeff() / (2.0 * mod), 1e-300);
      for (Eigen::Index i = 0; i < num_tx; ++i) {
        const double psi = std::arg(f_opt(i, k));
        const double delta = std::acos(std::min(1.0, std::abs(f_opt(i, k)) / (2.0 * beta * mod)));
        out.f_rf(i, 2 * k) = mod * std::exp(kJ * (psi + delta));
        out.f_rf(i, 2 * k + 1) = mod * std::exp(kJ * (psi - delta));
      }
    } else {
      for (Eigen::Index i = 0; i < num_tx; ++i)
        out.f_rf(i, num_split + k) = mod * std::exp(kJ * std::arg(f_opt(i, k)));
    }
  }

  out.f_bb = out.f_rf.completeOrthogonalDecomposition().solve(f_opt);
  out.residuals.reserve(static_cast<std::size_t>(iters));
  for (int it = 0; it < iters; ++it) {
    for (Eigen::Index i = 0; i < num_tx; ++i) {
      // Row residual maintained incrementally across the phase sweep.
      Eigen::RowVectorXcd err = f_opt.row(i) - out.f_rf.row(i) * out.f_bb;
      for (Eigen::Index j = 0; j < num_rf_chains; ++j) {
        const Eigen::RowVectorXcd freed = err + out.f_rf(i, j) * out.f_bb.row(j);
        const Complex gain = (freed * out.f_bb.row(j).adjoint())(0, 0);
        // Zero coupling leaves the phase indeterminate; keep the current one.
        if (std::abs(gain) > 1e-300) out.f_rf(i, j) = mod * std::exp(kJ * std::arg(gain));
        err = freed - out.f_rf(i, j) * out.f_bb.row(j);
      }
    }
    out.f_bb = out.f_rf.completeOrthogonalDecomposition().solve(f_opt);
    out.residuals.push_back((f_opt - out.f_rf * out.f_bb).norm());
  }
  const double power = (out.f_rf * out.f_bb).squaredNorm();
  out.f_bb *= std::sqrt(static_cast<double>(num_streams) / power);
  return out;
}

}  // namespace phylab::classical
