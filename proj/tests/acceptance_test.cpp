// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one printed PASS/FAIL line per criterion, with the
// measured numbers and the pinned tolerance next to each other. Every
// criterion is also a doctest assertion so the suite fails loudly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "phylab/channel.hpp"
#include "phylab/classical.hpp"
#include "phylab/cli.hpp"
#include "phylab/constellation.hpp"
#include "phylab/experiments.hpp"
#include "phylab/metrics.hpp"
#include "phylab/numerics.hpp"
#include "phylab/rng.hpp"

using namespace phylab;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool pass, const char* fmt, ...) {
  char detail[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(detail, sizeof detail, fmt, args);
  va_end(args);
  std::printf("ACCEPTANCE %2d [%s] %s\n", criterion, pass ? "PASS" : "FAIL", detail);
  std::fflush(stdout);
  CHECK_MESSAGE(pass, "criterion ", criterion, ": ", detail);
}

const experiments::SweepRow& row_of(const experiments::SweepResult& res,
                                    const std::string& method, double snr_db,
                                    metrics::Metric metric) {
  for (const auto& row : res.rows)
    if (row.method == method && row.snr_db == snr_db && row.metric == metric) return row;
  throw std::runtime_error("row not found: " + method + " @ " + std::to_string(snr_db));
}

// x <= bound within num_se combined standard errors.
bool within_slack(const experiments::SweepRow& x, const experiments::SweepRow& bound,
                  double num_se) {
  return x.value <= bound.value + num_se * std::hypot(x.standard_error, bound.standard_error);
}

double exponential_integral_e1(double x) { return -std::expint(-x); }

// Two-user Rayleigh downlink with power split a/b and perfect cancellation:
// ergodic sum rate in bits per channel use.
double noma_sum_rate_closed_form(double snr_db, double a, double b) {
  const double s2 = std::pow(10.0, -snr_db / 10.0);
  const double term = (a / (a - b)) * std::exp(s2 / a) * exponential_integral_e1(s2 / a) -
                      (b / (a - b)) * std::exp(s2 / b) * exponential_integral_e1(s2 / b);
  return term / std::numbers::ln2;
}

// Hard-decision block error rate of the (7,4) code from the per-bit flip
// probability: a block survives zero or one flipped code bit.
double hamming_bler_exact(double ebn0_db) {
  const double rho = std::pow(10.0, ebn0_db / 10.0);
  const double p = metrics::q_function(std::sqrt(8.0 * rho / 7.0));
  return 1.0 - std::pow(1.0 - p, 7) - 7.0 * p * std::pow(1.0 - p, 6);
}

std::vector<double> smooth3(const std::vector<double>& v) {
  std::vector<double> s(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 < v.size() ? i + 1 : v.size() - 1;
    s[i] = (v[lo] + v[i] + v[hi]) / 3.0;
  }
  return s;
}

}  // namespace

TEST_CASE("criterion 1: seeded gmd factorizations reconstruct and equalize") {
  const auto t0 = Clock::now();
  double worst_recon = 0.0;
  double worst_diag = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Rng rng(derive_seed(4242, {static_cast<std::uint64_t>(trial)}));
    const Eigen::Index rows = 1 + rng.uniform_int(16);
    const Eigen::Index cols = 1 + rng.uniform_int(16);
    ComplexMatrix a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) a(r, c) = rng.complex_gaussian(1.0);
    const Eigen::Index k = std::min(rows, cols);
    const numerics::GmdFactors f = numerics::gmd(a, k);
    const double recon = (f.q * f.r * f.p.adjoint() - a).cwiseAbs().maxCoeff() /
                         a.cwiseAbs().maxCoeff();
    worst_recon = std::max(worst_recon, recon);
    for (Eigen::Index i = 0; i < k; ++i)
      worst_diag = std::max(worst_diag, std::abs(f.r(i, i) - Complex(f.sigma_bar, 0.0)) /
                                            f.sigma_bar);
  }
  const double wall = seconds_since(t0);
  const bool pass = worst_recon <= 1e-9 && worst_diag <= 1e-8 && wall < 10.0;
  report(1, pass,
         "gmd x1000 dims<=16: recon_rel=%.2e (tol 1e-9), diag_rel=%.2e (tol 1e-8), %.1fs (<10s)",
         worst_recon, worst_diag, wall);
}

TEST_CASE("criterion 2: gradient checks pass for every layer and loss combination") {
  const auto t0 = Clock::now();
  const std::vector<cli::GradCheckCase> cases = cli::gradcheck_suite();
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, c.max_rel_error);
  const double wall = seconds_since(t0);
  const bool pass = !cases.empty() && worst <= 1e-6 && wall < 30.0;
  report(2, pass, "gradcheck %zu cases: max_rel=%.2e (tol 1e-6), %.1fs (<30s)", cases.size(),
         worst, wall);
}

TEST_CASE("criterion 3: uncoded qpsk over awgn matches the closed form") {
  const auto t0 = Clock::now();
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  const ComplexMatrix h = ComplexMatrix::Identity(1, 1);
  Rng rng(derive_seed(4243, {}));
  double worst_rel = 0.0;
  const std::int64_t symbols_per_point = 200000;  // 400k bits >= 1e5 bits per point
  for (double snr_db : {0.0, 2.0, 4.0, 6.0, 8.0}) {
    metrics::ProportionAccumulator ber;
    for (std::int64_t s = 0; s < symbols_per_point; ++s) {
      std::vector<std::uint8_t> bits = {static_cast<std::uint8_t>(rng.uniform_int(2)),
                                        static_cast<std::uint8_t>(rng.uniform_int(2))};
      const ComplexVector x = qpsk.map_bits(bits);
      const ComplexVector y = channel::apply_awgn(x, snr_db, 1.0, rng);
      const classical::DetectionResult det = classical::zf_detect(h, y, qpsk);
      ber.add(det.bits[0] != bits[0]);
      ber.add(det.bits[1] != bits[1]);
    }
    const double expected = metrics::q_function(std::sqrt(std::pow(10.0, snr_db / 10.0)));
    if (expected >= 1e-3)
      worst_rel = std::max(worst_rel, std::abs(ber.value() - expected) / expected);
  }
  const double wall = seconds_since(t0);
  const bool pass = worst_rel <= 0.10 && wall < 60.0;
  report(3, pass, "qpsk zf vs Q(sqrt(snr)) at {0..8}dB, 4e5 bits/pt: max_rel=%.3f (tol 0.10), %.1fs (<60s)",
         worst_rel, wall);
}

TEST_CASE("criterion 4: cyclic prefix diagonalizes; ls pilot error hits the noise floor") {
  const auto t0 = Clock::now();
  channel::OfdmConfig cfg;
  cfg.num_subcarriers = 16;
  cfg.cp_length = 4;
  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);

  double worst_diag = 0.0;
  Rng rng(derive_seed(4244, {}));
  for (int trial = 0; trial < 200; ++trial) {
    cfg.num_taps = 2 + trial % 4;  // L in {2..5}, cp >= L-1 throughout
    const ComplexVector taps = channel::sample_multipath_taps(cfg.num_taps, rng);
    ComplexVector x(16);
    for (int k = 0; k < 16; ++k) x(k) = qpsk.map_label(rng.uniform_int(4));
    const ComplexVector y =
        channel::ofdm_demodulate(channel::apply_multipath(channel::ofdm_modulate(x, cfg), taps),
                                 cfg);
    const ComplexVector hf = channel::channel_freq_response(taps, 16);
    worst_diag = std::max(worst_diag, (y - hf.cwiseProduct(x)).cwiseAbs().maxCoeff());
  }

  // LS on every subcarrier with pilot amplitude A: per-tone error variance
  // sigma^2 / A^2.
  cfg.num_taps = 3;
  cfg.pilot_spacing = 1;
  const double sigma2 = 0.1;
  const double amp = std::sqrt(2.0);
  ComplexVector pilots(16);
  for (int k = 0; k < 16; ++k) pilots(k) = amp * qpsk.map_label(k % 4);
  metrics::MeanAccumulator mse;
  for (int trial = 0; trial < 100000; ++trial) {
    const ComplexVector taps = channel::sample_multipath_taps(3, rng);
    const ComplexVector hf = channel::channel_freq_response(taps, 16);
    ComplexVector y(16);
    for (int k = 0; k < 16; ++k) y(k) = hf(k) * pilots(k) + rng.complex_gaussian(sigma2);
    const ComplexVector est = classical::ls_channel_estimate(y, pilots, cfg);
    for (int k = 0; k < 16; ++k) mse.add(std::norm(est(k) - hf(k)));
  }
  const double expected = sigma2 / (amp * amp);
  const double rel = std::abs(mse.value() - expected) / expected;
  const double wall = seconds_since(t0);
  const bool pass = worst_diag <= 1e-10 && rel <= 0.05;
  report(4, pass,
         "ofdm diag=%.2e (tol 1e-10); ls mse rel err=%.4f vs sigma^2/|Xp|^2 (tol 0.05), %.1fs",
         worst_diag, rel, wall);
}

TEST_CASE("criterion 5: hamming(7,4) corrects single flips and matches enumeration") {
  const auto t0 = Clock::now();
  bool all_corrected = true;
  for (int word = 0; word < 16; ++word) {
    std::array<std::uint8_t, 4> data;
    for (int b = 0; b < 4; ++b) data[b] = static_cast<std::uint8_t>((word >> b) & 1);
    const std::array<std::uint8_t, 7> code = classical::hamming74_encode(data);
    all_corrected &= classical::hamming74_decode(code) == data;
    for (int flip = 0; flip < 7; ++flip) {
      std::array<std::uint8_t, 7> corrupted = code;
      corrupted[flip] ^= 1;
      all_corrected &= classical::hamming74_decode(corrupted) == data;
    }
  }

  Rng rng(derive_seed(4245, {}));
  double worst_rel = 0.0;
  for (double ebn0_db : {2.0, 4.0, 6.0}) {
    const double rho = std::pow(10.0, ebn0_db / 10.0);
    const double sigma = std::sqrt(1.0 / (2.0 * (4.0 / 7.0) * rho));
    metrics::ProportionAccumulator bler;
    for (int trial = 0; trial < 2000000; ++trial) {
      std::array<std::uint8_t, 4> data;
      for (int b = 0; b < 4; ++b) data[b] = static_cast<std::uint8_t>(rng.uniform_int(2));
      const std::array<std::uint8_t, 7> code = classical::hamming74_encode(data);
      std::array<std::uint8_t, 7> hard;
      for (int b = 0; b < 7; ++b) {
        const double y = (code[b] ? 1.0 : -1.0) + rng.gaussian(0.0, sigma);
        hard[b] = y > 0.0 ? 1 : 0;
      }
      bler.add(classical::hamming74_decode(hard) != data);
    }
    worst_rel = std::max(worst_rel,
                         std::abs(bler.value() - hamming_bler_exact(ebn0_db)) /
                             hamming_bler_exact(ebn0_db));
  }
  const double wall = seconds_since(t0);
  const bool pass = all_corrected && worst_rel <= 0.05;
  report(5, pass,
         "single-flip decode %s; bler vs enumeration at {2,4,6}dB x2e6: max_rel=%.4f (tol 0.05), %.1fs",
         all_corrected ? "16x8/16x8 ok" : "BROKEN", worst_rel, wall);
}

TEST_CASE("criterion 6: learned (7,4) code stays within 2x of hamming at 6 dB") {
  const auto t0 = Clock::now();
  const experiments::SweepResult res =
      experiments::run_named_experiment("autoencoder_74", {{"snr_grid_db", "[6]"}});
  const auto& ae = row_of(res, "autoencoder", 6.0, metrics::Metric::BlockErrorRate);
  const auto& ham = row_of(res, "hamming_hard", 6.0, metrics::Metric::BlockErrorRate);
  const double wall = seconds_since(t0);
  const bool pass = ae.value <= 2.0 * ham.value && wall < 600.0;
  report(6, pass, "autoencoder bler=%.2e vs hamming %.2e at 6dB (tol 2.0x, ratio %.2f), %.0fs (<600s)",
         ae.value, ham.value, ae.value / ham.value, wall);
}

TEST_CASE("criterion 7: music hits the grid at 20 dB; learned doa degrades monotonically") {
  const auto t0 = Clock::now();
  const channel::UlaConfig ula;
  std::vector<double> abs_errors;
  Rng rng(derive_seed(4247, {}));
  const double sigma2 = std::pow(10.0, -20.0 / 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double theta_deg = rng.uniform(-60.0, 60.0);
    const ComplexVector a = channel::steering_vector(theta_deg * std::numbers::pi / 180.0, ula);
    ComplexMatrix snapshots(ula.num_antennas, 16);
    for (int t = 0; t < 16; ++t) {
      const Complex s = rng.complex_gaussian(1.0);
      for (int n = 0; n < ula.num_antennas; ++n)
        snapshots(n, t) = a(n) * s + rng.complex_gaussian(sigma2);
    }
    const classical::DoaEstimates est = classical::music_doa(snapshots, 1, ula, 0.1);
    abs_errors.push_back(std::abs(est.angles_deg.at(0) - theta_deg));
  }
  std::sort(abs_errors.begin(), abs_errors.end());
  const double median = (abs_errors[49] + abs_errors[50]) / 2.0;

  const experiments::SweepResult res =
      experiments::run_named_experiment("doa_estimation", {{"snr_grid_db", "[0,5,10,15,20]"}});
  std::vector<double> dnn_mse;
  for (double snr : {0.0, 5.0, 10.0, 15.0, 20.0})
    dnn_mse.push_back(row_of(res, "dnn", snr, metrics::Metric::MseDeg2).value);
  const std::vector<double> smoothed = smooth3(dnn_mse);
  bool monotone = true;
  for (std::size_t i = 0; i + 1 < smoothed.size(); ++i)
    monotone &= smoothed[i + 1] <= smoothed[i] + 1e-12;
  const double wall = seconds_since(t0);
  const bool pass = median <= 0.2 && monotone && wall < 600.0;
  report(7, pass,
         "music median |err|=%.3fdeg (tol 0.2); dnn mse smoothed %s [%.1f %.1f %.1f %.1f %.1f], %.0fs (<600s)",
         median, monotone ? "monotone" : "NOT MONOTONE", smoothed[0], smoothed[1], smoothed[2],
         smoothed[3], smoothed[4], wall);
}

TEST_CASE("criterion 8: gmd beats svd digitally at 10 dB; hybrids never beat digital") {
  const auto t0 = Clock::now();
  const experiments::SweepResult at10 = experiments::run_named_experiment(
      "mmwave_precoding",
      {{"include_dnn", "false"}, {"snr_grid_db", "[10]"}, {"trials_per_point", "10000"}});
  const auto& gmd = row_of(at10, "gmd_digital", 10.0, metrics::Metric::BitErrorRate);
  const auto& svd = row_of(at10, "svd_digital", 10.0, metrics::Metric::BitErrorRate);
  const bool gmd_wins = within_slack(gmd, svd, 3.0);

  const experiments::SweepResult sweep = experiments::run_named_experiment(
      "mmwave_precoding", {{"include_dnn", "false"}, {"trials_per_point", "2000"}});
  bool digital_floor = true;
  for (double snr : {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0}) {
    const auto& sd = row_of(sweep, "svd_digital", snr, metrics::Metric::BitErrorRate);
    const auto& sh = row_of(sweep, "svd_hybrid", snr, metrics::Metric::BitErrorRate);
    const auto& gd = row_of(sweep, "gmd_digital", snr, metrics::Metric::BitErrorRate);
    const auto& gh = row_of(sweep, "gmd_hybrid", snr, metrics::Metric::BitErrorRate);
    digital_floor &= within_slack(sd, sh, 3.0);
    digital_floor &= within_slack(gd, gh, 3.0);
  }
  const double wall = seconds_since(t0);
  const bool pass = gmd_wins && digital_floor && wall < 300.0;
  report(8, pass,
         "gmd=%.4f svd=%.4f at 10dB x1e4 (gmd<=svd+3se: %s); hybrids>=digital-3se at all snr: %s; %.0fs (<300s)",
         gmd.value, svd.value, gmd_wins ? "yes" : "NO", digital_floor ? "yes" : "NO", wall);
}

TEST_CASE("criterion 9: identical config and seed reproduce the csv byte for byte") {
  const auto t0 = Clock::now();
  const experiments::KeyValueList settings = {{"snr_grid_db", "[0,6]"},
                                              {"trials_per_point", "2000"},
                                              {"train_examples", "1000"},
                                              {"validation_examples", "100"},
                                              {"train_iterations", "400"}};
  const experiments::SweepResult a = experiments::run_named_experiment("autoencoder_74", settings);
  const experiments::SweepResult b = experiments::run_named_experiment("autoencoder_74", settings);
  const std::string csv_a = cli::format_results_csv(a, a.master_seed, "selfcheck");
  const std::string csv_b = cli::format_results_csv(b, b.master_seed, "selfcheck");
  const double wall = seconds_since(t0);
  const bool pass = csv_a == csv_b && !a.rows.empty();
  report(9, pass, "rerun with same config+seed: csv %s (%zu rows, includes training), %.0fs",
         pass ? "byte-identical" : "DIFFERS", a.rows.size(), wall);
}

TEST_CASE("criterion 10: sic rates match the closed form; noiseless sic is exact") {
  const auto t0 = Clock::now();
  const experiments::SweepResult res = experiments::run_named_experiment(
      "noma_detection",
      {{"include_dnn", "false"}, {"snr_grid_db", "[0,10,20]"}, {"trials_per_point", "20000"}});
  double worst_se_ratio = 0.0;
  for (double snr : {0.0, 10.0, 20.0}) {
    const auto& rate = row_of(res, "sic_perfect", snr, metrics::Metric::SumRateBpsHz);
    const double expected = noma_sum_rate_closed_form(snr, 0.8, 0.2);
    worst_se_ratio =
        std::max(worst_se_ratio, std::abs(rate.value - expected) / rate.standard_error);
  }

  const classical::Constellation qpsk(classical::ConstellationKind::QPSK);
  classical::NomaConfig noma;
  noma.powers = {0.8, 0.2};
  const std::vector<Complex> unit_gains = {Complex(1.0, 0.0), Complex(1.0, 0.0)};
  bool exact = true;
  for (int strong = 0; strong < 4; ++strong) {
    for (int weak = 0; weak < 4; ++weak) {
      const ComplexVector x1 = ComplexVector::Constant(1, qpsk.map_label(strong));
      const ComplexVector x2 = ComplexVector::Constant(1, qpsk.map_label(weak));
      const ComplexVector y = classical::noma_superpose({x1, x2}, noma);
      const classical::SicResult sic = classical::sic_decode(y, unit_gains, noma, qpsk);
      exact &= sic.symbols[0](0) == x1(0) && sic.symbols[1](0) == x2(0);
    }
  }
  const double wall = seconds_since(t0);
  const bool pass = worst_se_ratio <= 3.0 && exact;
  report(10, pass,
         "sic_perfect rate vs closed form: worst %.2f se (tol 3); noiseless 16-pair sic %s; %.0fs",
         worst_se_ratio, exact ? "exact" : "WRONG", wall);
}
