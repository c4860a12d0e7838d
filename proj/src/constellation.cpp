// SPDX-License-Identifier: Apache-2.0
#include "phylab/constellation.hpp"

#include <cmath>

namespace phylab::classical {

namespace {

// Per-axis Gray levels for 16QAM before 1/sqrt(10) scaling: labels
// 00, 01, 11, 10 walk -3, -1, +1, +3 so neighbors differ in one bit.
double qam16_axis_level(int two_bits) {
  switch (two_bits) {
    case 0b00: return -3.0;
    case 0b01: return -1.0;
    case 0b11: return 1.0;
    default: return 3.0;  // 0b10
  }
}

}  // namespace

Constellation::Constellation(ConstellationKind kind) : kind_(kind) {
  switch (kind) {
    case ConstellationKind::BPSK:
      bits_per_symbol_ = 1;
      points_ = {Complex(1.0, 0.0), Complex(-1.0, 0.0)};
      break;
    case ConstellationKind::QPSK: {
      bits_per_symbol_ = 2;
      const double s = 1.0 / std::sqrt(2.0);
      points_.resize(4);
      for (int label = 0; label < 4; ++label) {
        const int b0 = (label >> 1) & 1, b1 = label & 1;
        points_[label] = Complex(s * (1 - 2 * b0), s * (1 - 2 * b1));
      }
      break;
    }
    case ConstellationKind::QAM16: {
      bits_per_symbol_ = 4;
      const double s = 1.0 / std::sqrt(10.0);
      points_.resize(16);
      for (int label = 0; label < 16; ++label) {
        const int hi = (label >> 2) & 3, lo = label & 3;
        points_[label] = Complex(s * qam16_axis_level(hi), s * qam16_axis_level(lo));
      }
      break;
    }
  }
}

ComplexVector Constellation::map_bits(const std::vector<std::uint8_t>& bits) const {
  if (bits.size() % static_cast<std::size_t>(bits_per_symbol_) != 0)
    throw std::invalid_argument("Constellation::map_bits: bit count not a multiple of bits per symbol");
  const Eigen::Index n = static_cast<Eigen::Index>(bits.size()) / bits_per_symbol_;
  ComplexVector out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = points_[static_cast<std::size_t>(bits_to_label(bits.data() + i * bits_per_symbol_))];
  return out;
}

int Constellation::slice_label(Complex y) const {
  int best = 0;
  double best_d = std::norm(y - points_[0]);
  for (int label = 1; label < size(); ++label) {
    const double d = std::norm(y - points_[static_cast<std::size_t>(label)]);
    if (d < best_d) {  // strict: ties stay with the lower label
      best_d = d;
      best = label;
    }
  }
  return best;
}

void Constellation::label_to_bits(int label, std::uint8_t* out) const {
  for (int b = 0; b < bits_per_symbol_; ++b)
    out[b] = static_cast<std::uint8_t>((label >> (bits_per_symbol_ - 1 - b)) & 1);
}

int Constellation::bits_to_label(const std::uint8_t* bits) const {
  int label = 0;
  for (int b = 0; b < bits_per_symbol_; ++b) label = (label << 1) | (bits[b] & 1);
  return label;
}

std::vector<std::uint8_t> Constellation::demap(const ComplexVector& symbols) const {
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(symbols.size()) * bits_per_symbol_);
  for (Eigen::Index i = 0; i < symbols.size(); ++i)
    label_to_bits(slice_label(symbols(i)), bits.data() + i * bits_per_symbol_);
  return bits;
}

}  // namespace phylab::classical
