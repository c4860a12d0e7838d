// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "phylab/types.hpp"

namespace phylab::classical {

enum class ConstellationKind { BPSK, QPSK, QAM16 };

/// Gray-labeled unit-average-energy constellation. Label i carries the bit
/// pattern of i, most significant bit first; adjacent points differ in one
/// bit. Slicing picks the nearest point, ties toward the lower label.
class Constellation {
 public:
  explicit Constellation(ConstellationKind kind);

  ConstellationKind kind() const { return kind_; }
  int bits_per_symbol() const { return bits_per_symbol_; }
  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<Complex>& points() const { return points_; }

  Complex map_label(int label) const { return points_.at(static_cast<std::size_t>(label)); }

  /// bits.size() must be a multiple of bits_per_symbol().
  ComplexVector map_bits(const std::vector<std::uint8_t>& bits) const;

  int slice_label(Complex y) const;

  void label_to_bits(int label, std::uint8_t* out) const;
  int bits_to_label(const std::uint8_t* bits) const;

  /// Nearest-point demapping of a symbol vector back to bits.
  std::vector<std::uint8_t> demap(const ComplexVector& symbols) const;

 private:
  ConstellationKind kind_;
  int bits_per_symbol_;
  std::vector<Complex> points_;
};

}  // namespace phylab::classical
