#pragma once

#include <cstdint>
#include <vector>

namespace mixedbo {

// Scrambled Sobol sequence generator.
//
// Direction numbers are built from primitive polynomials over GF(2) found by
// an exhaustive primitivity search at construction time, with initial values
// chosen by a fixed internal generator. Each one-dimensional projection is a
// (0,1)-sequence in base 2, so per-dimension stratification holds for any
// valid initialization. Scrambling is a per-dimension random digital shift
// derived from the seed; seed fully determines the output.
class SobolSequence {
 public:
  SobolSequence(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const { return dim_; }

  // Next point, entries in [0, 1).
  std::vector<double> next();

  // Convenience: n consecutive points.
  std::vector<std::vector<double>> draw(std::size_t n);

 private:
  static constexpr int kBits = 32;

  std::size_t dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;       // per-dimension XOR accumulator
  std::vector<std::uint32_t> shift_;       // per-dimension digital shift
  std::vector<std::uint32_t> directions_;  // dim_ * kBits, v[j] = dir[d*kBits+j]
};

}  // namespace mixedbo
