#include "mixedbo/sobol.hpp"

#include <bit>
#include <stdexcept>

#include "mixedbo/rng.hpp"

namespace mixedbo {
namespace {

// Polynomials over GF(2) are encoded as bitmasks including the leading term,
// e.g. x^3 + x + 1 -> 0b1011.

std::uint32_t gf2_mulmod(std::uint32_t a, std::uint32_t b, std::uint32_t mod,
                         int deg) {
  std::uint64_t acc = 0;
  std::uint64_t aa = a;
  while (b) {
    if (b & 1u) acc ^= aa;
    b >>= 1;
    aa <<= 1;
  }
  // reduce acc modulo mod
  for (int bit = 62; bit >= deg; --bit) {
    if (acc & (1ULL << bit)) {
      acc ^= static_cast<std::uint64_t>(mod) << (bit - deg);
    }
  }
  return static_cast<std::uint32_t>(acc);
}

std::uint32_t gf2_powmod_x(std::uint64_t e, std::uint32_t mod, int deg) {
  std::uint32_t result = 1;
  std::uint32_t base = 2;  // the polynomial "x"
  while (e) {
    if (e & 1) result = gf2_mulmod(result, base, mod, deg);
    base = gf2_mulmod(base, base, mod, deg);
    e >>= 1;
  }
  return result;
}

std::vector<std::uint64_t> prime_factors(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) {
      out.push_back(p);
      while (n % p == 0) n /= p;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

bool is_primitive(std::uint32_t poly, int deg) {
  if ((poly & 1u) == 0) return false;  // x divides it
  const std::uint64_t order = (1ULL << deg) - 1;
  if (gf2_powmod_x(order, poly, deg) != 1u) return false;
  for (std::uint64_t q : prime_factors(order)) {
    if (gf2_powmod_x(order / q, poly, deg) == 1u) return false;
  }
  return true;
}

// First `count` primitive polynomials by increasing degree, degree-1 first.
std::vector<std::pair<std::uint32_t, int>> primitive_polynomials(
    std::size_t count) {
  std::vector<std::pair<std::uint32_t, int>> polys;
  for (int deg = 1; polys.size() < count && deg <= 24; ++deg) {
    const std::uint32_t lo = 1u << deg;
    const std::uint32_t hi = 1u << (deg + 1);
    for (std::uint32_t p = lo; p < hi && polys.size() < count; ++p) {
      if (is_primitive(p, deg)) polys.emplace_back(p, deg);
    }
  }
  if (polys.size() < count) {
    throw std::runtime_error("sobol: dimension beyond supported range");
  }
  return polys;
}

}  // namespace

SobolSequence::SobolSequence(std::size_t dimension, std::uint64_t seed)
    : dim_(dimension),
      state_(dimension, 0),
      shift_(dimension, 0),
      directions_(dimension * kBits, 0) {
  if (dimension == 0) throw std::invalid_argument("sobol: dimension must be >= 1");

  // Fixed internal stream for initial direction values; the user seed only
  // controls the scrambling, so the underlying net is shared across seeds.
  Rng init_rng = make_rng(0x536f626f6cULL);

  // Dimension 0: van der Corput, m_j = 1 for all j.
  for (int j = 0; j < kBits; ++j) {
    directions_[0 * kBits + j] = 1u << (kBits - 1 - j);
  }

  const auto polys =
      dim_ > 1 ? primitive_polynomials(dim_ - 1)
               : std::vector<std::pair<std::uint32_t, int>>{};
  for (std::size_t d = 1; d < dim_; ++d) {
    const auto [poly, s] = polys[d - 1];
    std::vector<std::uint32_t> m(kBits);
    for (int j = 0; j < s && j < kBits; ++j) {
      // any odd m_j in [1, 2^(j+1)) is admissible
      m[j] = (static_cast<std::uint32_t>(init_rng()) % (1u << (j + 1))) | 1u;
    }
    for (int j = s; j < kBits; ++j) {
      // recurrence: m_j = 2 a_1 m_{j-1} ^ 4 a_2 m_{j-2} ^ ... ^ 2^s m_{j-s} ^ m_{j-s}
      std::uint32_t v = m[j - s] ^ (m[j - s] << s);
      for (int k = 1; k < s; ++k) {
        const std::uint32_t a_k = (poly >> (s - k)) & 1u;
        if (a_k) v ^= m[j - k] << k;
      }
      m[j] = v;
    }
    for (int j = 0; j < kBits; ++j) {
      directions_[d * kBits + j] = m[j] << (kBits - 1 - j);
    }
  }

  Rng scramble_rng = make_rng(derive_seed(seed, 0x7363726dULL));
  for (std::size_t d = 0; d < dim_; ++d) {
    shift_[d] = static_cast<std::uint32_t>(scramble_rng() >> 32);
  }
}

std::vector<double> SobolSequence::next() {
  std::vector<double> point(dim_);
  if (index_ > 0) {
    // Gray-code update: flip the direction of the lowest zero bit of n-1.
    const int c = std::countr_one(index_ - 1);
    for (std::size_t d = 0; d < dim_; ++d) {
      state_[d] ^= directions_[d * kBits + c];
    }
  }
  constexpr double scale = 0x1.0p-32;
  for (std::size_t d = 0; d < dim_; ++d) {
    point[d] = (state_[d] ^ shift_[d]) * scale;
  }
  ++index_;
  return point;
}

std::vector<std::vector<double>> SobolSequence::draw(std::size_t n) {
  std::vector<std::vector<double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

}  // namespace mixedbo
