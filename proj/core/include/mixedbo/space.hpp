#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixedbo {

enum class ParameterKind { kContinuous, kBinary, kOrdinal, kCategorical };

struct ParameterDescriptor {
  ParameterKind kind = ParameterKind::kContinuous;
  double lower = 0.0;      // continuous only
  double upper = 1.0;      // continuous only
  int cardinality = 2;     // ordinal/categorical; binary is fixed at 2
  std::string name;

  static ParameterDescriptor continuous(double lo, double hi, std::string name = "");
  static ParameterDescriptor binary(std::string name = "");
  static ParameterDescriptor ordinal(int cardinality, std::string name = "");
  static ParameterDescriptor categorical(int cardinality, std::string name = "");

  bool is_discrete() const { return kind != ParameterKind::kContinuous; }
  // number of values for discrete kinds
  int levels() const { return kind == ParameterKind::kBinary ? 2 : cardinality; }
};

// A design point. Values are aligned with the parameter list: a real for
// continuous parameters, an exact integer in {0,...,C-1} (stored as double)
// for discrete ones.
struct DesignPoint {
  std::vector<double> values;
};

// A point in the relaxed space. Layout per parameter: one coordinate for
// continuous (original units), one in [0,1] for binary, one in
// [-0.5, C-0.5) for ordinal, and a block of C coordinates in [0,1]^C for
// categorical. Total length equals effective_dim(space).
struct RelaxedPoint {
  std::vector<double> values;
};

struct OutOfDomainError : std::runtime_error {
  OutOfDomainError(std::size_t index, double value);
  std::size_t index;
  double value;
};

struct LayoutMismatchError : std::runtime_error {
  explicit LayoutMismatchError(const std::string& what) : std::runtime_error(what) {}
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParameterDescriptor> parameters);

  const std::vector<ParameterDescriptor>& parameters() const { return params_; }
  const ParameterDescriptor& parameter(std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }

  std::size_t num_continuous() const { return n_cont_; }
  std::size_t num_binary() const { return n_bin_; }
  std::size_t num_ordinal() const { return n_ord_; }
  std::size_t num_categorical() const { return n_cat_; }
  std::size_t num_discrete() const { return n_bin_ + n_ord_ + n_cat_; }

  // Indices (into the parameter list) by kind, in declaration order.
  const std::vector<std::size_t>& continuous_indices() const { return cont_idx_; }
  const std::vector<std::size_t>& discrete_indices() const { return disc_idx_; }

  // Offset of parameter i in the relaxed/one-hot layout.
  std::size_t relaxed_offset(std::size_t i) const { return relaxed_offset_[i]; }
  std::size_t relaxed_length() const { return relaxed_len_; }

  // Number of discrete configurations, capped (returns cap + 1 when above).
  std::uint64_t discrete_configurations(std::uint64_t cap) const;

 private:
  std::vector<ParameterDescriptor> params_;
  std::vector<std::size_t> cont_idx_;
  std::vector<std::size_t> disc_idx_;
  std::vector<std::size_t> relaxed_offset_;
  std::size_t relaxed_len_ = 0;
  std::size_t n_cont_ = 0, n_bin_ = 0, n_ord_ = 0, n_cat_ = 0;
};

// Throws OutOfDomainError identifying the first violating coordinate.
void validate(const SearchSpace& space, const DesignPoint& p);
bool is_valid(const SearchSpace& space, const DesignPoint& p) noexcept;

// Rounds binary/ordinal coordinates, takes the argmax of categorical blocks
// (ties to the lowest index) and clamps continuous coordinates to bounds.
DesignPoint discretize(const SearchSpace& space, const RelaxedPoint& r);

// Continuous and binary/ordinal values copied as reals, categoricals expanded
// to one-hot blocks. Inverse of discretize on its image.
RelaxedPoint one_hot_encode(const SearchSpace& space, const DesignPoint& p);

// d + #binary + #ordinal + sum of categorical cardinalities.
std::size_t effective_dim(const SearchSpace& space);

// n points of a seeded scrambled Sobol sequence over the relaxed space,
// discretized. Pure in (space, n, seed).
std::vector<DesignPoint> sobol_init(const SearchSpace& space, std::size_t n,
                                    std::uint64_t seed);

// Maps a continuous parameter value to/from the unit interval.
double to_unit(const ParameterDescriptor& p, double value);
double from_unit(const ParameterDescriptor& p, double unit);

// JSON schema: array of {name, kind, bounds?|cardinality?}.
std::string space_to_json(const SearchSpace& space);
SearchSpace space_from_json(const std::string& text);

}  // namespace mixedbo
