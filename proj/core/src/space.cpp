#include "mixedbo/space.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "mixedbo/sobol.hpp"

namespace mixedbo {

ParameterDescriptor ParameterDescriptor::continuous(double lo, double hi,
                                                    std::string name) {
  if (!(lo < hi)) throw std::invalid_argument("continuous parameter needs lower < upper");
  ParameterDescriptor p;
  p.kind = ParameterKind::kContinuous;
  p.lower = lo;
  p.upper = hi;
  p.name = std::move(name);
  return p;
}

ParameterDescriptor ParameterDescriptor::binary(std::string name) {
  ParameterDescriptor p;
  p.kind = ParameterKind::kBinary;
  p.cardinality = 2;
  p.name = std::move(name);
  return p;
}

ParameterDescriptor ParameterDescriptor::ordinal(int cardinality, std::string name) {
  if (cardinality < 2) throw std::invalid_argument("ordinal cardinality must be >= 2");
  ParameterDescriptor p;
  p.kind = ParameterKind::kOrdinal;
  p.cardinality = cardinality;
  p.name = std::move(name);
  return p;
}

ParameterDescriptor ParameterDescriptor::categorical(int cardinality, std::string name) {
  if (cardinality < 2) throw std::invalid_argument("categorical cardinality must be >= 2");
  ParameterDescriptor p;
  p.kind = ParameterKind::kCategorical;
  p.cardinality = cardinality;
  p.name = std::move(name);
  return p;
}

OutOfDomainError::OutOfDomainError(std::size_t index_in, double value_in)
    : std::runtime_error("coordinate " + std::to_string(index_in) +
                         " out of domain (value " + std::to_string(value_in) + ")"),
      index(index_in),
      value(value_in) {}

SearchSpace::SearchSpace(std::vector<ParameterDescriptor> parameters)
    : params_(std::move(parameters)) {
  if (params_.empty()) throw std::invalid_argument("search space needs at least one parameter");
  relaxed_offset_.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    relaxed_offset_.push_back(relaxed_len_);
    switch (p.kind) {
      case ParameterKind::kContinuous:
        cont_idx_.push_back(i);
        ++n_cont_;
        relaxed_len_ += 1;
        break;
      case ParameterKind::kBinary:
        disc_idx_.push_back(i);
        ++n_bin_;
        relaxed_len_ += 1;
        break;
      case ParameterKind::kOrdinal:
        disc_idx_.push_back(i);
        ++n_ord_;
        relaxed_len_ += 1;
        break;
      case ParameterKind::kCategorical:
        disc_idx_.push_back(i);
        ++n_cat_;
        relaxed_len_ += static_cast<std::size_t>(p.cardinality);
        break;
    }
  }
}

std::uint64_t SearchSpace::discrete_configurations(std::uint64_t cap) const {
  std::uint64_t count = 1;
  for (std::size_t i : disc_idx_) {
    count *= static_cast<std::uint64_t>(params_[i].levels());
    if (count > cap) return cap + 1;
  }
  return count;
}

namespace {

bool coordinate_valid(const ParameterDescriptor& p, double v) {
  switch (p.kind) {
    case ParameterKind::kContinuous:
      return std::isfinite(v) && v >= p.lower && v <= p.upper;
    case ParameterKind::kBinary:
    case ParameterKind::kOrdinal:
    case ParameterKind::kCategorical: {
      if (!std::isfinite(v) || v != std::floor(v)) return false;
      return v >= 0.0 && v <= static_cast<double>(p.levels() - 1);
    }
  }
  return false;
}

}  // namespace

void validate(const SearchSpace& space, const DesignPoint& p) {
  if (p.values.size() != space.size()) {
    throw LayoutMismatchError("design point has " + std::to_string(p.values.size()) +
                              " values, space has " + std::to_string(space.size()));
  }
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!coordinate_valid(space.parameter(i), p.values[i])) {
      throw OutOfDomainError(i, p.values[i]);
    }
  }
}

bool is_valid(const SearchSpace& space, const DesignPoint& p) noexcept {
  if (p.values.size() != space.size()) return false;
  for (std::size_t i = 0; i < space.size(); ++i) {
    if (!coordinate_valid(space.parameter(i), p.values[i])) return false;
  }
  return true;
}

DesignPoint discretize(const SearchSpace& space, const RelaxedPoint& r) {
  if (r.values.size() != space.relaxed_length()) {
    throw LayoutMismatchError("relaxed point has " + std::to_string(r.values.size()) +
                              " values, layout needs " +
                              std::to_string(space.relaxed_length()));
  }
  DesignPoint out;
  out.values.resize(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& p = space.parameter(i);
    const std::size_t off = space.relaxed_offset(i);
    switch (p.kind) {
      case ParameterKind::kContinuous:
        out.values[i] = std::clamp(r.values[off], p.lower, p.upper);
        break;
      case ParameterKind::kBinary:
      case ParameterKind::kOrdinal: {
        // round half up, clamped to the index range
        const double rounded = std::floor(r.values[off] + 0.5);
        out.values[i] = std::clamp(rounded, 0.0, static_cast<double>(p.levels() - 1));
        break;
      }
      case ParameterKind::kCategorical: {
        int best = 0;
        double best_v = r.values[off];
        for (int c = 1; c < p.cardinality; ++c) {
          if (r.values[off + static_cast<std::size_t>(c)] > best_v) {
            best_v = r.values[off + static_cast<std::size_t>(c)];
            best = c;
          }
        }
        out.values[i] = static_cast<double>(best);
        break;
      }
    }
  }
  return out;
}

RelaxedPoint one_hot_encode(const SearchSpace& space, const DesignPoint& p) {
  validate(space, p);
  RelaxedPoint out;
  out.values.assign(space.relaxed_length(), 0.0);
  for (std::size_t i = 0; i < space.size(); ++i) {
    const auto& desc = space.parameter(i);
    const std::size_t off = space.relaxed_offset(i);
    if (desc.kind == ParameterKind::kCategorical) {
      out.values[off + static_cast<std::size_t>(p.values[i])] = 1.0;
    } else {
      out.values[off] = p.values[i];
    }
  }
  return out;
}

std::size_t effective_dim(const SearchSpace& space) {
  return space.relaxed_length();
}

std::vector<DesignPoint> sobol_init(const SearchSpace& space, std::size_t n,
                                    std::uint64_t seed) {
  SobolSequence seq(space.relaxed_length(), seed);
  std::vector<DesignPoint> out;
  out.reserve(n);
  RelaxedPoint r;
  r.values.resize(space.relaxed_length());
  for (std::size_t k = 0; k < n; ++k) {
    const std::vector<double> u = seq.next();
    for (std::size_t i = 0; i < space.size(); ++i) {
      const auto& p = space.parameter(i);
      const std::size_t off = space.relaxed_offset(i);
      switch (p.kind) {
        case ParameterKind::kContinuous:
          r.values[off] = p.lower + (p.upper - p.lower) * u[off];
          break;
        case ParameterKind::kBinary:
          r.values[off] = u[off];
          break;
        case ParameterKind::kOrdinal:
          r.values[off] = -0.5 + static_cast<double>(p.cardinality) * u[off];
          break;
        case ParameterKind::kCategorical:
          for (int c = 0; c < p.cardinality; ++c) {
            r.values[off + static_cast<std::size_t>(c)] = u[off + static_cast<std::size_t>(c)];
          }
          break;
      }
    }
    out.push_back(discretize(space, r));
  }
  return out;
}

double to_unit(const ParameterDescriptor& p, double value) {
  return (value - p.lower) / (p.upper - p.lower);
}

double from_unit(const ParameterDescriptor& p, double unit) {
  return p.lower + (p.upper - p.lower) * unit;
}

std::string space_to_json(const SearchSpace& space) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : space.parameters()) {
    nlohmann::json item;
    item["name"] = p.name;
    switch (p.kind) {
      case ParameterKind::kContinuous:
        item["kind"] = "continuous";
        item["bounds"] = {p.lower, p.upper};
        break;
      case ParameterKind::kBinary:
        item["kind"] = "binary";
        break;
      case ParameterKind::kOrdinal:
        item["kind"] = "ordinal";
        item["cardinality"] = p.cardinality;
        break;
      case ParameterKind::kCategorical:
        item["kind"] = "categorical";
        item["cardinality"] = p.cardinality;
        break;
    }
    arr.push_back(std::move(item));
  }
  return arr.dump();
}

SearchSpace space_from_json(const std::string& text) {
  const nlohmann::json arr = nlohmann::json::parse(text);
  if (!arr.is_array()) throw std::invalid_argument("space json must be an array");
  std::vector<ParameterDescriptor> params;
  for (const auto& item : arr) {
    const std::string kind = item.at("kind").get<std::string>();
    const std::string name = item.value("name", std::string{});
    if (kind == "continuous") {
      const auto& b = item.at("bounds");
      params.push_back(ParameterDescriptor::continuous(b.at(0).get<double>(),
                                                       b.at(1).get<double>(), name));
    } else if (kind == "binary") {
      params.push_back(ParameterDescriptor::binary(name));
    } else if (kind == "ordinal") {
      params.push_back(ParameterDescriptor::ordinal(item.at("cardinality").get<int>(), name));
    } else if (kind == "categorical") {
      params.push_back(
          ParameterDescriptor::categorical(item.at("cardinality").get<int>(), name));
    } else {
      throw std::invalid_argument("unknown parameter kind: " + kind);
    }
  }
  return SearchSpace(std::move(params));
}

}  // namespace mixedbo
