#pragma once

#include <string>
#include <vector>

#include "norm/linalg.hpp"

namespace norm {

// Nodal samples of a multi-channel function: one row per node (or per
// space-time node), one column per channel.
struct Field {
  Matrix values;
  std::string domain_id;
  std::vector<std::string> channel_names;

  Field() = default;
  explicit Field(Matrix v, std::string domain = {}) : values(std::move(v)), domain_id(std::move(domain)) {}

  Eigen::Index nodes() const { return values.rows(); }
  Eigen::Index channels() const { return values.cols(); }

  // Throws DimensionMismatch on NaN/Inf entries.
  void check_finite() const;
};

}  // namespace norm
