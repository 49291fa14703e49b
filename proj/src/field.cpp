#include "norm/field.hpp"

#include "norm/error.hpp"

namespace norm {

void Field::check_finite() const {
  require(values.allFinite(), ErrorKind::DimensionMismatch, "field contains NaN or Inf");
}

}  // namespace norm
