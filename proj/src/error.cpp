#include "norm/error.hpp"

namespace norm {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::DegenerateCell: return "DegenerateCell";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnsupportedCellKind: return "UnsupportedCellKind";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::TooFewSnapshots: return "TooFewSnapshots";
    case ErrorKind::InvalidModeCount: return "InvalidModeCount";
    case ErrorKind::ZeroEigenvalue: return "ZeroEigenvalue";
    case ErrorKind::DomainMismatch: return "DomainMismatch";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::ZeroTarget: return "ZeroTarget";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::NonPositiveCoefficient: return "NonPositiveCoefficient";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::BoundaryNotFound: return "BoundaryNotFound";
    case ErrorKind::FormatVersion: return "FormatVersion";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace norm
