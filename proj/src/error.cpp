#include "eaf/error.hpp"

namespace eaf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::NegativeSignal: return "NegativeSignal";
    case ErrorKind::TimeRegression: return "TimeRegression";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorKind::NoRuleFires: return "NoRuleFires";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::InvalidCount: return "InvalidCount";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace eaf
