#include "nds/types.hpp"

#include <cmath>

namespace nds {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::ContourTooClose: return "ContourTooClose";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::KernelMismatch: return "KernelMismatch";
        case ErrorKind::NearSingular: return "NearSingular";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::EigensolveFailure: return "EigensolveFailure";
        case ErrorKind::SingularStep: return "SingularStep";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::ScalarizationFailed: return "ScalarizationFailed";
        case ErrorKind::PlacementFailed: return "PlacementFailed";
        case ErrorKind::ComplexCoefficients: return "ComplexCoefficients";
    }
    return "Unknown";
}

bool all_finite(const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const cplx v = m.data()[i];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

}  // namespace nds
