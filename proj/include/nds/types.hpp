#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nds {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

enum class ErrorKind {
    InvalidInput,
    Parse,
    DimensionMismatch,
    ContourTooClose,
    NoConvergence,
    KernelMismatch,
    NearSingular,
    EmptyInput,
    EigensolveFailure,
    SingularStep,
    NonFiniteState,
    InsufficientData,
    ScalarizationFailed,
    PlacementFailed,
    ComplexCoefficients,
};

const char* to_string(ErrorKind kind);

/// Library error. The message is prefixed with the module that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& module, const std::string& what)
        : std::runtime_error(module + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Element (y, z(.)) of C^n x L2(-1,0;C^n). z is sampled at theta_i = -1 + i/M,
/// i = 0..M, stored column-wise in an n x (M+1) matrix.
struct StateSegment {
    CVector y;
    CMatrix z;

    StateSegment() = default;
    StateSegment(Eigen::Index n, int grid_m);
    StateSegment(CVector y_part, CMatrix z_samples);

    Eigen::Index dim() const { return y.size(); }
    int grid_m() const { return static_cast<int>(z.cols()) - 1; }
    double step() const { return 1.0 / grid_m(); }
    double theta(int i) const { return -1.0 + static_cast<double>(i) / grid_m(); }

    StateSegment& operator+=(const StateSegment& other);
    StateSegment& operator*=(cplx alpha);
};

StateSegment operator+(StateSegment a, const StateSegment& b);
StateSegment operator-(StateSegment a, const StateSegment& b);
StateSegment operator*(cplx alpha, StateSegment a);

inline constexpr int kMinGrid = 8;
inline constexpr int kDefaultGrid = 256;

bool all_finite(const CMatrix& m);

}  // namespace nds
