#pragma once

#include <functional>
#include <vector>

#include "gramflow/matrix.hpp"

namespace gramflow::numerics {

// extreme eigenvalues of a symmetric matrix
struct SpectrumSummary {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    double spectral_norm = 0.0;  // max(|lambda_min|, |lambda_max|)
};

// Result of a symmetric positive definite solve. When the plain
// factorization fails and the internal ridge rescue kicks in, the
// solution is for (A + ridge_used * I) and ridge_fallback is set so the
// caller can see the system was regularised.
struct SpdSolution {
    std::vector<double> x;
    bool ridge_fallback = false;
    double ridge_used = 0.0;
};

// Tolerances pinned for the whole artifact.
inline constexpr double kSymmetryRelTol = 1e-9;      // accepted asymmetry, relative to max |entry|
inline constexpr double kJacobiOffdiagTol = 1e-12;   // off-diagonal Frobenius mass vs ||A||_F
inline constexpr double kDefaultRidgeScale = 1e-12;  // fallback ridge = scale * trace / dim
inline constexpr double kFdStep = 1e-5;              // first-derivative central differences
inline constexpr double kFdStepSecond = 1e-4;        // second-difference stencils

// All eigenvalues of a symmetric matrix, ascending, via cyclic Jacobi
// rotations. Throws ValidationError on non-square or asymmetric input
// and NumericalError if the sweep limit is exhausted.
std::vector<double> sym_eig_values(const DenseMatrix& a);

// Smallest/largest eigenvalue plus the spectral norm in one call.
SpectrumSummary sym_eig_extremes(const DenseMatrix& a);

// Solve (A + ridge I) x = b for symmetric positive definite A by
// Cholesky factorization with iterative refinement. ridge = 0 requests
// the plain system; if that factorization fails the solve is retried
// once with ridge = kDefaultRidgeScale * trace(A)/dim and the fallback
// is flagged in the result. Failure even then raises NumericalError.
SpdSolution solve_spd(const DenseMatrix& a, const std::vector<double>& b, double ridge = 0.0);

// Largest singular value of a rectangular matrix, computed from the
// eigenvalues of the smaller of A A^T / A^T A.
double spectral_norm(const DenseMatrix& a);

// Central-difference gradient of a scalar function. Throws
// NumericalError if any probe evaluates non-finite.
std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& w, double h = kFdStep);

}  // namespace gramflow::numerics
