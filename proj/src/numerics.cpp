#include "gramflow/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gramflow::numerics {

namespace {

void require_symmetric(const DenseMatrix& a, const char* who) {
    if (!a.is_square()) throw ValidationError(std::string(who) + ": matrix is not square");
    if (!a.all_finite()) throw ValidationError(std::string(who) + ": matrix has non-finite entries");
    const double scale = a.max_abs();
    if (a.symmetry_gap() > kSymmetryRelTol * std::max(scale, 1e-300))
        throw ValidationError(std::string(who) + ": matrix is not symmetric");
}

double offdiag_frobenius(const DenseMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace

std::vector<double> sym_eig_values(const DenseMatrix& input) {
    require_symmetric(input, "sym_eig_values");
    const std::size_t n = input.rows();
    if (n == 0) throw ValidationError("sym_eig_values: empty matrix");

    // work on an exactly symmetric copy so rotations stay consistent
    DenseMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (input(i, j) + input(j, i));

    const double total_norm = a.frobenius_norm();
    const double target = kJacobiOffdiagTol * total_norm;

    constexpr int kMaxSweeps = 64;
    int sweep = 0;
    for (; sweep < kMaxSweeps; ++sweep) {
        if (offdiag_frobenius(a) <= target) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // classic Jacobi rotation annihilating a_pq
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p);
                const double aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = akp - s * (akq + tau * akp);
                    a(p, k) = a(k, p);
                    a(k, q) = akq + s * (akp - tau * akq);
                    a(q, k) = a(k, q);
                }
            }
        }
    }
    if (sweep == kMaxSweeps && offdiag_frobenius(a) > target)
        throw NumericalError("sym_eig_values: Jacobi sweeps did not converge");

    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

SpectrumSummary sym_eig_extremes(const DenseMatrix& a) {
    const std::vector<double> eig = sym_eig_values(a);
    SpectrumSummary s;
    s.lambda_min = eig.front();
    s.lambda_max = eig.back();
    s.spectral_norm = std::max(std::abs(s.lambda_min), std::abs(s.lambda_max));
    return s;
}

namespace {

// lower-triangular Cholesky of (A + ridge I); returns false on a
// non-positive pivot instead of throwing so the caller can retry
bool cholesky(const DenseMatrix& a, double ridge, DenseMatrix& l) {
    const std::size_t n = a.rows();
    l = DenseMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a(i, j) + (i == j ? ridge : 0.0);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (!(s > 0.0)) return false;  // also catches NaN
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const DenseMatrix& l, const std::vector<double>& b) {
    const std::size_t n = l.rows();
    std::vector<double> y(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
        x[ii] = s / l(ii, ii);
    }
    return x;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

SpdSolution solve_spd(const DenseMatrix& a, const std::vector<double>& b, double ridge) {
    require_symmetric(a, "solve_spd");
    const std::size_t n = a.rows();
    if (b.size() != n) throw ValidationError("solve_spd: right-hand side length mismatch");
    if (ridge < 0.0) throw ValidationError("solve_spd: ridge must be non-negative");

    SpdSolution sol;
    sol.ridge_used = ridge;

    DenseMatrix l;
    bool ok = cholesky(a, ridge, l);
    if (!ok && ridge == 0.0) {
        // rescue: documented default ridge proportional to the mean diagonal
        sol.ridge_used = kDefaultRidgeScale * a.trace() / static_cast<double>(n);
        sol.ridge_fallback = true;
        ok = cholesky(a, sol.ridge_used, l);
    }
    if (!ok) throw NumericalError("solve_spd: matrix is singular even with ridge regularisation");

    std::vector<double> x = cholesky_solve(l, b);

    // a few rounds of iterative refinement to push the residual down to
    // the contract level (1e-10 relative) even for ill-conditioned systems
    const double b_norm = norm2(b);
    for (int round = 0; round < 3; ++round) {
        std::vector<double> r = b;
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = a.row_ptr(i);
            double s = sol.ridge_used * x[i];
            for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
            r[i] -= s;
        }
        if (norm2(r) <= 1e-14 * std::max(b_norm, 1e-300)) break;
        const std::vector<double> dx = cholesky_solve(l, r);
        for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
    }

    for (double v : x)
        if (!std::isfinite(v)) throw NumericalError("solve_spd: non-finite solution");
    sol.x = std::move(x);
    return sol;
}

double spectral_norm(const DenseMatrix& a) {
    if (a.rows() == 0 || a.cols() == 0) throw ValidationError("spectral_norm: empty matrix");
    if (!a.all_finite()) throw ValidationError("spectral_norm: matrix has non-finite entries");
    // form the smaller of A A^T / A^T A; its top eigenvalue is sigma_max^2
    const DenseMatrix g = (a.rows() <= a.cols()) ? gram_of_rows(a) : gram_of_rows(a.transposed());
    const SpectrumSummary s = sym_eig_extremes(g);
    return std::sqrt(std::max(s.lambda_max, 0.0));
}

std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                     const std::vector<double>& w, double h) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_grad: step must be positive");
    std::vector<double> probe = w;
    std::vector<double> g(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double wi = w[i];
        probe[i] = wi + h;
        const double fp = f(probe);
        probe[i] = wi - h;
        const double fm = f(probe);
        probe[i] = wi;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericalError("finite_diff_grad: function evaluated non-finite");
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

}  // namespace gramflow::numerics
