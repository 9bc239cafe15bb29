#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gramflow/errors.hpp"
#include "gramflow/numerics.hpp"
#include "gramflow/rng.hpp"

using namespace gramflow;
using numerics::DenseMatrix;

namespace {

DenseMatrix random_symmetric(std::int64_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix a(n, n);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = i; j < n; ++j) {
            const double v = rng.normal();
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

DenseMatrix random_matrix(std::int64_t rows, std::int64_t cols, std::uint64_t seed) {
    CounterRng rng(seed);
    DenseMatrix a(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i)
        for (std::int64_t j = 0; j < cols; ++j) a(i, j) = rng.normal();
    return a;
}

DenseMatrix spd_from(const DenseMatrix& b, double shift) {
    DenseMatrix a(b.cols(), b.cols());
    for (std::int64_t i = 0; i < b.cols(); ++i)
        for (std::int64_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::int64_t k = 0; k < b.rows(); ++k) s += b(k, i) * b(k, j);
            a(i, j) = s + (i == j ? shift : 0.0);
        }
    return a;
}

// independent largest-singular-value estimate: power iteration on A^T A
double power_iteration_norm(const DenseMatrix& a, int steps) {
    std::vector<double> v(a.cols(), 1.0 / std::sqrt(static_cast<double>(a.cols())));
    double sigma = 0.0;
    for (int s = 0; s < steps; ++s) {
        std::vector<double> av(a.rows(), 0.0);
        for (std::int64_t i = 0; i < a.rows(); ++i)
            for (std::int64_t j = 0; j < a.cols(); ++j) av[i] += a(i, j) * v[j];
        std::vector<double> atav(a.cols(), 0.0);
        for (std::int64_t i = 0; i < a.rows(); ++i)
            for (std::int64_t j = 0; j < a.cols(); ++j) atav[j] += a(i, j) * av[i];
        const double nrm = std::sqrt(std::inner_product(atav.begin(), atav.end(), atav.begin(), 0.0));
        for (double& x : atav) x /= nrm;
        v = atav;
        sigma = std::sqrt(nrm);
    }
    return sigma;
}

}  // namespace

TEST_CASE("eigenvalues of a diagonal matrix are its sorted diagonal") {
    DenseMatrix a(4, 4);
    const double diag[4] = {3.0, -1.0, 7.0, 0.5};
    for (int i = 0; i < 4; ++i) a(i, i) = diag[i];
    const std::vector<double> ev = numerics::sym_eig_values(a);
    std::vector<double> want(diag, diag + 4);
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 4; ++i) CHECK(ev[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("2x2 eigenvalues match the closed form") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CounterRng rng(seed);
        const double a = rng.normal(), b = rng.normal(), c = rng.normal();
        DenseMatrix mat(2, 2);
        mat(0, 0) = a;
        mat(0, 1) = mat(1, 0) = b;
        mat(1, 1) = c;
        const double mid = 0.5 * (a + c);
        const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
        const std::vector<double> ev = numerics::sym_eig_values(mat);
        CHECK(ev[0] == doctest::Approx(mid - rad).epsilon(1e-12));
        CHECK(ev[1] == doctest::Approx(mid + rad).epsilon(1e-12));
    }
}

TEST_CASE("known spectrum survives an orthogonal change of basis") {
    // build Q Lambda Q^T from a product of seeded Givens rotations
    const std::int64_t n = 8;
    std::vector<double> lambda = {-4.0, -1.5, -0.25, 0.0, 0.3, 1.0, 2.5, 9.0};
    DenseMatrix a(n, n);
    for (std::int64_t i = 0; i < n; ++i) a(i, i) = lambda[i];
    CounterRng rng(99);
    for (int rot = 0; rot < 40; ++rot) {
        const std::int64_t p = static_cast<std::int64_t>(rng.below(n));
        std::int64_t q = static_cast<std::int64_t>(rng.below(n));
        if (p == q) q = (q + 1) % n;
        const double theta = 6.283185307179586 * rng.uniform01();
        const double c = std::cos(theta), s = std::sin(theta);
        // A <- G^T A G with G rotating the (p, q) plane
        for (std::int64_t j = 0; j < n; ++j) {
            const double ap = a(p, j), aq = a(q, j);
            a(p, j) = c * ap - s * aq;
            a(q, j) = s * ap + c * aq;
        }
        for (std::int64_t i = 0; i < n; ++i) {
            const double ap = a(i, p), aq = a(i, q);
            a(i, p) = c * ap - s * aq;
            a(i, q) = s * ap + c * aq;
        }
    }
    const std::vector<double> ev = numerics::sym_eig_values(a);
    for (std::int64_t i = 0; i < n; ++i) CHECK(ev[i] == doctest::Approx(lambda[i]).epsilon(1e-10));
}

TEST_CASE("eigenvalue sums reproduce trace and Frobenius mass") {
    for (std::uint64_t seed = 3; seed <= 8; ++seed) {
        const DenseMatrix a = random_symmetric(7, seed);
        const std::vector<double> ev = numerics::sym_eig_values(a);
        const double sum = std::accumulate(ev.begin(), ev.end(), 0.0);
        const double sq = std::inner_product(ev.begin(), ev.end(), ev.begin(), 0.0);
        CHECK(sum == doctest::Approx(a.trace()).epsilon(1e-11));
        CHECK(std::sqrt(sq) == doctest::Approx(a.frobenius_norm()).epsilon(1e-11));
    }
}

TEST_CASE("extremes agree with the full spectrum") {
    const DenseMatrix a = random_symmetric(9, 42);
    const std::vector<double> ev = numerics::sym_eig_values(a);
    const numerics::SpectrumSummary s = numerics::sym_eig_extremes(a);
    CHECK(s.lambda_min == doctest::Approx(ev.front()).epsilon(1e-12));
    CHECK(s.lambda_max == doctest::Approx(ev.back()).epsilon(1e-12));
    CHECK(s.spectral_norm ==
          doctest::Approx(std::max(std::abs(ev.front()), std::abs(ev.back()))).epsilon(1e-12));
}

TEST_CASE("asymmetric input is rejected") {
    DenseMatrix a(3, 3);
    a(0, 1) = 1.0;
    a(1, 0) = 1.0 + 1e-3;
    a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
    CHECK_THROWS_AS((void)numerics::sym_eig_values(a), ValidationError);
    DenseMatrix rect(2, 3);
    CHECK_THROWS_AS((void)numerics::sym_eig_values(rect), ValidationError);
}

TEST_CASE("spd solve hits the residual gate on seeded systems") {
    for (std::uint64_t seed = 5; seed <= 9; ++seed) {
        const DenseMatrix a = spd_from(random_matrix(12, 8, seed), 0.5);
        CounterRng rng(seed + 100);
        std::vector<double> b(8);
        for (double& x : b) x = rng.normal();
        const numerics::SpdSolution sol = numerics::solve_spd(a, b);
        CHECK_FALSE(sol.ridge_fallback);
        std::vector<double> r = numerics::matvec(a, sol.x);
        double rn = 0.0, bn = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            rn += (r[i] - b[i]) * (r[i] - b[i]);
            bn += b[i] * b[i];
        }
        CHECK(std::sqrt(rn) <= 1e-10 * std::sqrt(bn));
    }
}

TEST_CASE("rank-deficient system falls back to the rescue ridge") {
    // B is 4x8 so B^T B has rank 4 and a genuine null space
    const DenseMatrix a = spd_from(random_matrix(4, 8, 31), 0.0);
    std::vector<double> b(8, 1.0);
    const numerics::SpdSolution sol = numerics::solve_spd(a, b);
    CHECK(sol.ridge_fallback);
    CHECK(sol.ridge_used > 0.0);
    for (double x : sol.x) CHECK(std::isfinite(x));
}

TEST_CASE("caller-supplied ridge fixes the same system without fallback") {
    const DenseMatrix a = spd_from(random_matrix(4, 8, 31), 0.0);
    std::vector<double> b(8, 1.0);
    const numerics::SpdSolution sol = numerics::solve_spd(a, b, 1e-8);
    CHECK_FALSE(sol.ridge_fallback);
}

TEST_CASE("spectral norm matches power iteration on rectangular input") {
    for (std::uint64_t seed = 11; seed <= 14; ++seed) {
        const DenseMatrix tall = random_matrix(13, 5, seed);
        const DenseMatrix wide = random_matrix(4, 17, seed + 50);
        CHECK(numerics::spectral_norm(tall) ==
              doctest::Approx(power_iteration_norm(tall, 300)).epsilon(1e-8));
        CHECK(numerics::spectral_norm(wide) ==
              doctest::Approx(power_iteration_norm(wide, 300)).epsilon(1e-8));
    }
}

TEST_CASE("finite differences recover an analytic gradient") {
    auto f = [](const std::vector<double>& w) {
        return 2.0 * w[0] * w[0] + std::sin(w[1]) + w[0] * w[2] * w[2];
    };
    const std::vector<double> w = {0.3, -0.7, 1.1};
    const std::vector<double> g = numerics::finite_diff_grad(f, w);
    CHECK(g[0] == doctest::Approx(4.0 * w[0] + w[2] * w[2]).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(std::cos(w[1])).epsilon(1e-8));
    CHECK(g[2] == doctest::Approx(2.0 * w[0] * w[2]).epsilon(1e-8));
}

TEST_CASE("finite differences refuse non-finite probes") {
    // the negative-side probe evaluates sqrt of a negative number
    auto f = [](const std::vector<double>& w) { return std::sqrt(w[0]); };
    CHECK_THROWS_AS((void)numerics::finite_diff_grad(f, {0.0}), NumericalError);
    CHECK_THROWS_AS((void)numerics::finite_diff_grad(f, {1.0}, 0.0), ValidationError);
}

TEST_CASE("counter rng streams are reproducible and disjoint") {
    CounterRng a(7, 1), b(7, 1), c(7, 2);
    for (int i = 0; i < 32; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
    }
}

TEST_CASE("normal draws pass coarse moment gates") {
    CounterRng rng(123);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("uniform draws stay in the half-open unit interval") {
    CounterRng rng(55);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
