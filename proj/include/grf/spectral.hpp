#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "grf/covariance.hpp"

namespace grf {

/// Minimum-phase rational shaping filter b(z)/a(z) with monic denominator.
/// Applying it to unit white noise produces a process with spectral density
/// |b(e^{-i theta})|^2 / |a(e^{-i theta})|^2.
struct RationalFilter1D {
    std::vector<double> b;  // numerator b_0..b_n
    std::vector<double> a;  // denominator a_0..a_m, a_0 == 1

    std::size_t ar_order() const { return a.size() - 1; }
    std::size_t ma_order() const { return b.size() - 1; }

    /// Checks a_0 == 1, denominator roots strictly inside the unit circle
    /// and numerator roots inside or on it.
    void validate() const;
};

/// A rational trigonometric spectrum P/Q. Coefficients use the cosine basis:
/// P(theta) = p[0] + 2*sum_{k>=1} p[k] cos(k theta), same for Q.
struct SpectralDensity1D {
    std::vector<double> P;
    std::vector<double> Q;

    double eval_P(double theta) const;
    double eval_Q(double theta) const;
    double eval(double theta) const { return eval_P(theta) / eval_Q(theta); }
};

/// Outcome of the maximum-entropy dual solve.
struct MESolveReport {
    std::size_t iterations = 0;
    double final_gradient_norm = 0.0;
    std::vector<double> moment_residuals;
    bool converged = false;
};

struct MEOptions {
    std::size_t grid_size = 0;  // 0: max(1024, 64*m)
    double tol = 1e-10;
    std::size_t max_iter = 200;
};

/// Exact AR(1) factor of the sampled exponential covariance:
/// a = [1, -e^{-alpha T}], b = [sigma * sqrt(1 - e^{-2 alpha T})].
RationalFilter1D ar1_filter_exponential(double sigma2, double alpha, double T);

/// Closed-form stationary output covariance of an AR(1) filter a=[1,-r],
/// b=[c] driven by unit white noise: c^2 r^|k| / (1 - r^2).
double analytic_ar1_covariance(const RationalFilter1D& filter, long k);

/// Stationary output covariance of a general ARMA filter at lags 0..max_lag,
/// computed by truncated impulse-response convolution.
std::vector<double> analytic_arma_covariance(const RationalFilter1D& filter,
                                             std::size_t max_lag,
                                             std::size_t impulse_len = 4096);

/// Value, gradient and Hessian of the dual objective
/// J(q) = <sigma,q> - (1/G) sum_grid P log Q
/// at q (cosine basis), with <sigma,q> = q0 s0 + 2 sum_{k>=1} qk sk.
struct DualEval {
    double value;
    std::vector<double> gradient;
    std::vector<std::vector<double>> hessian;
};
DualEval dual_gradient_hessian(const std::vector<double>& q,
                               const std::vector<double>& cov_seq,
                               const std::vector<double>& P,
                               std::size_t grid_size);

/// Newton solve of the maximum-entropy dual: returns the Q coefficients
/// (cosine basis) minimizing J over {Q > 0}, so that P/Q matches the
/// covariance moments cov_seq[0..m].
std::pair<std::vector<double>, MESolveReport> me_dual_solve(
    const std::vector<double>& cov_seq, const std::vector<double>& P,
    const MEOptions& opts = {});

/// Bauer spectral factorization of a positive trigonometric polynomial Q
/// (cosine basis, degree m): returns a_0..a_m with a_0 > 0 such that
/// a(z) a(1/z) = Q(z), minimum phase.
std::vector<double> bauer_factorize(const std::vector<double>& Q,
                                    std::size_t trunc_N = 512, double tol = 1e-10);

struct BuildFilterOptions {
    std::vector<double> b = {1.0};       // user-chosen MA polynomial
    std::optional<std::size_t> m;        // AR order override
    double threshold = 1e-3;             // dominant-lag threshold
    MEOptions me;
};

struct BuildFilterResult {
    RationalFilter1D filter;
    SpectralDensity1D spectrum;  // P/Q actually factorized (empty Q for AR(1) path)
    MESolveReport report;        // default for the exponential path
};

/// Construct the per-dimension shaping filter for a kernel at sampling
/// distance T: exact AR(1) for exponential kernels, maximum-entropy ARMA
/// for Gaussian and custom kernels.
BuildFilterResult build_filter(const Kernel1D& kernel, double T,
                               const BuildFilterOptions& opts = {});

/// Thrown when the Newton iteration fails to reach tolerance.
struct MENonConvergence : std::runtime_error {
    MESolveReport report;
    explicit MENonConvergence(MESolveReport r)
        : std::runtime_error("maximum-entropy dual did not converge"), report(std::move(r)) {}
};

}  // namespace grf
