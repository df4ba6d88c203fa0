#include "grf/spectral.hpp"

#include <Eigen/Dense>

#include <quadmath.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace grf {

namespace {

constexpr double kPi = std::numbers::pi;

// The dual solve and the Bauer factorization run in quadruple precision.
// The optimal Q of an ill-conditioned moment problem has cosine coefficients
// many orders of magnitude larger than its minimum value, so double
// arithmetic hits a representation floor (~cond * eps) far above the 1e-10
// gradient tolerance; 113-bit significands remove that floor.
using quad = __float128;

// Largest root magnitude of c_0 z^deg + c_1 z^{deg-1} + ... + c_deg,
// where c are the filter coefficients of z^{-k}. Trailing zeros reduce
// the effective degree.
double max_root_magnitude(const std::vector<double>& c) {
    std::size_t deg = c.size();
    while (deg > 1 && c[deg - 1] == 0.0) --deg;
    if (deg <= 1) return 0.0;
    std::size_t n = deg - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t j = 0; j < n; ++j) companion(0, j) = -c[j + 1] / c[0];
    for (std::size_t i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    Eigen::VectorXcd roots = companion.eigenvalues();
    double mx = 0.0;
    for (Eigen::Index i = 0; i < roots.size(); ++i) mx = std::max(mx, std::abs(roots(i)));
    return mx;
}

double eval_cosine_poly(const std::vector<double>& c, double theta) {
    double v = c.empty() ? 0.0 : c[0];
    for (std::size_t k = 1; k < c.size(); ++k) v += 2.0 * c[k] * std::cos(k * theta);
    return v;
}

}  // namespace

void RationalFilter1D::validate() const {
    if (a.empty() || b.empty()) throw std::invalid_argument("filter: empty coefficients");
    if (a[0] != 1.0) throw std::invalid_argument("filter: a_0 must equal 1");
    if (max_root_magnitude(a) >= 1.0) throw std::invalid_argument("filter: unstable denominator");
    if (max_root_magnitude(b) > 1.0 + 1e-9)
        throw std::invalid_argument("filter: numerator not minimum phase");
}

double SpectralDensity1D::eval_P(double theta) const { return eval_cosine_poly(P, theta); }
double SpectralDensity1D::eval_Q(double theta) const { return eval_cosine_poly(Q, theta); }

RationalFilter1D ar1_filter_exponential(double sigma2, double alpha, double T) {
    if (sigma2 <= 0.0 || alpha <= 0.0 || T <= 0.0)
        throw std::invalid_argument("ar1_filter_exponential: parameters must be positive");
    double r = std::exp(-alpha * T);
    RationalFilter1D f;
    f.a = {1.0, -r};
    f.b = {std::sqrt(sigma2 * (1.0 - r * r))};
    return f;
}

double analytic_ar1_covariance(const RationalFilter1D& filter, long k) {
    if (filter.a.size() != 2 || filter.b.size() != 1)
        throw std::invalid_argument("analytic_ar1_covariance: filter is not AR(1)");
    double r = -filter.a[1];
    double c = filter.b[0];
    if (std::abs(r) >= 1.0) throw std::domain_error("analytic_ar1_covariance: unstable filter");
    return c * c * std::pow(r, std::abs(static_cast<double>(k))) / (1.0 - r * r);
}

std::vector<double> analytic_arma_covariance(const RationalFilter1D& filter,
                                             std::size_t max_lag, std::size_t impulse_len) {
    const auto& a = filter.a;
    const auto& b = filter.b;
    std::vector<double> h(impulse_len + max_lag, 0.0);
    for (std::size_t t = 0; t < h.size(); ++t) {
        double v = t < b.size() ? b[t] : 0.0;
        for (std::size_t k = 1; k < a.size() && k <= t; ++k) v -= a[k] * h[t - k];
        h[t] = v;
    }
    std::vector<double> cov(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double s = 0.0;
        for (std::size_t t = 0; t + k < h.size(); ++t) s += h[t] * h[t + k];
        cov[k] = s;
    }
    return cov;
}

DualEval dual_gradient_hessian(const std::vector<double>& q,
                               const std::vector<double>& cov_seq,
                               const std::vector<double>& P,
                               std::size_t grid_size) {
    const std::size_t m = cov_seq.size() - 1;
    if (q.size() != m + 1) throw std::invalid_argument("dual: q/cov arity mismatch");
    const std::size_t G = grid_size;

    std::vector<double> theta(G), Pv(G), Qv(G);
    for (std::size_t i = 0; i < G; ++i) {
        theta[i] = -kPi + 2.0 * kPi * static_cast<double>(i) / static_cast<double>(G);
        Pv[i] = eval_cosine_poly(P, theta[i]);
        Qv[i] = eval_cosine_poly(q, theta[i]);
        if (Qv[i] <= 0.0) throw std::domain_error("dual: Q not positive on grid");
    }

    auto weight = [](std::size_t k) { return k == 0 ? 1.0 : 2.0; };

    double inner = 0.0;
    for (std::size_t k = 0; k <= m; ++k) inner += weight(k) * q[k] * cov_seq[k];

    double logterm = 0.0;
    for (std::size_t i = 0; i < G; ++i) logterm += Pv[i] * std::log(Qv[i]);
    logterm /= static_cast<double>(G);

    DualEval out;
    out.value = inner - logterm;
    out.gradient.assign(m + 1, 0.0);
    out.hessian.assign(m + 1, std::vector<double>(m + 1, 0.0));

    for (std::size_t k = 0; k <= m; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < G; ++i) s += Pv[i] * std::cos(k * theta[i]) / Qv[i];
        s /= static_cast<double>(G);
        out.gradient[k] = weight(k) * (cov_seq[k] - s);
    }
    for (std::size_t k = 0; k <= m; ++k) {
        for (std::size_t l = k; l <= m; ++l) {
            double s = 0.0;
            for (std::size_t i = 0; i < G; ++i)
                s += Pv[i] * std::cos(k * theta[i]) * std::cos(l * theta[i]) / (Qv[i] * Qv[i]);
            s *= weight(k) * weight(l) / static_cast<double>(G);
            out.hessian[k][l] = s;
            out.hessian[l][k] = s;
        }
    }
    return out;
}

namespace {

double to_double(quad v) { return static_cast<double>(v); }

// Newton solve of the dual in quadruple precision; returns the Q coefficients
// at full internal precision so the factorization can consume them unrounded.
std::pair<std::vector<quad>, MESolveReport> me_dual_solve_quad(
    const std::vector<double>& cov_seq, const std::vector<double>& P, const MEOptions& opts) {
    if (cov_seq.empty()) throw std::invalid_argument("me_dual_solve: empty covariance data");
    const std::size_t m = cov_seq.size() - 1;
    const std::size_t G = opts.grid_size ? opts.grid_size : std::max<std::size_t>(1024, 64 * m);

    {
        // feasibility: the Toeplitz matrix of the data must be positive definite
        Eigen::MatrixXd toep(m + 1, m + 1);
        for (std::size_t i = 0; i <= m; ++i)
            for (std::size_t j = 0; j <= m; ++j)
                toep(i, j) = cov_seq[std::max(i, j) - std::min(i, j)];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(toep);
        if (es.eigenvalues().minCoeff() < -1e-9 * cov_seq[0])
            throw std::domain_error("me_dual_solve: covariance data not positive definite");
    }

    const quad pi = M_PIq;
    std::vector<std::vector<quad>> cosk(m + 1, std::vector<quad>(G));
    std::vector<quad> Pv(G), sig(m + 1);
    for (std::size_t k = 0; k <= m; ++k) sig[k] = cov_seq[k];
    for (std::size_t i = 0; i < G; ++i) {
        quad th = -pi + quad(2) * pi * quad(static_cast<double>(i)) / quad(static_cast<double>(G));
        for (std::size_t k = 0; k <= m; ++k) cosk[k][i] = cosq(quad(static_cast<double>(k)) * th);
        quad p = P[0];
        for (std::size_t k = 1; k < P.size(); ++k)
            p += quad(2) * quad(P[k]) * cosq(quad(static_cast<double>(k)) * th);
        if (p <= quad(0)) throw std::domain_error("me_dual_solve: P not positive on grid");
        Pv[i] = p;
    }

    auto q_values = [&](const std::vector<quad>& q) {
        std::vector<quad> Qv(G);
        for (std::size_t i = 0; i < G; ++i) {
            quad Q = q[0];
            for (std::size_t k = 1; k <= m; ++k) Q += quad(2) * q[k] * cosk[k][i];
            if (Q <= quad(0)) throw std::domain_error("dual: Q not positive on grid");
            Qv[i] = Q;
        }
        return Qv;
    };
    auto dual_value = [&](const std::vector<quad>& q) {
        auto Qv = q_values(q);
        quad inner = 0;
        for (std::size_t k = 0; k <= m; ++k) inner += (k ? quad(2) : quad(1)) * q[k] * sig[k];
        quad lg = 0;
        for (std::size_t i = 0; i < G; ++i) lg += Pv[i] * logq(Qv[i]);
        return inner - lg / quad(static_cast<double>(G));
    };

    std::vector<quad> q(m + 1, quad(0));
    q[0] = quad(1);
    quad value = dual_value(q);

    MESolveReport report;
    std::vector<quad> grad(m + 1, quad(0));
    auto compute_gradient = [&](const std::vector<quad>& Qv) {
        for (std::size_t k = 0; k <= m; ++k) {
            quad s = 0;
            for (std::size_t i = 0; i < G; ++i) s += Pv[i] * cosk[k][i] / Qv[i];
            grad[k] = (k ? quad(2) : quad(1)) * (sig[k] - s / quad(static_cast<double>(G)));
        }
    };
    auto grad_inf = [&]() {
        quad mx = 0;
        for (quad v : grad) mx = std::max(mx, fabsq(v));
        return to_double(mx);
    };

    compute_gradient(q_values(q));
    for (std::size_t iter = 0; iter < opts.max_iter; ++iter) {
        if (grad_inf() <= opts.tol) break;
        report.iterations = iter + 1;

        auto Qv = q_values(q);
        const std::size_t n = m + 1;
        std::vector<std::vector<quad>> H(n, std::vector<quad>(n, quad(0)));
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t l = k; l < n; ++l) {
                quad s = 0;
                for (std::size_t i = 0; i < G; ++i)
                    s += Pv[i] * cosk[k][i] * cosk[l][i] / (Qv[i] * Qv[i]);
                s *= (k ? quad(2) : quad(1)) * (l ? quad(2) : quad(1)) /
                     quad(static_cast<double>(G));
                H[k][l] = H[l][k] = s;
            }

        // Newton step by Gaussian elimination with partial pivoting
        auto A = H;
        std::vector<quad> rhs(n);
        for (std::size_t k = 0; k < n; ++k) rhs[k] = -grad[k];
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t p = c;
            for (std::size_t r = c + 1; r < n; ++r)
                if (fabsq(A[r][c]) > fabsq(A[p][c])) p = r;
            std::swap(A[c], A[p]);
            std::swap(rhs[c], rhs[p]);
            for (std::size_t r = c + 1; r < n; ++r) {
                quad f = A[r][c] / A[c][c];
                for (std::size_t j = c; j < n; ++j) A[r][j] -= f * A[c][j];
                rhs[r] -= f * rhs[c];
            }
        }
        std::vector<quad> step(n);
        for (std::size_t i = n; i-- > 0;) {
            quad s = rhs[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= A[i][j] * step[j];
            step[i] = s / A[i][i];
        }
        quad slope = 0;
        for (std::size_t k = 0; k < n; ++k) slope += grad[k] * step[k];

        quad s = 1;
        bool accepted = false;
        for (int half = 0; half < 120; ++half, s /= quad(2)) {
            std::vector<quad> qt(n);
            for (std::size_t k = 0; k < n; ++k) qt[k] = q[k] + s * step[k];
            try {
                quad vt = dual_value(qt);
                if (vt <= value + quad(1e-4) * s * slope) {
                    q = std::move(qt);
                    value = vt;
                    accepted = true;
                    break;
                }
            } catch (const std::domain_error&) {
                // Q left the positive cone; shrink the step
            }
        }
        if (!accepted) break;  // stalled at numerical precision
        compute_gradient(q_values(q));
    }
    report.final_gradient_norm = grad_inf();
    report.converged = report.final_gradient_norm <= opts.tol;

    // moment residuals by quadrature of P/Q at a finer resolution
    const std::size_t Gr = 4 * G;
    report.moment_residuals.assign(m + 1, 0.0);
    for (std::size_t k = 0; k <= m; ++k) {
        quad s = 0;
        for (std::size_t i = 0; i < Gr; ++i) {
            quad th = -pi + quad(2) * pi * quad(static_cast<double>(i)) /
                                quad(static_cast<double>(Gr));
            quad p = P[0];
            for (std::size_t l = 1; l < P.size(); ++l)
                p += quad(2) * quad(P[l]) * cosq(quad(static_cast<double>(l)) * th);
            quad Q = q[0];
            for (std::size_t l = 1; l <= m; ++l)
                Q += quad(2) * q[l] * cosq(quad(static_cast<double>(l)) * th);
            s += p * cosq(quad(static_cast<double>(k)) * th) / Q;
        }
        report.moment_residuals[k] = to_double(sig[k] - s / quad(static_cast<double>(Gr)));
    }

    if (!report.converged) throw MENonConvergence(report);
    return {std::move(q), report};
}

std::vector<quad> bauer_factorize_quad(const std::vector<quad>& Q, std::size_t trunc_N,
                                       double tol) {
    if (Q.empty()) throw std::invalid_argument("bauer_factorize: empty Q");
    const std::size_t m = Q.size() - 1;
    const quad pi = M_PIq;
    for (std::size_t i = 0; i < 4096; ++i) {
        quad th = -pi + quad(2) * pi * quad(static_cast<double>(i)) / quad(4096);
        quad v = Q[0];
        for (std::size_t k = 1; k <= m; ++k)
            v += quad(2) * Q[k] * cosq(quad(static_cast<double>(k)) * th);
        if (v <= quad(0)) throw std::domain_error("bauer_factorize: Q not positive on grid");
    }
    if (m == 0) return {sqrtq(Q[0])};

    auto toeplitz_entry = [&](std::size_t lag) { return lag <= m ? Q[lag] : quad(0); };

    std::size_t N = std::max(trunc_N, 4 * (m + 1));
    for (; N <= 8192; N *= 2) {
        // banded Cholesky of the N x N Toeplitz matrix with symbol Q;
        // band[i][d] holds L(i, i-d), d = 0..m
        std::vector<std::vector<quad>> band(N, std::vector<quad>(m + 1, quad(0)));
        bool ok = true;
        for (std::size_t i = 0; i < N && ok; ++i) {
            std::size_t lo = i >= m ? i - m : 0;
            for (std::size_t j = lo; j <= i; ++j) {
                quad s = toeplitz_entry(i - j);
                std::size_t plo = std::max(lo, j >= m ? j - m : 0);
                for (std::size_t p = plo; p < j; ++p) s -= band[i][i - p] * band[j][j - p];
                if (i == j) {
                    if (s <= quad(0)) {
                        ok = false;
                        break;
                    }
                    band[i][0] = sqrtq(s);
                } else {
                    band[i][i - j] = s / band[j][0];
                }
            }
        }
        if (!ok) continue;  // truncation too small for this symbol; retry larger

        quad diff = 0;
        for (std::size_t d = 0; d <= m; ++d)
            diff = std::max(diff, fabsq(band[N - 1][d] - band[N / 2][d]));
        if (to_double(diff) <= tol) {
            std::vector<quad> a(m + 1);
            for (std::size_t d = 0; d <= m; ++d) a[d] = band[N - 1][d];
            return a;
        }
    }
    throw std::runtime_error(
        "bauer_factorize: band did not converge; try a larger truncation size");
}

}  // namespace

std::pair<std::vector<double>, MESolveReport> me_dual_solve(
    const std::vector<double>& cov_seq, const std::vector<double>& P, const MEOptions& opts) {
    auto [q, report] = me_dual_solve_quad(cov_seq, P, opts);
    std::vector<double> out(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) out[k] = to_double(q[k]);
    return {std::move(out), report};
}

std::vector<double> bauer_factorize(const std::vector<double>& Q, std::size_t trunc_N,
                                    double tol) {
    std::vector<quad> Qq(Q.begin(), Q.end());
    auto a = bauer_factorize_quad(Qq, trunc_N, tol);
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = to_double(a[k]);
    return out;
}

BuildFilterResult build_filter(const Kernel1D& kernel, double T, const BuildFilterOptions& opts) {
    kernel.validate();
    BuildFilterResult out;

    if (kernel.kind == KernelKind::Exponential) {
        out.filter = ar1_filter_exponential(kernel.sigma2, kernel.alpha, T);
        double r = -out.filter.a[1];
        double c = out.filter.b[0];
        out.spectrum.P = {c * c};
        out.spectrum.Q = {1.0 + r * r, -r};
        out.report.converged = true;
        return out;
    }

    // ARMA path: match the dominant covariance lags with a maximum-entropy
    // rational spectrum, then factorize the denominator.
    std::size_t m;
    if (opts.m) {
        m = *opts.m;
    } else if (kernel.kind == KernelKind::Custom) {
        m = dominant_lag_count(kernel.custom_seq, opts.threshold);
        if (m == 0) m = 1;
    } else {
        auto scan = sampled_sequence(kernel, T, 1024);
        m = dominant_lag_count(scan, opts.threshold);
        if (m == 0) m = 1;
    }

    auto cov_seq = sampled_sequence(kernel, T, m);

    // P(z) = b(z) b(1/z) in the cosine basis
    const auto& b = opts.b;
    if (b.empty() || b[0] == 0.0) throw std::invalid_argument("build_filter: invalid b polynomial");
    std::vector<double> P(b.size(), 0.0);
    for (std::size_t k = 0; k < b.size(); ++k)
        for (std::size_t j = 0; j + k < b.size(); ++j) P[k] += b[j] * b[j + k];

    // the unrounded Q coefficients flow straight into the factorization:
    // rounding them to double first would perturb Q near its minimum by
    // roughly (max|q| / min Q) * eps, which dominates the moment error
    auto [qhat, report] = me_dual_solve_quad(cov_seq, P, opts.me);
    out.report = std::move(report);

    auto a_raw = bauer_factorize_quad(qhat, 512, 1e-10);

    out.spectrum.P = std::move(P);
    out.spectrum.Q.resize(qhat.size());
    for (std::size_t k = 0; k < qhat.size(); ++k) out.spectrum.Q[k] = to_double(qhat[k]);

    // normalize to a monic denominator, folding the gain into b
    out.filter.a.resize(a_raw.size());
    out.filter.b.resize(b.size());
    for (std::size_t k = 0; k < a_raw.size(); ++k)
        out.filter.a[k] = to_double(a_raw[k] / a_raw[0]);
    for (std::size_t k = 0; k < b.size(); ++k) out.filter.b[k] = to_double(quad(b[k]) / a_raw[0]);
    out.filter.validate();
    return out;
}

}  // namespace grf
