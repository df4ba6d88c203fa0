// Acceptance gate: ten end-to-end criteria, one pass/fail line each.
// Exits nonzero if any criterion fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "grf/covariance.hpp"
#include "grf/io.hpp"
#include "grf/multiscale.hpp"
#include "grf/oracle.hpp"
#include "grf/sampler.hpp"
#include "grf/spectral.hpp"

using namespace grf;

namespace {

int failures = 0;

void report(int idx, const char* title, bool ok, const std::string& detail) {
    std::printf("criterion %2d [%s] %s: %s\n", idx, ok ? "PASS" : "FAIL", title,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

double now_minus(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

CovarianceModel exp_model(std::vector<double> alpha, std::vector<double> T) {
    CovarianceModel m;
    for (double a : alpha) m.kernels.push_back(Kernel1D::exponential(1.0, a));
    m.T = std::move(T);
    return m;
}

// worst deviation of trial-averaged profiles from targets over the four
// directions, restricted to lags whose target is >= 0.05 * sigma^2
double profile_deviation(const CovarianceModel& model, const std::vector<std::size_t>& N,
                         std::size_t trials, std::size_t max_lag,
                         const BuildFilterOptions& opts = {}) {
    using oracle::ProfileDirection;
    std::vector<ProfileDirection> dirs = {ProfileDirection::Axis0, ProfileDirection::Axis1,
                                          ProfileDirection::Axis2,
                                          ProfileDirection::Diagonal};
    double sigma0 = product_covariance(model, std::vector<long>(model.dims(), 0));
    std::vector<std::vector<double>> avg(dirs.size(),
                                         std::vector<double>(max_lag + 1, 0.0));
    for (std::size_t t = 0; t < trials; ++t) {
        auto g = generate(model, N, 1000 + t, 0.1, opts);
        for (std::size_t d = 0; d < dirs.size(); ++d) {
            auto p = oracle::covariance_profile(g.field.grid, dirs[d], max_lag);
            for (std::size_t k = 0; k <= max_lag; ++k) avg[d][k] += p[k];
        }
    }
    double worst = 0.0;
    for (std::size_t d = 0; d < dirs.size(); ++d) {
        auto target = oracle::target_profile(model, dirs[d], max_lag);
        for (std::size_t k = 0; k <= max_lag; ++k) {
            if (target[k] < 0.05 * sigma0) continue;
            worst = std::max(worst, std::abs(avg[d][k] / double(trials) - target[k]));
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------

void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (double alpha : {0.5, 1.0, 2.0})
        for (double T : {1.0 / 12, 1.0 / 10, 1.0 / 8}) {
            auto f = ar1_filter_exponential(1.0, alpha, T);
            for (long k = 0; k <= 50; ++k)
                worst = std::max(worst, std::abs(analytic_ar1_covariance(f, k) -
                                                 std::exp(-alpha * T * double(k))));
        }
    report(1, "AR(1) exactness vs e^{-alpha T k}", worst <= 1e-12 && now_minus(t0) < 1.0,
           fmt("max |dev| = %.3e", worst));
}

void criterion2() {
    auto t0 = std::chrono::steady_clock::now();
    const double alpha = 1.0, T = 0.1;
    const std::size_t N = 64;
    auto m = exp_model({alpha}, {T});
    // beta chosen so the discarded prefix is >= 50/(alpha*T); the truncation
    // defect of the zero-init path is then below the 1e-8 band
    auto g = generate(m, {N}, 3, 8.0);
    std::size_t off = g.burn_in[0];
    double r = std::exp(-alpha * T), c2 = 1.0 - r * r;
    auto cov = oracle::build_cov_matrix(m, {N});
    double worst = 0.0;
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            std::size_t t = off + i, s = off + j;
            // exact zero-init covariance: c^2 r^{|t-s|} (1 - r^{2(min+1)}) / (1 - r^2)
            double exact = c2 * std::pow(r, std::abs(double(t) - double(s))) *
                           (1.0 - std::pow(r, 2.0 * (double(std::min(t, s)) + 1.0))) /
                           (1.0 - r * r);
            worst = std::max(worst, std::abs(exact - cov.data(i, j)));
        }
    report(2, "truncated-path law matches dense covariance",
           worst <= 1e-8 && now_minus(t0) < 1.0, fmt("max |dev| = %.3e", worst));
}

void criterion3() {
    auto t0 = std::chrono::steady_clock::now();
    BuildFilterOptions opts;
    opts.b = {1.0, -0.2};
    auto built = build_filter(Kernel1D::gaussian(1.0, 1.0), 0.2, opts);
    std::size_t mord = built.filter.ar_order();
    auto target = sampled_sequence(Kernel1D::gaussian(1.0, 1.0), 0.2, mord);

    // independent quadrature of the realized spectrum |b|^2/|a|^2 = P/Q-hat
    const std::size_t G = 8192;
    double worst = 0.0;
    for (std::size_t k = 0; k <= mord; ++k) {
        double sk = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            double theta = 2.0 * M_PI * double(i) / double(G);
            std::complex<double> bnum = 0.0, aden = 0.0;
            for (std::size_t j = 0; j < built.filter.b.size(); ++j)
                bnum += built.filter.b[j] * std::polar(1.0, -double(j) * theta);
            for (std::size_t j = 0; j < built.filter.a.size(); ++j)
                aden += built.filter.a[j] * std::polar(1.0, -double(j) * theta);
            sk += std::norm(bnum) / std::norm(aden) * std::cos(double(k) * theta);
        }
        sk /= double(G);
        worst = std::max(worst, std::abs(sk - target[k]));
    }
    bool ok = worst <= 1e-8 && built.report.iterations <= 50 && built.report.converged &&
              now_minus(t0) < 5.0;
    report(3, "ME moment matching (Gaussian, auto-m)", ok,
           fmt("max |moment dev| = %.3e, Newton iterations %.0f", worst,
               double(built.report.iterations)));
}

void criterion4() {
    auto t0 = std::chrono::steady_clock::now();
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> rad(0.05, 0.95), ang(0.0, M_PI);
    std::uniform_int_distribution<int> deg_dist(1, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        int deg = deg_dist(rng);
        // random stable polynomial from roots inside the unit circle
        std::vector<double> a = {1.0};
        int placed = 0;
        while (placed < deg) {
            if (deg - placed >= 2 && (rng() & 1)) {
                double r = rad(rng), th = ang(rng);
                // conjugate pair: z^2 - 2 r cos(th) z + r^2
                std::vector<double> na(a.size() + 2, 0.0);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    na[i] += a[i];
                    na[i + 1] += a[i] * (-2.0 * r * std::cos(th));
                    na[i + 2] += a[i] * (r * r);
                }
                a = std::move(na);
                placed += 2;
            } else {
                double root = rad(rng) * ((rng() & 1) ? 1.0 : -1.0);
                std::vector<double> na(a.size() + 1, 0.0);
                for (std::size_t i = 0; i < a.size(); ++i) {
                    na[i] += a[i];
                    na[i + 1] += a[i] * (-root);
                }
                a = std::move(na);
                placed += 1;
            }
        }
        // Q = a(z) a(1/z) in the cosine basis
        std::vector<double> Q(a.size(), 0.0);
        for (std::size_t k = 0; k < a.size(); ++k)
            for (std::size_t j = 0; j + k < a.size(); ++j) Q[k] += a[j] * a[j + k];
        auto rec = bauer_factorize(Q);
        if (rec[0] * a[0] < 0.0)
            for (double& v : rec) v = -v;
        for (std::size_t i = 0; i < a.size(); ++i)
            worst = std::max(worst, std::abs(rec[i] - a[i]));
    }
    report(4, "Bauer factorization round trip (100 random stable polys)",
           worst <= 1e-8 && now_minus(t0) < 5.0, fmt("max |coeff dev| = %.3e", worst));
}

void criterion5() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = exp_model({1.0, 1.0, 1.0}, {1.0 / 12, 1.0 / 10, 1.0 / 8});
    double worst = profile_deviation(m, {64, 64, 64}, 20, 40);
    double secs = now_minus(t0);
    // expected to fail: the |N|-normalized estimator's expectation is
    // rho_k (N-k)/N per axis, a deterministic deviation of e^{-1} * 12/64
    // ~ 0.069 at axis-0 lag 12 — outside the 0.05 band at this grid size
    // independently of the trial count
    report(5, "3-d exponential profiles (20 trials, 64^3)", worst <= 0.05 && secs < 120.0,
           fmt("max |profile dev| = %.4f in %.1f s", worst, secs));
}

void criterion6() {
    auto t0 = std::chrono::steady_clock::now();
    CovarianceModel m;
    m.kernels = {Kernel1D::gaussian(1.0, 1.0), Kernel1D::gaussian(1.0, 1.0),
                 Kernel1D::gaussian(1.0, 1.0)};
    m.T = {1.0 / 5, 1.0 / 4, 1.0 / 3};
    BuildFilterOptions opts;
    opts.b = {1.0, -0.2};
    double worst = profile_deviation(m, {50, 50, 50}, 20, 30, opts);
    double secs = now_minus(t0);
    report(6, "3-d Gaussian-kernel profiles (20 trials, 50^3)",
           worst <= 0.1 && secs < 120.0, fmt("max |profile dev| = %.4f in %.1f s", worst, secs));
}

void criterion7() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = exp_model({1.0, 1.0}, {1.0 / 5, 1.0 / 4});
    const std::size_t trials = 20, max_lag = 10;
    const int levels = 3;
    double worst_restrict = 0.0;
    auto fine_model = m;
    for (int l = 0; l < levels; ++l) fine_model = halve_scale(fine_model);
    std::vector<std::vector<double>> avg(2, std::vector<double>(max_lag + 1, 0.0));
    for (std::size_t t = 0; t < trials; ++t) {
        auto st = RefinementState::from_generate(generate(m, {20, 20}, 300 + t), m);
        for (int l = 0; l < levels; ++l) {
            auto res = refine(st, 9000 + 31 * t + l);
            for (std::size_t i = 0; i < st.field.grid.shape[0]; ++i)
                for (std::size_t j = 0; j < st.field.grid.shape[1]; ++j)
                    worst_restrict = std::max(
                        worst_restrict, std::abs(res.field.grid.at({2 * i, 2 * j}) -
                                                 st.field.grid.at({i, j})));
            st = std::move(res.state);
        }
        using oracle::ProfileDirection;
        auto p0 = oracle::covariance_profile(st.field.grid, ProfileDirection::Axis0, max_lag);
        auto p1 = oracle::covariance_profile(st.field.grid, ProfileDirection::Axis1, max_lag);
        for (std::size_t k = 0; k <= max_lag; ++k) {
            avg[0][k] += p0[k];
            avg[1][k] += p1[k];
        }
    }
    double worst_cov = 0.0;
    using oracle::ProfileDirection;
    for (int d = 0; d < 2; ++d) {
        auto target = oracle::target_profile(
            fine_model, d == 0 ? ProfileDirection::Axis0 : ProfileDirection::Axis1, max_lag);
        for (std::size_t k = 0; k <= max_lag; ++k) {
            if (target[k] < 0.05) continue;
            worst_cov = std::max(worst_cov, std::abs(avg[d][k] / double(trials) - target[k]));
        }
    }
    double secs = now_minus(t0);
    bool ok = worst_restrict <= 1e-9 && worst_cov <= 0.1 && secs < 120.0;
    // the covariance clause is expected to fail: interior fine points are
    // deterministic interpolants of the coarse data, so the fine-level
    // variance deficit is bounded below by the mean conditional variance of
    // the interior points (~0.106 sigma^2 at these parameters), already
    // outside the 0.1 sigma^2 band before the scheme's own approximation error
    report(7, "multiscale: restriction exact AND fine covariance within 0.1", ok,
           fmt("restriction dev = %.2e, covariance dev = %.3f", worst_restrict, worst_cov));
}

void criterion8() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = exp_model({1.0, 0.7}, {0.4, 0.3});
    auto st = RefinementState::from_generate(generate(m, {4, 4}, 55), m);
    auto fine_model = halve_scale(m);
    std::vector<std::vector<std::size_t>> boundary = {{1, 0}, {3, 0}, {5, 0},
                                                      {0, 1}, {0, 3}, {0, 5}};
    auto cg = conditional_boundary(fine_model, st.field, boundary);
    const int nb = int(boundary.size());
    const int trials = 10000;
    Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(nb);
    Eigen::MatrixXd cov_acc = Eigen::MatrixXd::Zero(nb, nb);
    for (int t = 0; t < trials; ++t) {
        auto res = refine(st, 10000 + std::uint64_t(t));
        Eigen::VectorXd y(nb);
        for (int i = 0; i < nb; ++i) y(i) = res.field.grid.at({boundary[i][0], boundary[i][1]});
        mean_acc += y;
        cov_acc += y * y.transpose();
    }
    mean_acc /= double(trials);
    cov_acc = cov_acc / double(trials) - mean_acc * mean_acc.transpose();
    double scale = cg.cov.diagonal().maxCoeff();
    double dev_mean = 0.0, dev_cov = 0.0;
    for (int i = 0; i < nb; ++i) {
        dev_mean = std::max(dev_mean, std::abs(mean_acc(i) - cg.mean(i)) /
                                          std::max(1.0, std::abs(cg.mean(i))));
        for (int j = 0; j < nb; ++j)
            dev_cov = std::max(dev_cov, std::abs(cov_acc(i, j) - cg.cov(i, j)) / scale);
    }
    double secs = now_minus(t0);
    report(8, "refined boundary matches the conditional Gaussian law (MC 10^4)",
           dev_mean <= 0.05 && dev_cov <= 0.05 && secs < 30.0,
           fmt("relative dev: mean %.3f, cov %.3f", dev_mean, dev_cov));
}

void criterion9() {
    auto t0 = std::chrono::steady_clock::now();
    // flop estimates at the 100^3 reference size
    std::vector<std::size_t> N100 = {100, 100, 100};
    double f_cmd = oracle::flop_estimate(oracle::Method::CMD, N100);
    double f_sw = oracle::flop_estimate(oracle::Method::StepwiseCMD, N100);
    double f_ce =
        oracle::flop_estimate(oracle::Method::CirculantEmbedding, N100, {512, 512, 512});
    double f_rz = oracle::flop_estimate(oracle::Method::Realization, N100);
    char printed[80];
    std::snprintf(printed, sizeof printed, "%.2e / %.2e / %.2e / %.2e", f_cmd, f_sw, f_ce,
                  f_rz);
    bool flops_ok = std::string(printed) == "1.00e+18 / 3.00e+08 / 3.62e+09 / 1.00e+06";

    // wall-time ratio: beta large enough that the burn-in prefix scales with
    // N, so the total work is ~8x between 32^3 and 64^3
    auto m = exp_model({1.0, 1.0, 1.0}, {0.1, 0.1, 0.1});
    auto time_gen = [&](std::size_t n) {
        double best = 1e9;
        for (int rep = 0; rep < 3; ++rep) {
            auto s0 = std::chrono::steady_clock::now();
            generate(m, {n, n, n}, 1 + rep, 1.6);
            best = std::min(best, now_minus(s0));
        }
        return best;
    };
    double ratio = time_gen(64) / time_gen(32);
    double secs = now_minus(t0);
    bool ok = flops_ok && ratio >= 5.0 && ratio <= 13.0 && secs < 120.0;
    report(9, "linear scaling and flop table", ok,
           fmt("time(64^3)/time(32^3) = %.2f, flops ", ratio) + printed +
               (flops_ok ? "" : " (mismatch)"));
}

void criterion10() {
    auto t0 = std::chrono::steady_clock::now();
    auto m = exp_model({1.0, 1.0, 1.0}, {1.0 / 12, 1.0 / 10, 1.0 / 8});
    auto tmp = std::filesystem::temp_directory_path();
    auto f1 = tmp / "grf_acc_d1.grf", f2 = tmp / "grf_acc_d2.grf";

    setenv("GRF_THREADS", "1", 1);
    auto a = generate(m, {32, 32, 32}, 7);
    io::write_grid(f1, a.field.grid, a.field.T, io::PayloadTag::Field);
    setenv("GRF_THREADS", "8", 1);
    auto b = generate(m, {32, 32, 32}, 7);
    io::write_grid(f2, b.field.grid, b.field.T, io::PayloadTag::Field);
    unsetenv("GRF_THREADS");

    std::ifstream s1(f1, std::ios::binary), s2(f2, std::ios::binary);
    std::string bytes1((std::istreambuf_iterator<char>(s1)), std::istreambuf_iterator<char>());
    std::string bytes2((std::istreambuf_iterator<char>(s2)), std::istreambuf_iterator<char>());
    bool ok = !bytes1.empty() && bytes1 == bytes2 &&
              a.field.grid.data == b.field.grid.data && now_minus(t0) < 60.0;
    std::filesystem::remove(f1);
    std::filesystem::remove(f2);
    report(10, "determinism: repeated runs and 1 vs 8 threads byte-identical", ok,
           ok ? "files identical" : "files differ");
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
