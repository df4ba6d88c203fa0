#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "grf/spectral.hpp"

using namespace grf;

namespace {

double eval_cos(const std::vector<double>& c, double theta) {
    double v = c[0];
    for (std::size_t k = 1; k < c.size(); ++k) v += 2.0 * c[k] * std::cos(k * theta);
    return v;
}

}  // namespace

TEST_CASE("ar1_filter_exponential closed form") {
    auto f = ar1_filter_exponential(1.0, 1.0, 1.0 / 12.0);
    CHECK(f.a[0] == 1.0);
    CHECK(f.a[1] == doctest::Approx(-std::exp(-1.0 / 12.0)).epsilon(1e-15));
    CHECK(f.b[0] == doctest::Approx(std::sqrt(1.0 - std::exp(-1.0 / 6.0))).epsilon(1e-15));
    CHECK(f.b[0] * f.b[0] / (1.0 - f.a[1] * f.a[1]) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK_NOTHROW(f.validate());

    // decorrelated limit
    auto g = ar1_filter_exponential(1.0, 1.0, 20.0);
    CHECK(std::abs(g.a[1]) < 1e-8);
    CHECK(g.b[0] == doctest::Approx(1.0).epsilon(1e-8));

    // sigma^2 scales the gain only
    auto h = ar1_filter_exponential(4.0, 0.7, 0.3);
    CHECK(h.b[0] * h.b[0] / (1.0 - h.a[1] * h.a[1]) == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("analytic_ar1_covariance") {
    RationalFilter1D white{{1.0}, {1.0, -0.0}};
    CHECK(analytic_ar1_covariance(white, 0) == doctest::Approx(1.0));

    RationalFilter1D f{{1.0}, {1.0, -0.5}};
    CHECK(analytic_ar1_covariance(f, 2) == doctest::Approx(0.25 / 0.75).epsilon(1e-15));

    for (double alpha : {0.5, 1.0, 2.0})
        for (double T : {1.0 / 12.0, 0.1}) {
            auto ar1 = ar1_filter_exponential(1.0, alpha, T);
            auto seq = sampled_sequence(Kernel1D::exponential(1.0, alpha), T, 10);
            for (long k = 0; k <= 10; ++k)
                CHECK(analytic_ar1_covariance(ar1, k) ==
                      doctest::Approx(seq[std::size_t(k)]).epsilon(1e-14));
        }

    RationalFilter1D unstable{{1.0}, {1.0, -1.5}};
    CHECK_THROWS_AS(analytic_ar1_covariance(unstable, 0), std::domain_error);
}

TEST_CASE("dual_gradient_hessian basics and finite differences") {
    std::vector<double> sigma = {1.0, 0.4, 0.1};
    std::vector<double> P = {1.0};

    // Q == 1: gradient_k = c_k (sigma_k - delta_{k0})
    auto ev = dual_gradient_hessian({1.0, 0.0, 0.0}, sigma, P, 2048);
    CHECK(ev.gradient[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ev.gradient[1] == doctest::Approx(2.0 * 0.4).epsilon(1e-12));
    CHECK(ev.gradient[2] == doctest::Approx(2.0 * 0.1).epsilon(1e-12));

    // finite-difference oracle at a random feasible q
    std::vector<double> q = {1.3, 0.2, -0.1};
    auto base = dual_gradient_hessian(q, sigma, P, 4096);
    double eps = 1e-6;
    for (std::size_t l = 0; l < q.size(); ++l) {
        auto qp = q;
        qp[l] += eps;
        auto evp = dual_gradient_hessian(qp, sigma, P, 4096);
        CHECK((evp.value - base.value) / eps ==
              doctest::Approx(base.gradient[l]).epsilon(1e-4));
        for (std::size_t k = 0; k < q.size(); ++k)
            CHECK((evp.gradient[k] - base.gradient[k]) / eps ==
                  doctest::Approx(base.hessian[k][l]).epsilon(1e-3));
    }

    CHECK_THROWS_AS(dual_gradient_hessian({-1.0, 0.0, 0.0}, sigma, P, 1024),
                    std::domain_error);
}

TEST_CASE("me_dual_solve trivial and AR(1) cases") {
    // m = 0: flat spectrum at the variance
    auto [q0, rep0] = me_dual_solve({1.0}, {1.0});
    CHECK(rep0.converged);
    CHECK(q0[0] == doctest::Approx(1.0).epsilon(1e-12));

    // m = 1, P = 1: the solution solves the Yule-Walker equations, so the
    // resulting AR(1) filter must agree with the closed form
    double r = std::exp(-0.3);
    auto [q1, rep1] = me_dual_solve({1.0, r}, {1.0});
    CHECK(rep1.converged);
    auto a = bauer_factorize(q1);
    RationalFilter1D f{{1.0 / a[0]}, {1.0, a[1] / a[0]}};
    auto ref = ar1_filter_exponential(1.0, 0.3, 1.0);
    CHECK(f.a[1] == doctest::Approx(ref.a[1]).epsilon(1e-10));
    CHECK(f.b[0] == doctest::Approx(ref.b[0]).epsilon(1e-10));

    // infeasible data
    CHECK_THROWS_AS(me_dual_solve({1.0, 0.99, 0.0}, {1.0}), std::domain_error);
}

TEST_CASE("me_dual_solve Gaussian moment matching") {
    auto sigma = sampled_sequence(Kernel1D::gaussian(1.0, 1.0), 0.2, 13);
    std::vector<double> b = {1.0, -0.2};
    std::vector<double> P = {b[0] * b[0] + b[1] * b[1], b[0] * b[1]};
    auto [q, rep] = me_dual_solve(sigma, P);
    CHECK(rep.converged);
    CHECK(rep.iterations <= 50);
    CHECK(rep.final_gradient_norm <= 1e-10);
    for (std::size_t k = 0; k <= 13; ++k)
        CHECK(std::abs(rep.moment_residuals[k]) <= 1e-10);

    // the returned double coefficients reproduce Q pointwise to the evaluation
    // conditioning; away from the cancellation region the moments follow
    CHECK(q.size() == 14);
    CHECK(q[0] > 0.0);
}

TEST_CASE("bauer_factorize") {
    CHECK(bauer_factorize({1.0}) == std::vector<double>{1.0});

    auto a = bauer_factorize({1.25, -0.5});
    REQUIRE(a.size() == 2);
    CHECK(a[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a[1] == doctest::Approx(-0.5).epsilon(1e-9));

    CHECK_THROWS_AS(bauer_factorize({1.0, 0.6}), std::domain_error);  // Q(pi) < 0

    // round trip on random stable polynomials
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> mag(0.05, 0.9), phase(0.0, 2.0 * std::numbers::pi);
    for (int trial = 0; trial < 30; ++trial) {
        std::uniform_int_distribution<std::size_t> degree(1, 10);
        std::size_t deg = degree(rng);
        // build a(z) from random roots inside the disk of radius 0.9
        std::vector<double> coeff = {1.0};
        std::size_t placed = 0;
        while (placed < deg) {
            if (placed + 2 <= deg && phase(rng) > std::numbers::pi / 2.0) {
                double m = mag(rng), ph = phase(rng);
                double re = m * std::cos(ph), im = m * std::sin(ph);
                std::vector<double> next(coeff.size() + 2, 0.0);
                for (std::size_t i = 0; i < coeff.size(); ++i) {
                    next[i] += coeff[i];
                    next[i + 1] += coeff[i] * (-2.0 * re);
                    next[i + 2] += coeff[i] * (re * re + im * im);
                }
                coeff = std::move(next);
                placed += 2;
            } else {
                double root = mag(rng) * (phase(rng) < std::numbers::pi ? 1.0 : -1.0);
                std::vector<double> next(coeff.size() + 1, 0.0);
                for (std::size_t i = 0; i < coeff.size(); ++i) {
                    next[i] += coeff[i];
                    next[i + 1] += coeff[i] * (-root);
                }
                coeff = std::move(next);
                placed += 1;
            }
        }
        std::vector<double> Q(coeff.size(), 0.0);
        for (std::size_t k = 0; k < coeff.size(); ++k)
            for (std::size_t j = 0; j + k < coeff.size(); ++j) Q[k] += coeff[j] * coeff[j + k];
        auto rec = bauer_factorize(Q);
        REQUIRE(rec.size() == coeff.size());
        double sign = rec[0] * coeff[0] < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < coeff.size(); ++k)
            CHECK(sign * rec[k] == doctest::Approx(coeff[k]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("build_filter dispatch and oracles") {
    // exponential: identical to the closed form
    auto built = build_filter(Kernel1D::exponential(1.0, 1.0), 0.1);
    auto ref = ar1_filter_exponential(1.0, 1.0, 0.1);
    CHECK(built.filter.a == ref.a);
    CHECK(built.filter.b == ref.b);

    // custom [1, 0.5]: Yule-Walker gives r = 0.5, c = sqrt(0.75)
    auto cus = build_filter(Kernel1D::custom({1.0, 0.5}), 1.0);
    REQUIRE(cus.filter.a.size() == 2);
    CHECK(cus.filter.a[1] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(cus.filter.b[0] == doctest::Approx(std::sqrt(0.75)).epsilon(1e-9));
    CHECK(analytic_ar1_covariance(cus.filter, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(analytic_ar1_covariance(cus.filter, 1) == doctest::Approx(0.5).epsilon(1e-9));

    // Gaussian ARMA: analytic output covariance via long impulse response
    BuildFilterOptions opts;
    opts.b = {1.0, -0.2};
    auto gb = build_filter(Kernel1D::gaussian(1.0, 1.0), 0.2, opts);
    CHECK_NOTHROW(gb.filter.validate());
    auto sigma = sampled_sequence(Kernel1D::gaussian(1.0, 1.0), 0.2, gb.filter.ar_order());
    auto cov = analytic_arma_covariance(gb.filter, gb.filter.ar_order());
    for (std::size_t k = 0; k < sigma.size(); ++k)
        CHECK(cov[k] == doctest::Approx(sigma[k]).epsilon(1e-7));
}

namespace {

double filter_spectrum(const RationalFilter1D& f, double theta) {
    std::complex<double> bz = 0.0, az = 0.0;
    for (std::size_t k = 0; k < f.b.size(); ++k)
        bz += f.b[k] * std::exp(std::complex<double>(0.0, -double(k) * theta));
    for (std::size_t k = 0; k < f.a.size(); ++k)
        az += f.a[k] * std::exp(std::complex<double>(0.0, -double(k) * theta));
    return std::norm(bz) / std::norm(az);
}

}  // namespace

TEST_CASE("filter spectrum moments match the Gaussian covariance data") {
    // independent 8192-point quadrature of |W|^2 against the target sequence
    BuildFilterOptions opts;
    opts.b = {1.0, -0.2};
    auto gb = build_filter(Kernel1D::gaussian(1.0, 1.0), 0.2, opts);
    auto sigma = sampled_sequence(Kernel1D::gaussian(1.0, 1.0), 0.2, gb.filter.ar_order());
    const std::size_t G = 8192;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < G; ++i) {
            double th = -std::numbers::pi + 2.0 * std::numbers::pi * double(i) / double(G);
            s += std::cos(k * th) * filter_spectrum(gb.filter, th);
        }
        CHECK(s / double(G) == doctest::Approx(sigma[k]).epsilon(1e-8).scale(1.0));
    }
}

TEST_CASE("spectral factor round trip on a frequency grid") {
    // well-conditioned cases: expanding W(z)W(1/z) reproduces P/Q pointwise
    BuildFilterOptions opts;
    opts.b = {1.0, -0.2};
    auto cases = {build_filter(Kernel1D::gaussian(1.0, 1.0), 1.0, opts),
                  build_filter(Kernel1D::custom({1.0, 0.5, 0.25}), 1.0)};
    for (const auto& built : cases) {
        REQUIRE(!built.spectrum.Q.empty());
        for (std::size_t i = 0; i < 4096; ++i) {
            double th = -std::numbers::pi + 2.0 * std::numbers::pi * double(i) / 4096.0;
            double w2 = filter_spectrum(built.filter, th);
            double pq = built.spectrum.eval(th);
            CHECK(w2 == doctest::Approx(pq).epsilon(1e-8));
        }
    }
}
