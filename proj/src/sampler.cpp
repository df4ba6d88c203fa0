#include "grf/sampler.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

namespace grf {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t key, std::uint64_t counter) {
    return splitmix64(key ^ splitmix64(counter));
}

double standard_normal(std::uint64_t key, std::uint64_t i) {
    // Box-Muller on two hashed counters; u1 kept away from zero.
    double u1 = static_cast<double>((mix(key, 2 * i) >> 11) + 1) * 0x1p-53;
    double u2 = static_cast<double>(mix(key, 2 * i + 1) >> 11) * 0x1p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t noise_key(std::uint64_t seed, const std::vector<std::size_t>& shape) {
    std::uint64_t key = splitmix64(seed);
    for (std::size_t e : shape) key = splitmix64(key ^ static_cast<std::uint64_t>(e));
    return key;
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
    unsigned nt = thread_count();
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& w : workers) w.join();
}

}  // namespace

unsigned thread_count() {
    if (const char* env = std::getenv("GRF_THREADS")) {
        long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

NoiseGrid white_noise(const std::vector<std::size_t>& shape, std::uint64_t seed) {
    NoiseGrid out;
    out.seed = seed;
    out.grid = Grid(shape);
    std::uint64_t key = noise_key(seed, shape);
    std::size_t n = out.grid.size();
    // chunked so large grids fill in parallel; values depend only on the index
    std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(n, 64));
    std::size_t chunk = (n + chunks - 1) / chunks;
    parallel_for(chunks, [&](std::size_t c) {
        std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) out.grid.data[i] = standard_normal(key, i);
    });
    return out;
}

std::vector<double> normal_stream(std::uint64_t seed, std::uint64_t stream, std::size_t n) {
    std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(stream ^ 0xa5a5a5a5a5a5a5a5ull));
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = standard_normal(key, i);
    return out;
}

Grid filter_axis(const Grid& input, const RationalFilter1D& filter, std::size_t axis) {
    if (axis >= input.dims()) throw std::invalid_argument("filter_axis: bad axis");
    filter.validate();
    const std::size_t L = input.shape[axis];
    if (L <= filter.ar_order()) throw std::invalid_argument("filter_axis: extent too small");

    const std::size_t stride = input.stride(axis);
    const std::size_t block = stride * L;
    const std::size_t lines = input.size() / L;
    const auto& a = filter.a;
    const auto& b = filter.b;

    Grid out(input.shape);
    parallel_for(lines, [&](std::size_t line) {
        std::size_t base = (line / stride) * block + (line % stride);
        const double* w = input.data.data() + base;
        double* y = out.data.data() + base;
        for (std::size_t t = 0; t < L; ++t) {
            double v = 0.0;
            for (std::size_t k = 0; k < b.size() && k <= t; ++k) v += b[k] * w[(t - k) * stride];
            for (std::size_t k = 1; k < a.size() && k <= t; ++k) v -= a[k] * y[(t - k) * stride];
            y[t * stride] = v;
        }
    });
    return out;
}

GenerateResult generate(const CovarianceModel& model, const std::vector<std::size_t>& N,
                        std::uint64_t seed, double beta,
                        const BuildFilterOptions& filter_opts) {
    model.validate();
    if (N.size() != model.dims()) throw std::invalid_argument("generate: N arity mismatch");
    if (beta < 0.0) throw std::invalid_argument("generate: beta must be nonnegative");

    GenerateResult out;
    std::vector<std::size_t> M(N.size());
    out.burn_in.resize(N.size());
    for (std::size_t j = 0; j < N.size(); ++j) {
        auto built = build_filter(model.kernels[j], model.T[j], filter_opts);
        std::size_t m = built.filter.ar_order();
        out.filters.push_back(std::move(built.filter));
        auto pad = static_cast<std::size_t>(std::ceil(beta * static_cast<double>(N[j])));
        out.burn_in[j] = std::max(pad + m, m + 50);
        M[j] = N[j] + out.burn_in[j];
    }

    out.noise = white_noise(M, seed);
    Grid y = out.noise.grid;
    for (std::size_t j = 0; j < N.size(); ++j) y = filter_axis(y, out.filters[j], j);

    out.field.grid = y.block(out.burn_in, N);
    out.field.T = model.T;
    out.field.seed = seed;
    out.field.scale_level = 0;
    return out;
}

}  // namespace grf
