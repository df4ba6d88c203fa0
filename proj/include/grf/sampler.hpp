#pragma once

#include <cstdint>

#include "grf/covariance.hpp"
#include "grf/grid.hpp"
#include "grf/spectral.hpp"

namespace grf {

/// Number of worker threads for line-parallel filtering: GRF_THREADS if set,
/// otherwise 1. Output bits never depend on this value.
unsigned thread_count();

/// Seeded i.i.d. standard normal samples. Counter-based: every sample is a
/// pure function of (seed, shape, flat index), so regeneration and parallel
/// generation are bit-exact.
NoiseGrid white_noise(const std::vector<std::size_t>& shape, std::uint64_t seed);

/// Standard normal draws from an auxiliary stream (boundary sampling etc.),
/// keyed by (seed, stream) and independent of grid noise.
std::vector<double> normal_stream(std::uint64_t seed, std::uint64_t stream, std::size_t n);

/// Apply the ARMA recursion sum_k a_k y(x - k e_axis) = sum_k b_k w(x - k e_axis)
/// along every 1-d line parallel to `axis`, zero initial conditions.
Grid filter_axis(const Grid& input, const RationalFilter1D& filter, std::size_t axis);

struct GenerateResult {
    FieldGrid field;          // retained N-shaped block
    NoiseGrid noise;          // full burn-in-sized noise grid
    std::vector<RationalFilter1D> filters;
    std::vector<std::size_t> burn_in;  // leading samples discarded per axis
};

/// Generate a realization of the model on an N-shaped grid by cascaded
/// per-dimension filtering of white noise, with burn-in padding trimmed
/// from the leading edge of every axis.
GenerateResult generate(const CovarianceModel& model, const std::vector<std::size_t>& N,
                        std::uint64_t seed, double beta = 0.1,
                        const BuildFilterOptions& filter_opts = {});

}  // namespace grf
