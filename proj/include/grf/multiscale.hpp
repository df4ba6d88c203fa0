#pragma once

#include <cstdint>
#include <optional>

#include "grf/covariance.hpp"
#include "grf/grid.hpp"
#include "grf/sampler.hpp"
#include "grf/spectral.hpp"

#include <Eigen/Dense>

namespace grf {

/// Everything needed to refine a realization to a halved sampling distance.
/// States produced by `generate` carry the full burn-in noise grid;
/// states produced by `refine` carry the fine grid noise (no burn-in) plus
/// the seeding lines of the cascade intermediates.
struct RefinementState {
    FieldGrid field;
    NoiseGrid noise;
    CovarianceModel model;  // with this state's T
    std::vector<RationalFilter1D> filters;
    std::vector<std::size_t> burn_in;  // noise-grid offset of the field block

    // intermediate seeding data for refined states (burn_in all zero)
    std::optional<Grid> y1_grid;               // dim-1-filtered intermediate, field-shaped
    std::optional<std::vector<double>> y2_col0;  // swapped-order intermediate at s=0

    static RefinementState from_generate(GenerateResult gen, CovarianceModel model);
    void validate() const;
};

/// Conditional law of boundary unknowns given the coarse samples:
/// mean, covariance (Schur complement), and a rank factor R with R R^T = cov.
struct ConditionalGaussian {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd factor;  // n x rank
};

/// Same kernels, every sampling distance halved.
CovarianceModel halve_scale(const CovarianceModel& model);

/// Fine extents 2N-1 so coarse points land on even fine indices.
std::vector<std::size_t> fine_extents(const std::vector<std::size_t>& N);

/// Exact Gaussian conditioning of fine-grid boundary points on all coarse
/// samples, with covariances assembled elementwise from the fine model.
/// Index convention: coarse sample (k_1..k_d) sits at fine index (2k_1..2k_d);
/// boundary points are given as fine-grid index vectors.
ConditionalGaussian conditional_boundary(const CovarianceModel& model_fine,
                                         const FieldGrid& coarse_field,
                                         const std::vector<std::vector<std::size_t>>& boundary);

/// Draw R e + mean with e standard normal of length rank.
Eigen::VectorXd sample_boundary(const ConditionalGaussian& cg, std::uint64_t seed);

/// Fine white-noise grid consistent with the coarse realization: filtering it
/// with the fine filters (given the boundary data) reproduces the coarse
/// samples at even indices exactly. Exponential (AR(1)) kernels, dims 1 or 2.
Grid reconstruct_fine_noise(const RefinementState& state,
                            const std::vector<RationalFilter1D>& fine_filters,
                            const Grid& y1_coarse, const Grid& y2_coarse);

struct RefineResult {
    FieldGrid field;
    RefinementState state;  // ready for another refinement level
};

/// One refinement level: halve the scale, build fine filters, sample the
/// boundary conditionally, reconstruct the fine noise, and complete the
/// field by the AR recursions.
RefineResult refine(const RefinementState& state, std::uint64_t seed);

}  // namespace grf
