#pragma once

#include <cstdint>
#include <string>

#include "grf/covariance.hpp"
#include "grf/grid.hpp"

#include <Eigen/Dense>

namespace grf::oracle {

/// Dense covariance matrix of a model on an N-shaped grid; equals the
/// Kronecker product of the per-dimension Toeplitz matrices.
struct CovMatrix {
    Eigen::MatrixXd data;
    std::vector<std::size_t> N;
};

inline constexpr std::size_t kDenseCap = 32768;

CovMatrix build_cov_matrix(const CovarianceModel& model, const std::vector<std::size_t>& N,
                           std::size_t cap = kDenseCap);

/// Covariance matrix decomposition sample y = L w with L the Cholesky
/// factor of cov and w seeded standard normal.
Eigen::VectorXd cmd_sample(const CovMatrix& cov, std::uint64_t seed);

/// Per-dimension Cholesky factors applied along each axis of a white-noise
/// grid; same law as cmd_sample on the Kronecker covariance.
FieldGrid stepwise_cmd_sample(const CovarianceModel& model, const std::vector<std::size_t>& N,
                              std::uint64_t seed, std::size_t per_axis_cap = 4096);

/// Biased spatial-average sample covariance at integer lag k:
/// (1/|N|) sum_x y(x+k) y(x), summed over x with x+k inside the grid.
double sample_covariance(const Grid& field, const std::vector<std::size_t>& k);

enum class ProfileDirection { Axis0, Axis1, Axis2, Diagonal };

/// Sample covariance at lags k*e_j (axis) or k*(1,..,1) (diagonal),
/// k = 0..max_lag.
std::vector<double> covariance_profile(const Grid& field, ProfileDirection dir,
                                       std::size_t max_lag);

/// Target (model) covariance along the same directions.
std::vector<double> target_profile(const CovarianceModel& model, ProfileDirection dir,
                                   std::size_t max_lag);

enum class Method { CMD, StepwiseCMD, CirculantEmbedding, Realization };

Method method_from_string(const std::string& name);
std::string method_name(Method m);

/// Leading-order flop count of each sampling method for a 3-d size.
/// Circulant embedding is costed on the embedding size C (defaults to N
/// when C is empty); the other methods use N.
double flop_estimate(Method method, const std::vector<std::size_t>& N,
                     const std::vector<std::size_t>& C = {});

}  // namespace grf::oracle
