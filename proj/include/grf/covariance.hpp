#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace grf {

/// Kind of a 1-d covariance kernel.
enum class KernelKind { Exponential, Gaussian, Custom };

/// One dimension's covariance kernel. Exponential and Gaussian kernels are
/// parameterized by (sigma2, alpha); a Custom kernel holds a finite sequence
/// of covariance values at integer lags and evaluates to zero beyond it.
struct Kernel1D {
    KernelKind kind = KernelKind::Exponential;
    double sigma2 = 1.0;
    double alpha = 1.0;
    std::vector<double> custom_seq;  // used only for Custom

    static Kernel1D exponential(double sigma2, double alpha);
    static Kernel1D gaussian(double sigma2, double alpha);
    static Kernel1D custom(std::vector<double> seq);

    void validate() const;
};

/// A decoupled d-dimensional covariance model: the covariance at integer lag
/// vector k equals the product over dimensions of kernel_j(k_j * T_j).
struct CovarianceModel {
    std::vector<Kernel1D> kernels;
    std::vector<double> T;  // per-dimension sampling distances, each > 0

    std::size_t dims() const { return kernels.size(); }
    void validate() const;
};

/// Evaluate a kernel at a continuous lag x. Custom kernels accept integer
/// lags only and throw std::domain_error otherwise.
double eval_kernel(const Kernel1D& kernel, double x);

/// Covariance sequence [rho(0), rho(T), ..., rho(m*T)].
std::vector<double> sampled_sequence(const Kernel1D& kernel, double T, std::size_t m);

/// Smallest m >= 1 such that |seq[k]| < rel_threshold*seq[0] for all k > m
/// within the sequence; len-1 if the tail never becomes negligible.
std::size_t dominant_lag_count(const std::vector<double>& seq, double rel_threshold = 1e-3);

/// Product covariance of the model at an integer lag vector.
double product_covariance(const CovarianceModel& model, const std::vector<long>& k);

}  // namespace grf
