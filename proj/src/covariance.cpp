#include "grf/covariance.hpp"

#include <cstdlib>

namespace grf {

Kernel1D Kernel1D::exponential(double sigma2, double alpha) {
    Kernel1D k;
    k.kind = KernelKind::Exponential;
    k.sigma2 = sigma2;
    k.alpha = alpha;
    k.validate();
    return k;
}

Kernel1D Kernel1D::gaussian(double sigma2, double alpha) {
    Kernel1D k;
    k.kind = KernelKind::Gaussian;
    k.sigma2 = sigma2;
    k.alpha = alpha;
    k.validate();
    return k;
}

Kernel1D Kernel1D::custom(std::vector<double> seq) {
    Kernel1D k;
    k.kind = KernelKind::Custom;
    k.custom_seq = std::move(seq);
    if (!k.custom_seq.empty()) k.sigma2 = k.custom_seq[0];
    k.validate();
    return k;
}

void Kernel1D::validate() const {
    if (kind == KernelKind::Custom) {
        if (custom_seq.empty()) throw std::invalid_argument("custom kernel: empty sequence");
        if (custom_seq[0] <= 0.0) throw std::invalid_argument("custom kernel: seq[0] must be positive");
        for (double v : custom_seq)
            if (std::abs(v) > custom_seq[0])
                throw std::invalid_argument("custom kernel: |seq[k]| must not exceed seq[0]");
    } else {
        if (sigma2 <= 0.0) throw std::invalid_argument("kernel: sigma2 must be positive");
        if (alpha <= 0.0) throw std::invalid_argument("kernel: alpha must be positive");
    }
}

void CovarianceModel::validate() const {
    if (kernels.empty()) throw std::invalid_argument("model: no kernels");
    if (kernels.size() != T.size()) throw std::invalid_argument("model: kernels/T arity mismatch");
    for (const auto& k : kernels) k.validate();
    for (double t : T)
        if (t <= 0.0) throw std::invalid_argument("model: sampling distance must be positive");
}

double eval_kernel(const Kernel1D& kernel, double x) {
    if (!std::isfinite(x)) throw std::domain_error("eval_kernel: non-finite lag");
    switch (kernel.kind) {
        case KernelKind::Exponential:
            return kernel.sigma2 * std::exp(-kernel.alpha * std::abs(x));
        case KernelKind::Gaussian:
            return kernel.sigma2 * std::exp(-kernel.alpha * x * x);
        case KernelKind::Custom: {
            double r = std::round(x);
            if (x != r) throw std::domain_error("eval_kernel: custom kernel requires integer lag");
            auto k = static_cast<std::size_t>(std::abs(r));
            return k < kernel.custom_seq.size() ? kernel.custom_seq[k] : 0.0;
        }
    }
    throw std::logic_error("eval_kernel: bad kind");
}

std::vector<double> sampled_sequence(const Kernel1D& kernel, double T, std::size_t m) {
    if (T <= 0.0) throw std::invalid_argument("sampled_sequence: T must be positive");
    std::vector<double> seq(m + 1);
    for (std::size_t k = 0; k <= m; ++k) seq[k] = eval_kernel(kernel, static_cast<double>(k) * T);
    return seq;
}

std::size_t dominant_lag_count(const std::vector<double>& seq, double rel_threshold) {
    if (seq.empty()) throw std::domain_error("dominant_lag_count: empty sequence");
    if (seq[0] <= 0.0) throw std::domain_error("dominant_lag_count: seq[0] must be positive");
    if (rel_threshold <= 0.0 || rel_threshold >= 1.0)
        throw std::invalid_argument("dominant_lag_count: threshold must be in (0,1)");
    double cut = rel_threshold * seq[0];
    // last index with a non-negligible value
    std::size_t last = 0;
    for (std::size_t k = 1; k < seq.size(); ++k)
        if (std::abs(seq[k]) >= cut) last = k;
    return last >= 1 ? last : 1;
}

double product_covariance(const CovarianceModel& model, const std::vector<long>& k) {
    if (k.size() != model.dims())
        throw std::invalid_argument("product_covariance: lag dimension mismatch");
    double p = 1.0;
    for (std::size_t j = 0; j < k.size(); ++j)
        p *= eval_kernel(model.kernels[j], static_cast<double>(k[j]) * model.T[j]);
    return p;
}

}  // namespace grf
