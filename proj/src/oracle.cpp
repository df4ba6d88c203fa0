#include "grf/oracle.hpp"

#include <cmath>

#include "grf/sampler.hpp"

namespace grf::oracle {

namespace {

Eigen::MatrixXd toeplitz_1d(const Kernel1D& kernel, double T, std::size_t n) {
    Eigen::MatrixXd out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double lag = static_cast<double>(i > j ? i - j : j - i) * T;
            out(i, j) = eval_kernel(kernel, lag);
        }
    return out;
}

}  // namespace

CovMatrix build_cov_matrix(const CovarianceModel& model, const std::vector<std::size_t>& N,
                           std::size_t cap) {
    model.validate();
    if (N.size() != model.dims()) throw std::invalid_argument("build_cov_matrix: arity mismatch");
    std::size_t total = 1;
    for (std::size_t e : N) total *= e;
    if (total > cap)
        throw std::invalid_argument(
            "build_cov_matrix: grid exceeds the dense cap; use the realization path");

    Eigen::MatrixXd acc = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t j = 0; j < N.size(); ++j) {
        Eigen::MatrixXd t = toeplitz_1d(model.kernels[j], model.T[j], N[j]);
        Eigen::MatrixXd next(acc.rows() * t.rows(), acc.cols() * t.cols());
        for (Eigen::Index r = 0; r < acc.rows(); ++r)
            for (Eigen::Index c = 0; c < acc.cols(); ++c)
                next.block(r * t.rows(), c * t.cols(), t.rows(), t.cols()) = acc(r, c) * t;
        acc = std::move(next);
    }
    return {std::move(acc), N};
}

Eigen::VectorXd cmd_sample(const CovMatrix& cov, std::uint64_t seed) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov.data);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("cmd_sample: covariance matrix not positive definite");
    auto w = normal_stream(seed, /*stream=*/0x434d44, static_cast<std::size_t>(cov.data.rows()));
    Eigen::VectorXd wv = Eigen::Map<const Eigen::VectorXd>(w.data(), cov.data.rows());
    return llt.matrixL() * wv;
}

FieldGrid stepwise_cmd_sample(const CovarianceModel& model, const std::vector<std::size_t>& N,
                              std::uint64_t seed, std::size_t per_axis_cap) {
    model.validate();
    if (N.size() != model.dims())
        throw std::invalid_argument("stepwise_cmd_sample: arity mismatch");
    for (std::size_t e : N)
        if (e > per_axis_cap) throw std::invalid_argument("stepwise_cmd_sample: extent over cap");

    NoiseGrid noise = white_noise(N, seed);
    Grid y = noise.grid;
    for (std::size_t j = 0; j < N.size(); ++j) {
        Eigen::LLT<Eigen::MatrixXd> llt(toeplitz_1d(model.kernels[j], model.T[j], N[j]));
        if (llt.info() != Eigen::Success)
            throw std::domain_error("stepwise_cmd_sample: per-dimension factorization failed");
        Eigen::MatrixXd L = llt.matrixL();

        const std::size_t len = N[j];
        const std::size_t stride = y.stride(j);
        const std::size_t block = stride * len;
        const std::size_t lines = y.size() / len;
        Grid out(y.shape);
        for (std::size_t line = 0; line < lines; ++line) {
            std::size_t base = (line / stride) * block + (line % stride);
            for (std::size_t i = 0; i < len; ++i) {
                double s = 0.0;
                for (std::size_t k = 0; k <= i; ++k) s += L(i, k) * y.data[base + k * stride];
                out.data[base + i * stride] = s;
            }
        }
        y = std::move(out);
    }

    FieldGrid field;
    field.grid = std::move(y);
    field.T = model.T;
    field.seed = seed;
    return field;
}

double sample_covariance(const Grid& field, const std::vector<std::size_t>& k) {
    if (k.size() != field.dims()) throw std::invalid_argument("sample_covariance: arity mismatch");
    for (std::size_t j = 0; j < k.size(); ++j)
        if (k[j] >= field.shape[j]) throw std::invalid_argument("sample_covariance: lag out of range");

    std::vector<std::size_t> inner(field.dims());
    for (std::size_t j = 0; j < k.size(); ++j) inner[j] = field.shape[j] - k[j];

    std::size_t shift = 0;
    for (std::size_t j = 0; j < k.size(); ++j) shift += k[j] * field.stride(j);

    double s = 0.0;
    std::vector<std::size_t> idx(field.dims(), 0);
    std::size_t n_inner = 1;
    for (std::size_t e : inner) n_inner *= e;
    for (std::size_t f = 0; f < n_inner; ++f) {
        std::size_t base = 0;
        for (std::size_t j = 0; j < idx.size(); ++j) base = base * field.shape[j] + idx[j];
        s += field.data[base] * field.data[base + shift];
        for (std::size_t j = idx.size(); j-- > 0;) {
            if (++idx[j] < inner[j]) break;
            idx[j] = 0;
        }
    }
    return s / static_cast<double>(field.size());
}

std::vector<double> covariance_profile(const Grid& field, ProfileDirection dir,
                                       std::size_t max_lag) {
    std::vector<std::size_t> k(field.dims(), 0);
    std::vector<double> out;
    out.reserve(max_lag + 1);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        switch (dir) {
            case ProfileDirection::Axis0: k[0] = lag; break;
            case ProfileDirection::Axis1:
                if (field.dims() < 2) throw std::invalid_argument("profile: no axis 1");
                k[1] = lag;
                break;
            case ProfileDirection::Axis2:
                if (field.dims() < 3) throw std::invalid_argument("profile: no axis 2");
                k[2] = lag;
                break;
            case ProfileDirection::Diagonal:
                for (auto& kj : k) kj = lag;
                break;
        }
        out.push_back(sample_covariance(field, k));
    }
    return out;
}

std::vector<double> target_profile(const CovarianceModel& model, ProfileDirection dir,
                                   std::size_t max_lag) {
    std::vector<double> out;
    out.reserve(max_lag + 1);
    std::vector<long> k(model.dims(), 0);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        std::fill(k.begin(), k.end(), 0L);
        switch (dir) {
            case ProfileDirection::Axis0: k[0] = static_cast<long>(lag); break;
            case ProfileDirection::Axis1: k.at(1) = static_cast<long>(lag); break;
            case ProfileDirection::Axis2: k.at(2) = static_cast<long>(lag); break;
            case ProfileDirection::Diagonal:
                for (auto& kj : k) kj = static_cast<long>(lag);
                break;
        }
        out.push_back(product_covariance(model, k));
    }
    return out;
}

Method method_from_string(const std::string& name) {
    if (name == "cmd") return Method::CMD;
    if (name == "stepwise") return Method::StepwiseCMD;
    if (name == "circulant") return Method::CirculantEmbedding;
    if (name == "realization") return Method::Realization;
    throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method m) {
    switch (m) {
        case Method::CMD: return "cmd";
        case Method::StepwiseCMD: return "stepwise";
        case Method::CirculantEmbedding: return "circulant";
        case Method::Realization: return "realization";
    }
    return "?";
}

double flop_estimate(Method method, const std::vector<std::size_t>& N,
                     const std::vector<std::size_t>& C) {
    double prod = 1.0, sum = 0.0;
    for (std::size_t e : N) {
        prod *= static_cast<double>(e);
        sum += static_cast<double>(e);
    }
    double cprod = 1.0;
    for (std::size_t e : C.empty() ? N : C) cprod *= static_cast<double>(e);
    switch (method) {
        case Method::CMD: return prod * prod * prod;
        case Method::StepwiseCMD: return prod * sum;
        case Method::CirculantEmbedding: return cprod * std::log2(cprod);
        case Method::Realization: return prod;
    }
    throw std::logic_error("flop_estimate: bad method");
}

}  // namespace grf::oracle
