#include "grf/multiscale.hpp"

#include <cmath>

namespace grf {

namespace {

constexpr std::uint64_t kBoundaryStream = 0xB0D7;

struct Ar1Coeffs {
    double a;  // recursion coefficient
    double b;  // input gain
};

Ar1Coeffs ar1_coeffs(const RationalFilter1D& f) {
    if (f.a.size() != 2 || f.b.size() != 1)
        throw std::invalid_argument("multiscale: filters must be AR(1)");
    Ar1Coeffs c{-f.a[1], f.b[0]};
    if (std::abs(c.a) < 1e-300 || std::abs(c.b) < 1e-300)
        throw std::domain_error("multiscale: degenerate filter coefficient");
    return c;
}

void require_exponential(const CovarianceModel& model) {
    for (const auto& k : model.kernels)
        if (k.kind != KernelKind::Exponential)
            throw std::invalid_argument(
                "multiscale: refinement is supported for exponential kernels only");
}

struct CoarseIntermediates {
    Grid y1;  // dim-0-filtered intermediate on the coarse field block
    Grid y2;  // dim-1-filtered (swapped-order) intermediate, 2-d only
};

// Recover the cascade intermediates of the coarse realization. Generate
// states re-filter the retained full noise grid; refined states carry their
// seeding data and invert the recursions on the field itself.
CoarseIntermediates coarse_intermediates(const RefinementState& state) {
    const auto& N = state.field.grid.shape;
    const std::size_t d = N.size();
    CoarseIntermediates out;

    bool has_burn_in = false;
    for (std::size_t b : state.burn_in) has_burn_in |= b > 0;

    if (d == 1) {
        out.y1 = state.field.grid;  // single filter: intermediate equals the output
        return out;
    }

    if (has_burn_in) {
        out.y1 = filter_axis(state.noise.grid, state.filters[0], 0).block(state.burn_in, N);
        out.y2 = filter_axis(state.noise.grid, state.filters[1], 1).block(state.burn_in, N);
        return out;
    }

    if (!state.y1_grid || !state.y2_col0)
        throw std::invalid_argument("multiscale: refined state lacks intermediate seeding data");

    out.y1 = *state.y1_grid;
    auto [ap, bp] = ar1_coeffs(state.filters[0]);
    const Grid& y = state.field.grid;
    out.y2 = Grid(N);
    for (std::size_t t = 0; t < N[1]; ++t) out.y2.data[t] = (*state.y2_col0)[t];
    for (std::size_t s = 1; s < N[0]; ++s)
        for (std::size_t t = 0; t < N[1]; ++t)
            out.y2.data[s * N[1] + t] =
                (y.data[s * N[1] + t] - ap * y.data[(s - 1) * N[1] + t]) / bp;
    return out;
}

Eigen::MatrixXd kernel_matrix(const Kernel1D& kernel, double T, std::size_t n,
                              std::size_t stride_a, std::size_t offset_a,
                              std::size_t m, std::size_t stride_b, std::size_t offset_b) {
    Eigen::MatrixXd out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double la = static_cast<double>(i * stride_a + offset_a);
            double lb = static_cast<double>(j * stride_b + offset_b);
            out(i, j) = eval_kernel(kernel, (la - lb) * T);
        }
    return out;
}

}  // namespace

RefinementState RefinementState::from_generate(GenerateResult gen, CovarianceModel model) {
    RefinementState st;
    st.field = std::move(gen.field);
    st.noise = std::move(gen.noise);
    st.model = std::move(model);
    st.filters = std::move(gen.filters);
    st.burn_in = std::move(gen.burn_in);
    return st;
}

void RefinementState::validate() const {
    model.validate();
    if (field.grid.dims() != model.dims() || noise.grid.dims() != model.dims())
        throw std::invalid_argument("refinement state: dimension mismatch");
    if (filters.size() != model.dims() || burn_in.size() != model.dims())
        throw std::invalid_argument("refinement state: filter arity mismatch");
    for (std::size_t j = 0; j < model.dims(); ++j)
        if (field.grid.shape[j] + burn_in[j] != noise.grid.shape[j])
            throw std::invalid_argument("refinement state: field/noise shapes inconsistent");
}

CovarianceModel halve_scale(const CovarianceModel& model) {
    CovarianceModel fine = model;
    for (double& t : fine.T) t /= 2.0;
    return fine;
}

std::vector<std::size_t> fine_extents(const std::vector<std::size_t>& N) {
    std::vector<std::size_t> out(N.size());
    for (std::size_t j = 0; j < N.size(); ++j) out[j] = 2 * N[j] - 1;
    return out;
}

ConditionalGaussian conditional_boundary(
    const CovarianceModel& model_fine, const FieldGrid& coarse_field,
    const std::vector<std::vector<std::size_t>>& boundary) {
    model_fine.validate();
    const auto& N = coarse_field.grid.shape;
    const std::size_t d = N.size();
    const std::size_t n1 = coarse_field.grid.size();
    const std::size_t n2 = boundary.size();

    // fine-grid index vectors of the conditioning set (coarse points)
    std::vector<std::vector<long>> coarse_pos(n1, std::vector<long>(d));
    {
        std::vector<std::size_t> idx(d, 0);
        for (std::size_t f = 0; f < n1; ++f) {
            for (std::size_t j = 0; j < d; ++j) coarse_pos[f][j] = 2 * static_cast<long>(idx[j]);
            for (std::size_t j = d; j-- > 0;) {
                if (++idx[j] < N[j]) break;
                idx[j] = 0;
            }
        }
    }

    auto cov_at = [&](const std::vector<long>& p, const std::vector<long>& q) {
        std::vector<long> lag(d);
        for (std::size_t j = 0; j < d; ++j) lag[j] = p[j] - q[j];
        return product_covariance(model_fine, lag);
    };

    std::vector<std::vector<long>> bpos(n2, std::vector<long>(d));
    for (std::size_t i = 0; i < n2; ++i) {
        bool on_coarse = true;
        for (std::size_t j = 0; j < d; ++j) {
            bpos[i][j] = static_cast<long>(boundary[i][j]);
            on_coarse &= boundary[i][j] % 2 == 0;
        }
        if (on_coarse)
            throw std::invalid_argument("conditional_boundary: boundary point on the coarse grid");
    }

    Eigen::MatrixXd S11(n1, n1), S21(n2, n1), S22(n2, n2);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n1; ++j) S11(i, j) = cov_at(coarse_pos[i], coarse_pos[j]);
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n1; ++j) S21(i, j) = cov_at(bpos[i], coarse_pos[j]);
    for (std::size_t i = 0; i < n2; ++i)
        for (std::size_t j = 0; j < n2; ++j) S22(i, j) = cov_at(bpos[i], bpos[j]);

    Eigen::LLT<Eigen::MatrixXd> llt(S11);
    if (llt.info() != Eigen::Success) {
        // one jitter pass guards roundoff on large boundary systems
        double jitter = 1e-10 * S11.trace() / static_cast<double>(n1);
        llt.compute(S11 + jitter * Eigen::MatrixXd::Identity(n1, n1));
        if (llt.info() != Eigen::Success)
            throw std::domain_error("conditional_boundary: coarse covariance numerically singular");
    }

    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(coarse_field.grid.data.data(), n1);

    ConditionalGaussian cg;
    cg.mean = S21 * llt.solve(a);
    cg.cov = S22 - S21 * llt.solve(S21.transpose());
    cg.cov = 0.5 * (cg.cov + cg.cov.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cg.cov);
    double lmax = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
    if (es.eigenvalues().size() && es.eigenvalues().minCoeff() < -1e-10 * std::max(lmax, 1.0))
        throw std::domain_error("conditional_boundary: Schur complement not PSD");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 1e-12 * lmax) keep.push_back(i);
    cg.factor.resize(n2, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c)
        cg.factor.col(c) = es.eigenvectors().col(keep[c]) * std::sqrt(es.eigenvalues()(keep[c]));
    return cg;
}

Eigen::VectorXd sample_boundary(const ConditionalGaussian& cg, std::uint64_t seed) {
    auto e = normal_stream(seed, kBoundaryStream, static_cast<std::size_t>(cg.factor.cols()));
    Eigen::VectorXd ev = Eigen::Map<const Eigen::VectorXd>(e.data(), cg.factor.cols());
    return cg.factor * ev + cg.mean;
}

Grid reconstruct_fine_noise(const RefinementState& state,
                            const std::vector<RationalFilter1D>& fine_filters,
                            const Grid& y1_coarse, const Grid& y2_coarse) {
    const auto& N = state.field.grid.shape;
    const std::size_t d = N.size();
    if (d != 1 && d != 2)
        throw std::invalid_argument("reconstruct_fine_noise: dims must be 1 or 2");
    require_exponential(state.model);

    const Grid w_c = state.noise.grid.block(state.burn_in, N);
    auto fshape = fine_extents(N);
    Grid w(fshape);

    if (d == 1) {
        auto [A, B] = ar1_coeffs(fine_filters[0]);
        const auto& yc = y1_coarse.data;
        for (std::size_t k = 0; k < N[0]; ++k) w.data[2 * k] = w_c.data[k];
        for (std::size_t k = 1; k < N[0]; ++k)
            w.data[2 * k - 1] =
                yc[k] / (A * B) - (A / B) * yc[k - 1] - w.data[2 * k] / A;
        return w;
    }

    auto [A, B] = ar1_coeffs(fine_filters[0]);
    auto [C, D] = ar1_coeffs(fine_filters[1]);
    const std::size_t N1 = N[0], N2 = N[1];
    const std::size_t W2 = fshape[1];
    auto wat = [&](std::size_t s, std::size_t t) -> double& { return w.data[s * W2 + t]; };
    auto y1c = [&](std::size_t k, std::size_t l) { return y1_coarse.data[k * N2 + l]; };
    auto y2c = [&](std::size_t k, std::size_t l) { return y2_coarse.data[k * N2 + l]; };
    auto yc = [&](std::size_t k, std::size_t l) { return state.field.grid.data[k * N2 + l]; };

    // even-even: the coarse noise carries over
    for (std::size_t k = 0; k < N1; ++k)
        for (std::size_t l = 0; l < N2; ++l) wat(2 * k, 2 * l) = w_c.data[k * N2 + l];

    // odd s, even t: invert the doubled dim-0 recursion against the
    // dim-0 intermediate targets
    for (std::size_t l = 0; l < N2; ++l)
        for (std::size_t k = 1; k < N1; ++k)
            wat(2 * k - 1, 2 * l) = y1c(k, l) / (A * B) - (A / B) * y1c(k - 1, l) -
                                    wat(2 * k, 2 * l) / A;

    // even s, odd t: dual ordering (dim-1 filter first) fixes these
    for (std::size_t k = 0; k < N1; ++k)
        for (std::size_t l = 1; l < N2; ++l)
            wat(2 * k, 2 * l - 1) = y2c(k, l) / (C * D) - (C / D) * y2c(k, l - 1) -
                                    wat(2 * k, 2 * l) / C;

    // odd s, odd t: intermediate targets on odd rows follow from the field
    // and the dim-0 intermediate, then the dim-0 inversion applies again
    for (std::size_t l = 1; l < N2; ++l) {
        auto y1t = [&](std::size_t k) {
            return yc(k, l) / (C * D) - (C / D) * yc(k, l - 1) - y1c(k, l) / C;
        };
        for (std::size_t k = 1; k < N1; ++k)
            wat(2 * k - 1, 2 * l - 1) = y1t(k) / (A * B) - (A / B) * y1t(k - 1) -
                                        wat(2 * k, 2 * l - 1) / A;
    }
    return w;
}

RefineResult refine(const RefinementState& state, std::uint64_t seed) {
    state.validate();
    require_exponential(state.model);
    const auto& N = state.field.grid.shape;
    const std::size_t d = N.size();
    if (d != 1 && d != 2) throw std::invalid_argument("refine: dims must be 1 or 2");

    CovarianceModel fine_model = halve_scale(state.model);
    std::vector<RationalFilter1D> fine_filters;
    for (std::size_t j = 0; j < d; ++j)
        fine_filters.push_back(
            build_filter(fine_model.kernels[j], fine_model.T[j]).filter);

    auto inter = coarse_intermediates(state);
    auto fshape = fine_extents(N);

    RefineResult out;
    out.state.model = fine_model;
    out.state.filters = fine_filters;
    out.state.burn_in.assign(d, 0);

    if (d == 1) {
        Grid w = reconstruct_fine_noise(state, fine_filters, inter.y1, Grid{});
        auto [A, B] = ar1_coeffs(fine_filters[0]);
        Grid y(fshape);
        y.data[0] = state.field.grid.data[0];
        for (std::size_t s = 1; s < fshape[0]; ++s)
            y.data[s] = A * y.data[s - 1] + B * w.data[s];

        out.field.grid = std::move(y);
        out.field.T = fine_model.T;
        out.field.seed = seed;
        out.field.scale_level = state.field.scale_level + 1;
        out.state.field = out.field;
        out.state.noise.grid = std::move(w);
        out.state.noise.seed = seed;
        out.state.y1_grid = out.state.field.grid;
        return out;
    }

    auto [A, B] = ar1_coeffs(fine_filters[0]);
    auto [C, D] = ar1_coeffs(fine_filters[1]);
    const std::size_t N1 = N[0], N2 = N[1];
    const std::size_t S = fshape[0], T = fshape[1];

    Grid w = reconstruct_fine_noise(state, fine_filters, inter.y1, inter.y2);

    // boundary: the odd points of the first fine column (needed to start the
    // dim-1 recursions) and of the first fine row (needed to seed the dim-0
    // intermediate), sampled jointly from their exact conditional law given
    // all coarse samples. The separable model collapses the conditioning to
    // per-dimension matrices.
    Eigen::VectorXd bcol(N1 - 1), brow(N2 - 1);
    {
        const auto& kx = fine_model.kernels[0];
        const auto& ky = fine_model.kernels[1];
        double T1 = fine_model.T[0], T2 = fine_model.T[1];

        Eigen::MatrixXd Kx_ee = kernel_matrix(kx, T1, N1, 2, 0, N1, 2, 0);
        Eigen::MatrixXd Kx_oe = kernel_matrix(kx, T1, N1 - 1, 2, 1, N1, 2, 0);
        Eigen::MatrixXd Kx_oo = kernel_matrix(kx, T1, N1 - 1, 2, 1, N1 - 1, 2, 1);
        Eigen::MatrixXd Ky_ee = kernel_matrix(ky, T2, N2, 2, 0, N2, 2, 0);
        Eigen::MatrixXd Ky_oe = kernel_matrix(ky, T2, N2 - 1, 2, 1, N2, 2, 0);
        Eigen::MatrixXd Ky_oo = kernel_matrix(ky, T2, N2 - 1, 2, 1, N2 - 1, 2, 1);

        Eigen::LLT<Eigen::MatrixXd> lltx(Kx_ee), llty(Ky_ee);
        if (lltx.info() != Eigen::Success || llty.info() != Eigen::Success)
            throw std::domain_error("refine: coarse covariance factor failed");

        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
            Y(state.field.grid.data.data(), N1, N2);

        // vx/vy: covariances between the origin and the coarse points of one
        // dimension; ux/uy: between the odd boundary points and the origin
        Eigen::VectorXd vx = Kx_ee.col(0), vy = Ky_ee.col(0);
        Eigen::VectorXd ux = Kx_oe.col(0), uy = Ky_oe.col(0);

        Eigen::VectorXd wx = lltx.solve(vx), wy = llty.solve(vy);
        Eigen::MatrixXd Gx = Kx_oe * lltx.solve(Eigen::MatrixXd::Identity(N1, N1));
        Eigen::MatrixXd Gy = Ky_oe * llty.solve(Eigen::MatrixXd::Identity(N2, N2));
        double beta_x = vx.dot(wx), beta_y = vy.dot(wy);

        const std::size_t nc = N1 - 1, nr = N2 - 1;
        Eigen::VectorXd mean(nc + nr);
        mean.head(nc) = Gx * (Y * wy);
        mean.tail(nr) = Gy * (Y.transpose() * wx);

        Eigen::MatrixXd Sbar(nc + nr, nc + nr);
        Sbar.topLeftCorner(nc, nc) =
            eval_kernel(ky, 0.0) * Kx_oo - beta_y * (Gx * Kx_oe.transpose());
        Sbar.bottomRightCorner(nr, nr) =
            eval_kernel(kx, 0.0) * Ky_oo - beta_x * (Gy * Ky_oe.transpose());
        Sbar.topRightCorner(nc, nr) =
            ux * uy.transpose() - (Gx * vx) * (Gy * vy).transpose();
        Sbar.bottomLeftCorner(nr, nc) = Sbar.topRightCorner(nc, nr).transpose();
        Sbar = 0.5 * (Sbar + Sbar.transpose()).eval();

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sbar);
        double lmax = es.eigenvalues().maxCoeff();
        Eigen::VectorXd sq = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        for (Eigen::Index i = 0; i < sq.size(); ++i)
            if (es.eigenvalues()(i) <= 1e-12 * lmax) sq(i) = 0.0;
        auto e = normal_stream(seed, kBoundaryStream + state.field.scale_level,
                               static_cast<std::size_t>(sq.size()));
        Eigen::VectorXd ev = Eigen::Map<const Eigen::VectorXd>(e.data(), sq.size());
        Eigen::VectorXd b = es.eigenvectors() * sq.asDiagonal() * ev + mean;
        bcol = b.head(nc);
        brow = b.tail(nr);
    }

    auto y1c = [&](std::size_t k, std::size_t l) { return inter.y1.data[k * N2 + l]; };
    auto yc = [&](std::size_t k, std::size_t l) { return state.field.grid.data[k * N2 + l]; };

    // first fine row of the field: coarse samples interleaved with the
    // sampled boundary values
    std::vector<double> y0(T);
    for (std::size_t t = 0; t < T; ++t)
        y0[t] = t % 2 == 0 ? yc(0, t / 2) : brow((t - 1) / 2);

    // dim-0 intermediate across the whole fine grid; the s = 0 seeds invert
    // the dim-1 recursion along the (now fully known) first fine row
    Grid y1f(fshape);
    y1f.data[0] = y1c(0, 0);
    for (std::size_t t = 1; t < T; ++t) y1f.data[t] = (y0[t] - C * y0[t - 1]) / D;

    // the reconstructed noise at s = 1 assumed the coarse-derived s = 0
    // bases; shift it so the recursion still lands on the s = 2 targets
    if (S > 1) {
        for (std::size_t t = 0; t < T; ++t) {
            double base_pure;
            if (t % 2 == 0) {
                base_pure = y1c(0, t / 2);
            } else {
                std::size_t l = (t + 1) / 2;
                base_pure = yc(0, l) / (C * D) - (C / D) * yc(0, l - 1) - y1c(0, l) / C;
            }
            w.data[T + t] += (A / B) * (base_pure - y1f.data[t]);
        }
    }
    for (std::size_t s = 1; s < S; ++s)
        for (std::size_t t = 0; t < T; ++t)
            y1f.data[s * T + t] = A * y1f.data[(s - 1) * T + t] + B * w.data[s * T + t];

    // field: boundary column, then the dim-1 recursion (row s = 0 reproduces
    // y0 by construction of its seeds)
    Grid y(fshape);
    for (std::size_t s = 0; s < S; ++s)
        y.data[s * T] = s % 2 == 0 ? yc(s / 2, 0) : bcol((s - 1) / 2);
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t s = 0; s < S; ++s)
            y.data[s * T + t] = C * y.data[s * T + t - 1] + D * y1f.data[s * T + t];

    // swapped-order intermediate seed column for the next level
    std::vector<double> y2_col0(T);
    y2_col0[0] = inter.y2.data[0];
    for (std::size_t t = 1; t < T; ++t) y2_col0[t] = C * y2_col0[t - 1] + D * w.data[t];

    out.field.grid = std::move(y);
    out.field.T = fine_model.T;
    out.field.seed = seed;
    out.field.scale_level = state.field.scale_level + 1;
    out.state.field = out.field;
    out.state.noise.grid = std::move(w);
    out.state.noise.seed = seed;
    out.state.y1_grid = std::move(y1f);
    out.state.y2_col0 = std::move(y2_col0);
    return out;
}

}  // namespace grf
