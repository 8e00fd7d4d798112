#include "coselect/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <boost/math/tools/minima.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "coselect/io.hpp"

namespace coselect {

void Hyperparams::validate() const
{
    if (!(r > 1.0) || !std::isfinite(r)) {
        throw std::invalid_argument(fmt::format("hyperparams: r must be > 1, got {}", r));
    }
    if (!(theta > 0.0)) {
        throw std::invalid_argument("hyperparams: theta must be > 0");
    }
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("hyperparams: alpha must be > 0");
    }
    if (c < 0) {
        throw std::invalid_argument("hyperparams: c must be positive (or 0 for the default)");
    }
    if (k < 1) {
        throw std::invalid_argument("hyperparams: k must be positive");
    }
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("hyperparams: epsilon must be > 0");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("hyperparams: tol must be > 0");
    }
    if (max_iter < 1) {
        throw std::invalid_argument("hyperparams: max_iter must be positive");
    }
    if (inner_sweeps < 1) {
        throw std::invalid_argument("hyperparams: inner_sweeps must be positive");
    }
}

int resolve_projection_dim(const Hyperparams& hp, const ViewSet& views, std::optional<int> num_classes)
{
    const auto dims = views.view_dims();
    const auto min_dim = *std::min_element(dims.begin(), dims.end());
    const auto cap = static_cast<int>(std::min(min_dim, views.num_instances()));
    int c = hp.c;
    if (c == 0) {
        if (num_classes && *num_classes > 0) {
            c = *num_classes;
        } else {
            const double root_n = std::sqrt(static_cast<double>(views.num_instances()));
            c = static_cast<int>(std::ceil(std::min(root_n, static_cast<double>(min_dim))));
        }
    }
    return std::clamp(c, 1, cap);
}

Variant parse_variant(const std::string& name)
{
    if (name == "full") {
        return Variant::Full;
    }
    if (name == "no-graph" || name == "I") {
        return Variant::NoGraph;
    }
    if (name == "no-consensus" || name == "II") {
        return Variant::NoConsensus;
    }
    throw std::invalid_argument("unknown variant: " + name);
}

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::Full: return "full";
    case Variant::NoGraph: return "no-graph";
    case Variant::NoConsensus: return "no-consensus";
    }
    return "full";
}

ViewWeights ViewWeights::uniform(std::size_t views)
{
    const auto v = static_cast<Eigen::Index>(views);
    const double w = 1.0 / static_cast<double>(views);
    return {Vector::Constant(v, w), Vector::Constant(v, w), Vector::Constant(v, w)};
}

std::string ConvergenceTrace::to_csv() const
{
    std::string out = "iteration,total,reconstruction,w_penalty,bv_penalty,b_penalty,diversity,specific_graph,"
                      "graph_fitting,relative_change,orthogonality_gap\n";
    for (const auto& rec : records) {
        const auto& t = rec.terms;
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", rec.iteration, io::format_number(t.total),
                           io::format_number(t.reconstruction), io::format_number(t.w_penalty),
                           io::format_number(t.bv_penalty), io::format_number(t.b_penalty),
                           io::format_number(t.diversity), io::format_number(t.specific_graph),
                           io::format_number(t.graph_fitting), io::format_number(rec.relative_change),
                           io::format_number(rec.orthogonality_gap));
    }
    return out;
}

double l21_norm(const Matrix& m)
{
    return m.rowwise().norm().sum();
}

Vector row_weight_diag(const Matrix& m, double eps)
{
    return (2.0 * m.rowwise().norm().array() + eps).inverse().matrix();
}

Matrix smallest_eigenvectors(const Matrix& h, int c)
{
    if (c < 1 || c > h.rows()) {
        throw std::invalid_argument(fmt::format("smallest_eigenvectors: c={} out of range for n={}", c, h.rows()));
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    if (eig.info() != Eigen::Success) {
        throw std::runtime_error("smallest_eigenvectors: eigendecomposition failed");
    }
    // eigenvalues come back ascending
    Matrix y = eig.eigenvectors().leftCols(c);
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
        Eigen::Index idx = 0;
        y.col(j).cwiseAbs().maxCoeff(&idx);
        if (y(idx, j) < 0.0) {
            y.col(j) = -y.col(j);
        }
    }
    return y;
}

namespace {

Matrix spd_solve(const Matrix& lhs, const Matrix& rhs)
{
    const Eigen::LLT<Matrix> llt(lhs);
    if (llt.info() == Eigen::Success) {
        return llt.solve(rhs);
    }
    return lhs.partialPivLu().solve(rhs);
}

Matrix identity_minus(const Matrix& b, const Matrix& b_view)
{
    Matrix m = -b - b_view;
    m.diagonal().array() += 1.0;
    return m;
}

} // namespace

Matrix solve_w(const Matrix& x, const Matrix& y, double lambda_r, const Vector& d_v1, WPath path)
{
    if (d_v1.size() != x.rows()) {
        throw std::invalid_argument("solve_w: reweighting diagonal must have d_v entries");
    }
    if (path == WPath::Auto) {
        path = x.rows() > x.cols() ? WPath::Woodbury : WPath::Direct;
    }
    const Matrix xy = x * y;
    if (path == WPath::Direct) {
        Matrix lhs = x * x.transpose();
        lhs.diagonal() += lambda_r * d_v1;
        return spd_solve(lhs, xy);
    }
    // (X X^T + lr D)^-1 = lr^-1 [D^-1 - lr^-1 D^-1 X (I + lr^-1 X^T D^-1 X)^-1 X^T D^-1]
    const double inv_lr = 1.0 / lambda_r;
    const Vector d_inv = d_v1.cwiseInverse();
    const Matrix t = d_inv.asDiagonal() * xy;
    Matrix o_inv = inv_lr * (x.transpose() * d_inv.asDiagonal() * x);
    o_inv.diagonal().array() += 1.0;
    const Matrix z = spd_solve(o_inv, x.transpose() * t);
    return inv_lr * (t - inv_lr * (d_inv.asDiagonal() * (x * z)));
}

Matrix update_w(const Matrix& x, const Matrix& b, const Matrix& b_view, double lambda, double r, int c,
                const Vector& d_v1, double eps, WPath path)
{
    const auto n = x.cols();
    if (b.rows() != n || b.cols() != n || b_view.rows() != n || b_view.cols() != n) {
        throw std::invalid_argument("update_w: representation matrices must be n x n");
    }
    if (c < 1 || c > std::min(x.rows(), n)) {
        throw std::invalid_argument(fmt::format("update_w: c={} must lie in [1, min(d_v, n)]", c));
    }
    const Matrix m = identity_minus(b, b_view);
    const Matrix y = smallest_eigenvectors(m * m.transpose(), c);
    return solve_w(x, y, std::pow(std::max(lambda, eps), r), d_v1, path);
}

Matrix whiten_projection(const Matrix& x, const Matrix& w, double floor)
{
    const Matrix p = w.transpose() * x;
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(p * p.transpose());
    const Vector& mu = eig.eigenvalues();
    const double cutoff = floor * std::max(mu.maxCoeff(), 0.0);
    Vector scale(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        scale(i) = mu(i) > cutoff && mu(i) > 0.0 ? 1.0 / std::sqrt(mu(i)) : 0.0;
    }
    return w * (eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose());
}

Matrix align_rotation(const Matrix& w, const Matrix& target)
{
    const Eigen::JacobiSVD<Matrix> svd(w.transpose() * target, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return w * (svd.matrixU() * svd.matrixV().transpose());
}

Matrix projected_gram(const Matrix& x, const Matrix& w)
{
    const Matrix p = w.transpose() * x; // c x n
    return p.transpose() * p;
}

Matrix update_b(std::span<const Matrix> xs, std::span<const Matrix> ws, std::span<const Matrix> b_views,
                const Matrix& l_sbar, double alpha, double theta, const Vector& d_b)
{
    if (xs.size() != ws.size() || xs.size() != b_views.size() || xs.empty()) {
        throw std::invalid_argument("update_b: one W and B^(v) per view required");
    }
    const auto n = xs.front().cols();
    Matrix lhs = alpha * l_sbar;
    lhs.diagonal() += theta * d_b;
    Matrix rhs = Matrix::Zero(n, n);
    for (std::size_t v = 0; v < xs.size(); ++v) {
        const Matrix k = projected_gram(xs[v], ws[v]);
        lhs += k;
        rhs += k - k * b_views[v];
    }
    return spd_solve(lhs, rhs);
}

Matrix update_b_view(const Matrix& x, const Matrix& w, const Matrix& b, const Matrix& l_sv, double alpha, double eta,
                     double r, const Vector& d_v2, double eps)
{
    const Matrix k = projected_gram(x, w);
    Matrix lhs = k + alpha * l_sv;
    lhs.diagonal() += std::pow(std::max(eta, eps), r) * d_v2;
    const Matrix rhs = k - k * b;
    return spd_solve(lhs, rhs);
}

Vector adaptive_weights(const Vector& norms, double r, double eps)
{
    if (!(r > 1.0)) {
        throw std::invalid_argument("adaptive_weights: r must be > 1");
    }
    // log-domain so tiny norms with r near 1 cannot overflow
    Vector logw = norms.unaryExpr([&](double x) { return std::log(std::max(x, eps)) / (1.0 - r); });
    logw.array() -= logw.maxCoeff();
    Vector w = logw.array().exp().matrix();
    return w / w.sum();
}

ViewWeights update_weights(std::span<const Matrix> ws, std::span<const Matrix> b_views, const Matrix& s,
                           std::span<const Matrix> view_graphs, double r, double eps)
{
    const auto views = static_cast<Eigen::Index>(ws.size());
    Vector w_norms(views);
    Vector b_norms(views);
    Vector s_norms(views);
    for (Eigen::Index v = 0; v < views; ++v) {
        const auto i = static_cast<std::size_t>(v);
        w_norms(v) = l21_norm(ws[i]);
        b_norms(v) = l21_norm(b_views[i]);
        s_norms(v) = (s - view_graphs[i]).squaredNorm();
    }
    return {adaptive_weights(w_norms, r, eps), adaptive_weights(b_norms, r, eps), adaptive_weights(s_norms, r, eps)};
}

namespace {

double weighted_pair_sum(const Matrix& rows, const Matrix& weights)
{
    return (pairwise_row_sq_dists(rows).array() * weights.array()).sum();
}

} // namespace

ObjectiveTerms objective(const ModelState& state, const ViewSet& views, const Hyperparams& hp)
{
    ObjectiveTerms t;
    const auto n = views.num_instances();
    const bool graph = state.variant == Variant::Full;
    const bool consensus = state.variant != Variant::NoConsensus;
    const bool view_graph_terms = state.variant != Variant::NoGraph;
    const double r = hp.r;
    for (std::size_t v = 0; v < views.num_views(); ++v) {
        const auto iv = static_cast<Eigen::Index>(v);
        const Matrix& x = views.view(v);
        Matrix m = -state.b_views[v];
        if (consensus) {
            m -= state.b;
        }
        m.diagonal().array() += 1.0;
        t.reconstruction += (state.w[v].transpose() * x * m).squaredNorm();
        t.w_penalty += std::pow(state.weights.lambda(iv), r) * l21_norm(state.w[v]);
        t.bv_penalty += std::pow(state.weights.eta(iv), r) * l21_norm(state.b_views[v]);
        if (view_graph_terms) {
            t.specific_graph += 0.5 * hp.alpha * weighted_pair_sum(state.b_views[v], state.view_graphs[v]);
        }
        if (graph) {
            t.graph_fitting += std::pow(state.weights.gamma(iv), r) * (state.s - state.view_graphs[v]).squaredNorm();
        }
    }
    if (consensus) {
        t.b_penalty = hp.theta * l21_norm(state.b);
    }
    if (graph) {
        const Matrix complement = Matrix::Ones(n, n) - state.s;
        t.diversity = 0.5 * hp.alpha * weighted_pair_sum(state.b, complement);
    }
    t.total = t.reconstruction + t.w_penalty + t.bv_penalty + t.b_penalty + t.diversity + t.specific_graph +
              t.graph_fitting;
    return t;
}

namespace {

double w_block_objective(const Matrix& xm, const Matrix& w, double lambda_r)
{
    return (w.transpose() * xm).squaredNorm() + lambda_r * l21_norm(w);
}

/// Best point of W(t) = whiten(w0 + t (w1 - w0)), t in [0, 1], never worse
/// than w0 on ||W^T X M||^2 + lr ||W||_21.
Matrix guarded_w_step(const Matrix& x, const Matrix& m, const Matrix& w0, const Matrix& w1, double lambda_r)
{
    const Matrix xm = x * m;
    const Matrix delta = w1 - w0;
    auto point = [&](double t) { return whiten_projection(x, w0 + t * delta); };
    auto g = [&](double t) { return w_block_objective(xm, point(t), lambda_r); };
    const double g0 = w_block_objective(xm, w0, lambda_r);
    if (g(1.0) <= g0) {
        return point(1.0);
    }
    const auto [t_best, g_best] = boost::math::tools::brent_find_minima(g, 0.0, 1.0, 30);
    return g_best < g0 ? point(t_best) : w0;
}

double orthogonality_gap(const ViewSet& views, const std::vector<Matrix>& ws)
{
    double gap = 0.0;
    for (std::size_t v = 0; v < ws.size(); ++v) {
        const Matrix p = ws[v].transpose() * views.view(v);
        Matrix g = p * p.transpose();
        g.diagonal().array() -= 1.0;
        gap = std::max(gap, g.norm());
    }
    return gap;
}

/// Pushes (W, B, B^(v)) further along the direction of the last cycle,
/// doubling the step while the objective keeps dropping. S and the weights
/// stay put; W is re-whitened so the projection constraint still holds.
/// Returns the accepted objective, never above `current`.
ObjectiveTerms extrapolate_cycle(ModelState& st, const ModelState& before, const ViewSet& views,
                                 const Hyperparams& hp, const ObjectiveTerms& current, int max_doublings)
{
    std::vector<Matrix> aligned;
    for (std::size_t v = 0; v < st.w.size(); ++v) {
        aligned.push_back(align_rotation(st.w[v], before.w[v]));
    }
    ModelState trial = st;
    ModelState best = st;
    ObjectiveTerms best_terms = current;
    double step = 1.0;
    for (int i = 0; i < max_doublings; ++i) {
        step *= 2.0;
        for (std::size_t v = 0; v < st.w.size(); ++v) {
            trial.w[v] = whiten_projection(views.view(v), before.w[v] + step * (aligned[v] - before.w[v]));
            trial.b_views[v] = before.b_views[v] + step * (st.b_views[v] - before.b_views[v]);
        }
        trial.b = before.b + step * (st.b - before.b);
        const auto terms = objective(trial, views, hp);
        if (!(terms.total < best_terms.total)) {
            break;
        }
        best = trial;
        best_terms = terms;
    }
    if (best_terms.total < current.total) {
        spdlog::trace("extrapolated: {:.10g} -> {:.10g}", current.total, best_terms.total);
    }
    st = std::move(best);
    return best_terms;
}

} // namespace

FitResult fit_variant(const ViewSet& views, const Hyperparams& hp_in, Variant variant)
{
    hp_in.validate();
    Hyperparams hp = hp_in;
    hp.c = resolve_projection_dim(hp, views);
    if (hp_in.c > 0 && hp.c != hp_in.c) {
        throw std::invalid_argument(fmt::format("projection dimension c={} exceeds min(d_v, n)={}", hp_in.c, hp.c));
    }
    const auto n = views.num_instances();
    const auto nv = views.num_views();
    if (hp.k >= n) {
        throw std::invalid_argument(fmt::format("graph neighbours k={} must be < n={}", hp.k, n));
    }
    const bool graph = variant == Variant::Full;
    const bool consensus = variant != Variant::NoConsensus;
    const double alpha_views = variant == Variant::NoGraph ? 0.0 : hp.alpha;
    const double eps = hp.epsilon;

    FitResult result;
    auto& st = result.state;
    st.variant = variant;
    st.weights = ViewWeights::uniform(nv);

    std::vector<Matrix> view_laplacians;
    st.s = Matrix::Zero(n, n);
    for (std::size_t v = 0; v < nv; ++v) {
        st.view_graphs.push_back(knn_graph(views.view(v), hp.k).weights);
        view_laplacians.push_back(laplacian(st.view_graphs.back()));
        st.s += st.view_graphs.back() / static_cast<double>(nv);
    }

    std::mt19937_64 rng(hp.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0 / static_cast<double>(n));
    auto random_square = [&] {
        Matrix m(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                m(i, j) = unif(rng);
            }
        }
        return m;
    };
    st.b = consensus ? random_square() : Matrix::Zero(n, n);
    for (std::size_t v = 0; v < nv; ++v) {
        st.b_views.push_back(random_square());
    }
    st.w.resize(nv);

    double previous = std::numeric_limits<double>::quiet_NaN();
    for (int iter = 1; iter <= hp.max_iter; ++iter) {
        const ModelState before = st;  // extrapolation anchor
        for (std::size_t v = 0; v < nv; ++v) {
            const auto iv = static_cast<Eigen::Index>(v);
            const Matrix& x = views.view(v);
            const bool first = iter == 1;
            const Vector d_v1 = first ? Vector::Ones(x.rows()) : row_weight_diag(st.w[v], eps);
            Matrix candidate = update_w(x, st.b, st.b_views[v], st.weights.lambda(iv), hp.r, hp.c, d_v1, eps);
            if (hp.w_step == WStep::Guarded) {
                candidate = whiten_projection(x, candidate);
                if (!first) {
                    const Matrix m = identity_minus(st.b, st.b_views[v]);
                    const double lambda_r = std::pow(std::max(st.weights.lambda(iv), eps), hp.r);
                    candidate = guarded_w_step(x, m, st.w[v], align_rotation(candidate, st.w[v]), lambda_r);
                }
            }
            st.w[v] = std::move(candidate);
        }

        if (consensus) {
            const Matrix l_sbar = graph ? complement_laplacian(st.s) : Matrix::Zero(n, n);
            for (int sweep = 0; sweep < hp.inner_sweeps; ++sweep) {
                st.b = update_b(views.views(), st.w, st.b_views, l_sbar, graph ? hp.alpha : 0.0, hp.theta,
                                row_weight_diag(st.b, eps));
            }
        }

        for (std::size_t v = 0; v < nv; ++v) {
            const auto iv = static_cast<Eigen::Index>(v);
            for (int sweep = 0; sweep < hp.inner_sweeps; ++sweep) {
                st.b_views[v] = update_b_view(views.view(v), st.w[v], st.b, view_laplacians[v], alpha_views,
                                              st.weights.eta(iv), hp.r, row_weight_diag(st.b_views[v], eps), eps);
            }
        }

        if (graph) {
            st.s = update_consensus_graph(st.view_graphs, st.b, hp.alpha, st.weights.gamma, hp.r, eps,
                                          hp.consensus_weighting)
                       .weights;
        }

        const auto updated = update_weights(st.w, st.b_views, st.s, st.view_graphs, hp.r, eps);
        st.weights.lambda = updated.lambda;
        st.weights.eta = updated.eta;
        if (graph) {
            st.weights.gamma = updated.gamma;
        }

        TraceRecord rec;
        rec.iteration = iter;
        rec.terms = objective(st, views, hp);
        if (hp.extrapolate && hp.w_step == WStep::Guarded && iter > 1) {
            rec.terms = extrapolate_cycle(st, before, views, hp, rec.terms, 8);
        }
        rec.orthogonality_gap = orthogonality_gap(views, st.w);
        rec.relative_change = std::isnan(previous)
                                  ? std::numeric_limits<double>::infinity()
                                  : std::abs(rec.terms.total - previous) / std::max(std::abs(previous), eps);
        result.trace.records.push_back(rec);
        spdlog::debug("iter {:3d}  objective {:.10g}  rel-change {:.3e}", iter, rec.terms.total, rec.relative_change);

        if (!std::isfinite(rec.terms.total)) {
            throw std::runtime_error(fmt::format("objective became non-finite at iteration {}; trace so far:\n{}",
                                                 iter, result.trace.to_csv()));
        }
        previous = rec.terms.total;
        if (iter > 1 && rec.relative_change < hp.tol) {
            result.trace.converged = true;
            break;
        }
    }
    return result;
}

FitResult fit_variant(const MultiViewDataset& ds, const Hyperparams& hp, Variant variant)
{
    return fit_variant(ds.unlabeled(), hp, variant);
}

FitResult fit(const ViewSet& views, const Hyperparams& hp)
{
    return fit_variant(views, hp, Variant::Full);
}

FitResult fit(const MultiViewDataset& ds, const Hyperparams& hp)
{
    return fit_variant(ds.unlabeled(), hp, Variant::Full);
}

} // namespace coselect
