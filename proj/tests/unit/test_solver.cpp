#include <doctest.h>

#include "coselect/solver.hpp"
#include "support.hpp"

using namespace coselect;
namespace ts = testing_support;

namespace {

struct RandomProblem {
    ViewSet views;
    ModelState state;
    Hyperparams hp;
};

RandomProblem random_problem(ts::Rng& rng, Eigen::Index n, std::vector<Eigen::Index> dims, int c, Variant variant)
{
    RandomProblem p;
    std::vector<Matrix> xs;
    for (auto d : dims) {
        xs.push_back(ts::normal_matrix(rng, d, n));
    }
    p.views = ViewSet(xs);
    p.hp.c = c;
    p.hp.alpha = 0.37;
    p.hp.theta = 0.8;
    p.state.variant = variant;
    p.state.b = variant == Variant::NoConsensus ? Matrix::Zero(n, n) : ts::normal_matrix(rng, n, n, 0.2);
    p.state.s = ts::random_affinity(rng, n);
    const auto nv = static_cast<Eigen::Index>(dims.size());
    p.state.weights = {ts::uniform_vector(rng, nv, 0.1, 1.0), ts::uniform_vector(rng, nv, 0.1, 1.0),
                       ts::uniform_vector(rng, nv, 0.1, 1.0)};
    for (auto d : dims) {
        p.state.w.push_back(ts::normal_matrix(rng, d, c));
        p.state.b_views.push_back(ts::normal_matrix(rng, n, n, 0.2));
        p.state.view_graphs.push_back(ts::random_affinity(rng, n));
    }
    return p;
}

/// Term-by-term evaluation with explicit loops only.
double naive_objective(const RandomProblem& p)
{
    const auto& st = p.state;
    const auto n = p.views.num_instances();
    const double r = p.hp.r;
    const bool graph = st.variant == Variant::Full;
    const bool consensus = st.variant != Variant::NoConsensus;
    double total = 0.0;
    for (std::size_t v = 0; v < p.views.num_views(); ++v) {
        const auto iv = static_cast<Eigen::Index>(v);
        const Matrix& x = p.views.view(v);
        const Matrix& w = st.w[v];
        // W^T X (I - B - B^(v)), entry by entry
        for (Eigen::Index a = 0; a < w.cols(); ++a) {
            for (Eigen::Index j = 0; j < n; ++j) {
                double e = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    double proj = 0.0;
                    for (Eigen::Index f = 0; f < x.rows(); ++f) {
                        proj += w(f, a) * x(f, i);
                    }
                    const double m = (i == j ? 1.0 : 0.0) - (consensus ? st.b(i, j) : 0.0) - st.b_views[v](i, j);
                    e += proj * m;
                }
                total += e * e;
            }
        }
        total += std::pow(st.weights.lambda(iv), r) * ts::naive_l21(w);
        total += std::pow(st.weights.eta(iv), r) * ts::naive_l21(st.b_views[v]);
        if (st.variant != Variant::NoGraph) {
            total += 0.5 * p.hp.alpha * ts::naive_pair_sum(st.b_views[v], st.view_graphs[v]);
        }
        if (graph) {
            double fit = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < n; ++j) {
                    const double d = st.s(i, j) - st.view_graphs[v](i, j);
                    fit += d * d;
                }
            }
            total += std::pow(st.weights.gamma(iv), r) * fit;
        }
    }
    if (consensus) {
        total += p.hp.theta * ts::naive_l21(st.b);
    }
    if (graph) {
        Matrix comp(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                comp(i, j) = 1.0 - st.s(i, j);
            }
        }
        total += 0.5 * p.hp.alpha * ts::naive_pair_sum(st.b, comp);
    }
    return total;
}

SynthesisSpec small_spec(std::uint64_t seed)
{
    return {.n = 30, .view_dims = {8, 12}, .classes = 3, .noise = 0.5, .seed = seed};
}

} // namespace

TEST_SUITE("solver")
{
    TEST_CASE("hyperparameter validation")
    {
        Hyperparams hp;
        CHECK_NOTHROW(hp.validate());
        auto bad = [](auto mutate) {
            Hyperparams h;
            mutate(h);
            return h;
        };
        CHECK_THROWS(bad([](Hyperparams& h) { h.r = 1.0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.theta = 0.0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.alpha = -1.0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.k = 0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.epsilon = 0.0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.tol = 0.0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.max_iter = 0; }).validate());
        CHECK_THROWS(bad([](Hyperparams& h) { h.inner_sweeps = 0; }).validate());
    }

    TEST_CASE("projection dimension defaults")
    {
        const ViewSet views({Matrix::Ones(7, 50), Matrix::Ones(20, 50)});
        Hyperparams hp;
        CHECK(resolve_projection_dim(hp, views, 4) == 4);
        CHECK(resolve_projection_dim(hp, views) == 7); // ceil(min(sqrt 50, 7))
        hp.c = 3;
        CHECK(resolve_projection_dim(hp, views, 4) == 3);
        hp.c = 99;
        CHECK(resolve_projection_dim(hp, views) == 7);
    }

    TEST_CASE("variant names")
    {
        CHECK(parse_variant("full") == Variant::Full);
        CHECK(parse_variant("I") == Variant::NoGraph);
        CHECK(parse_variant("no-consensus") == Variant::NoConsensus);
        CHECK(parse_variant(to_string(Variant::NoGraph)) == Variant::NoGraph);
        CHECK_THROWS(parse_variant("both"));
    }

    TEST_CASE("l21 norm and reweighting diagonal")
    {
        Matrix m(3, 2);
        m << 3, 4, 0, 0, 1, 0;
        CHECK(l21_norm(m) == doctest::Approx(6.0));
        const Vector d = row_weight_diag(m, 1e-8);
        CHECK(d(0) == doctest::Approx(1.0 / (10.0 + 1e-8)));
        CHECK(d(1) == doctest::Approx(1e8));
        CHECK(d.allFinite());
    }

    TEST_CASE("smallest eigenvectors span the bottom of the spectrum")
    {
        ts::Rng rng(2);
        const Matrix a = ts::normal_matrix(rng, 9, 9);
        const Matrix h = a * a.transpose();
        const Matrix y = smallest_eigenvectors(h, 3);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
        CHECK(ts::max_abs(y.transpose() * y - Matrix::Identity(3, 3)) < 1e-10);
        CHECK((y.transpose() * h * y).trace() == doctest::Approx(eig.eigenvalues().head(3).sum()).epsilon(1e-10));
        for (Eigen::Index j = 0; j < 3; ++j) {
            Eigen::Index idx = 0;
            y.col(j).cwiseAbs().maxCoeff(&idx);
            CHECK(y(idx, j) > 0.0);
        }
        CHECK_THROWS(smallest_eigenvectors(h, 0));
        CHECK_THROWS(smallest_eigenvectors(h, 10));
    }

    TEST_CASE("direct and woodbury W agree with the explicit inverse")
    {
        ts::Rng rng(4);
        for (int trial = 0; trial < 20; ++trial) {
            const auto n = ts::uniform_int(rng, 4, 15);
            const auto d = trial % 2 ? n + ts::uniform_int(rng, 1, 10) : ts::uniform_int(rng, 2, static_cast<int>(n));
            const int c = ts::uniform_int(rng, 1, static_cast<int>(std::min<Eigen::Index>(d, n)));
            const Matrix x = ts::normal_matrix(rng, d, n);
            const Matrix y = ts::normal_matrix(rng, n, c);
            const Vector dd = ts::uniform_vector(rng, d, 0.1, 5.0);
            const double lr = 0.3;
            Matrix lhs = x * x.transpose();
            lhs.diagonal() += lr * dd;
            const Matrix expected = lhs.inverse() * x * y;
            const Matrix direct = solve_w(x, y, lr, dd, WPath::Direct);
            const Matrix wood = solve_w(x, y, lr, dd, WPath::Woodbury);
            CHECK(ts::max_abs(direct - expected) / ts::max_abs(expected) < 1e-8);
            CHECK(ts::max_abs(wood - expected) / ts::max_abs(expected) < 1e-8);
        }
    }

    TEST_CASE("update_w checks shapes")
    {
        const Matrix x = Matrix::Identity(4, 6);
        CHECK_THROWS(update_w(x, Matrix::Zero(5, 5), Matrix::Zero(6, 6), 0.5, 2.0, 2, Vector::Ones(4), 1e-8));
        CHECK_THROWS(update_w(x, Matrix::Zero(6, 6), Matrix::Zero(6, 6), 0.5, 2.0, 5, Vector::Ones(4), 1e-8));
    }

    TEST_CASE("whitening puts W on the projection constraint; rotation keeps row norms")
    {
        ts::Rng rng(6);
        const Matrix x = ts::normal_matrix(rng, 7, 12);
        const Matrix w = whiten_projection(x, ts::normal_matrix(rng, 7, 3));
        const Matrix p = w.transpose() * x;
        CHECK(ts::max_abs(p * p.transpose() - Matrix::Identity(3, 3)) < 1e-10);

        const Matrix q = Eigen::HouseholderQR<Matrix>(ts::normal_matrix(rng, 3, 3)).householderQ();
        const Matrix rotated = w * q;
        const Matrix back = align_rotation(rotated, w);
        CHECK(ts::max_abs(back - w) < 1e-10);
        CHECK(ts::max_abs(rotated.rowwise().norm() - w.rowwise().norm()) < 1e-12);
    }

    TEST_CASE("update_b satisfies its stationarity equation")
    {
        ts::Rng rng(8);
        for (int trial = 0; trial < 25; ++trial) {
            const auto n = ts::uniform_int(rng, 3, 15);
            const auto views = static_cast<std::size_t>(ts::uniform_int(rng, 1, 3));
            std::vector<Matrix> xs, ws, bvs;
            for (std::size_t v = 0; v < views; ++v) {
                const auto d = ts::uniform_int(rng, 2, 20);
                xs.push_back(ts::normal_matrix(rng, d, n));
                ws.push_back(ts::normal_matrix(rng, d, 2));
                bvs.push_back(ts::normal_matrix(rng, n, n, 0.3));
            }
            const Matrix l = laplacian(ts::random_affinity(rng, n));
            const Vector db = ts::uniform_vector(rng, n, 0.1, 3.0);
            const double alpha = 0.2, theta = 0.7;
            const Matrix b = update_b(xs, ws, bvs, l, alpha, theta, db);
            Matrix residual = alpha * l * b + theta * db.asDiagonal() * b;
            for (std::size_t v = 0; v < views; ++v) {
                const Matrix k = xs[v].transpose() * ws[v] * ws[v].transpose() * xs[v];
                residual += k * (b + bvs[v] - Matrix::Identity(n, n));
            }
            CHECK(ts::max_abs(residual) < 1e-8);
        }
    }

    TEST_CASE("update_b_view satisfies its stationarity equation")
    {
        ts::Rng rng(10);
        for (int trial = 0; trial < 25; ++trial) {
            const auto n = ts::uniform_int(rng, 3, 15);
            const auto d = ts::uniform_int(rng, 2, 20);
            const Matrix x = ts::normal_matrix(rng, d, n);
            const Matrix w = ts::normal_matrix(rng, d, 2);
            const Matrix b = ts::normal_matrix(rng, n, n, 0.3);
            const Matrix l = laplacian(ts::random_affinity(rng, n));
            const Vector dv = ts::uniform_vector(rng, n, 0.1, 3.0);
            const double alpha = 0.2, eta = 0.6, r = 2.0;
            const Matrix bv = update_b_view(x, w, b, l, alpha, eta, r, dv, 1e-8);
            const Matrix k = x.transpose() * w * w.transpose() * x;
            const Matrix residual =
                k * (b + bv - Matrix::Identity(n, n)) + alpha * l * bv + std::pow(eta, r) * dv.asDiagonal() * bv;
            CHECK(ts::max_abs(residual) < 1e-8);
        }
    }

    TEST_CASE("adaptive weights: worked examples")
    {
        Vector norms(2);
        norms << 1.0, 2.0;
        const Vector eta = adaptive_weights(norms, 2.0, 1e-8);
        CHECK(eta(0) == doctest::Approx(2.0 / 3.0));
        CHECK(eta(1) == doctest::Approx(1.0 / 3.0));
        const Vector eq = adaptive_weights(Vector::Constant(2, 3.5), 3.0, 1e-8);
        CHECK(eq(0) == doctest::Approx(0.5));
        const Vector zeros = adaptive_weights(Vector::Zero(4), 2.0, 1e-8);
        CHECK(ts::max_abs(zeros.array() - 0.25) < 1e-15);
        CHECK_THROWS(adaptive_weights(norms, 1.0, 1e-8));
    }

    TEST_CASE("adaptive weights stay finite at extreme scales")
    {
        Vector norms(3);
        norms << 1e-300, 1.0, 1e300;
        for (double r : {1.0001, 2.0, 8.0}) {
            const Vector w = adaptive_weights(norms, r, 1e-8);
            CHECK(w.allFinite());
            CHECK(w.sum() == doctest::Approx(1.0));
            CHECK(w(0) >= w(1));
            CHECK(w(1) >= w(2));
        }
    }

    TEST_CASE("adaptive weights beat random simplex points")
    {
        ts::Rng rng(12);
        for (int trial = 0; trial < 20; ++trial) {
            const auto v = ts::uniform_int(rng, 2, 5);
            const double r = ts::uniform_int(rng, 2, 4);
            const Vector norms = ts::uniform_vector(rng, v, 0.01, 10.0);
            auto f = [&](const Vector& w) { return (w.array().pow(r) * norms.array()).sum(); };
            const double best = f(adaptive_weights(norms, r, 1e-12));
            std::exponential_distribution<double> e(1.0);
            for (int probe = 0; probe < 500; ++probe) {
                Vector w(v);
                for (Eigen::Index i = 0; i < v; ++i) {
                    w(i) = e(rng);
                }
                w /= w.sum();
                CHECK(f(w) >= best * (1.0 - 1e-12));
            }
        }
    }

    TEST_CASE("objective matches the naive evaluator for every variant")
    {
        ts::Rng rng(14);
        for (auto variant : {Variant::Full, Variant::NoGraph, Variant::NoConsensus}) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto p = random_problem(rng, ts::uniform_int(rng, 3, 9), {4, 6}, 2, variant);
                const auto t = objective(p.state, p.views, p.hp);
                CHECK(ts::rel_diff(t.total, naive_objective(p)) < 1e-10);
                const double parts = t.reconstruction + t.w_penalty + t.bv_penalty + t.b_penalty + t.diversity +
                                     t.specific_graph + t.graph_fitting;
                CHECK(ts::rel_diff(parts, t.total) < 1e-12);
                if (variant == Variant::NoGraph) {
                    CHECK(t.diversity == 0.0);
                    CHECK(t.specific_graph == 0.0);
                    CHECK(t.graph_fitting == 0.0);
                }
                if (variant == Variant::NoConsensus) {
                    CHECK(t.b_penalty == 0.0);
                    CHECK(t.diversity == 0.0);
                    CHECK(t.graph_fitting == 0.0);
                }
            }
        }
    }

    TEST_CASE("objective of an all-zero state is graph fitting plus diversity")
    {
        ts::Rng rng(16);
        auto p = random_problem(rng, 6, {3, 5}, 2, Variant::Full);
        p.state.b.setZero();
        for (auto& m : p.state.b_views) {
            m.setZero();
        }
        for (auto& m : p.state.w) {
            m.setZero();
        }
        const auto t = objective(p.state, p.views, p.hp);
        CHECK(t.reconstruction == 0.0);
        CHECK(t.w_penalty == 0.0);
        CHECK(t.bv_penalty == 0.0);
        CHECK(t.b_penalty == 0.0);
        CHECK(t.diversity == 0.0);
        CHECK(t.total == doctest::Approx(t.graph_fitting));
        CHECK(t.graph_fitting > 0.0);
    }

    TEST_CASE("fit descends monotonically and keeps weights on the simplex")
    {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto ds = normalize_views(synthesize(small_spec(seed)), Normalization::ZScorePerFeature);
            Hyperparams hp;
            hp.seed = seed;
            hp.c = 3;
            hp.max_iter = 40;
            const auto fitted = fit(ds, hp);
            const auto& rec = fitted.trace.records;
            REQUIRE(rec.size() >= 2);
            CHECK(std::isinf(rec.front().relative_change));
            for (std::size_t i = 1; i < rec.size(); ++i) {
                CHECK(rec[i].terms.total <= rec[i - 1].terms.total * (1.0 + 1e-6));
                CHECK(rec[i].orthogonality_gap < 1e-6);
            }
            const auto& w = fitted.state.weights;
            for (const Vector* fam : {&w.lambda, &w.eta, &w.gamma}) {
                CHECK(fam->sum() == doctest::Approx(1.0));
                CHECK(fam->minCoeff() >= 0.0);
            }
            CHECK(fitted.state.b.allFinite());
            CHECK(fitted.state.s.allFinite());
        }
    }

    TEST_CASE("fit is deterministic and fit == fit_variant(full)")
    {
        const auto ds = normalize_views(synthesize(small_spec(4)), Normalization::ZScorePerFeature);
        Hyperparams hp;
        hp.seed = 9;
        hp.c = 3;
        hp.max_iter = 15;
        const auto a = fit(ds, hp);
        const auto b = fit_variant(ds, hp, Variant::Full);
        CHECK(a.trace.to_csv() == b.trace.to_csv());
        CHECK(a.state.b == b.state.b);
        hp.seed = 10;
        CHECK(fit(ds, hp).state.b != a.state.b);
    }

    TEST_CASE("ablation variants have the expected structure")
    {
        const auto ds = normalize_views(synthesize(small_spec(5)), Normalization::ZScorePerFeature);
        Hyperparams hp;
        hp.c = 3;
        hp.max_iter = 15;
        const auto no_graph = fit_variant(ds, hp, Variant::NoGraph);
        for (const auto& rec : no_graph.trace.records) {
            CHECK(rec.terms.diversity == 0.0);
            CHECK(rec.terms.specific_graph == 0.0);
            CHECK(rec.terms.graph_fitting == 0.0);
        }
        const auto no_consensus = fit_variant(ds, hp, Variant::NoConsensus);
        CHECK(no_consensus.state.b.isZero(0.0));
        for (const auto& rec : no_consensus.trace.records) {
            CHECK(rec.terms.b_penalty == 0.0);
            CHECK(rec.terms.diversity == 0.0);
        }
    }

    TEST_CASE("unguarded closed-form W still produces a finite trace")
    {
        const auto ds = normalize_views(synthesize(small_spec(6)), Normalization::ZScorePerFeature);
        Hyperparams hp;
        hp.c = 3;
        hp.max_iter = 10;
        hp.w_step = WStep::ClosedForm;
        const auto fitted = fit(ds, hp);
        for (const auto& rec : fitted.trace.records) {
            CHECK(std::isfinite(rec.terms.total));
        }
    }

    TEST_CASE("collapsed rows never produce non-finite values")
    {
        // duplicate instances drive rows of B and B^(v) towards zero
        Matrix x = Matrix::Zero(3, 12);
        for (Eigen::Index j = 0; j < 12; ++j) {
            x(j % 3, j) = 1.0;
        }
        Hyperparams hp;
        hp.c = 2;
        hp.k = 3;
        hp.max_iter = 25;
        const auto fitted = fit(ViewSet({x, 2.0 * x}), hp);
        CHECK(fitted.state.b.allFinite());
        for (const auto& m : fitted.state.b_views) {
            CHECK(m.allFinite());
        }
        for (const auto& m : fitted.state.w) {
            CHECK(m.allFinite());
        }
    }

    TEST_CASE("fit rejects impossible settings")
    {
        const auto ds = normalize_views(synthesize(small_spec(7)), Normalization::ZScorePerFeature);
        Hyperparams hp;
        hp.c = 50;
        CHECK_THROWS_WITH(fit(ds, hp), doctest::Contains("projection dimension"));
        hp.c = 2;
        hp.k = 30;
        CHECK_THROWS_WITH(fit(ds, hp), doctest::Contains("k=30"));
    }

    TEST_CASE("trace csv has one row per iteration")
    {
        const auto ds = normalize_views(synthesize(small_spec(8)), Normalization::ZScorePerFeature);
        Hyperparams hp;
        hp.c = 3;
        hp.max_iter = 7;
        hp.tol = 1e-300;
        const auto csv = fit(ds, hp).trace.to_csv();
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
        CHECK(csv.rfind("iteration,total,reconstruction", 0) == 0);
    }
}
