#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dfv/errors.hpp"
#include "dfv/gmm.hpp"
#include "dfv/util.hpp"

using namespace dfv;

namespace {

Eigen::MatrixXd gaussian_blob(Rng& rng, int n, const std::vector<double>& mean,
                              const std::vector<double>& sd) {
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(mean.size()));
    for (int i = 0; i < n; ++i)
        for (size_t d = 0; d < mean.size(); ++d)
            X(i, static_cast<Eigen::Index>(d)) = rng.normal(mean[d], sd[d]);
    return X;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

}  // namespace

TEST_CASE("k=1 reduces to the closed-form Gaussian ML fit") {
    Rng rng(71);
    Eigen::MatrixXd X = gaussian_blob(rng, 400, {3.0}, {2.0});
    GmmConfig config;
    config.seed = 1;
    GmmModel m = fit_gmm(X, 1, config);

    double mean = X.col(0).mean();
    double var = (X.col(0).array() - mean).square().sum() / 400.0;  // ML (biased)
    REQUIRE(m.n_components == 1);
    CHECK(m.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.means[0](0) == doctest::Approx(mean).epsilon(1e-9));
    REQUIRE(m.covariance_kind == CovarianceKind::full);  // automatic, d <= 3
    CHECK(m.full_covs[0](0, 0) == doctest::Approx(var).epsilon(1e-9));

    double closed_ll =
        -0.5 * 400.0 * (std::log(2.0 * std::numbers::pi * var) + 1.0);
    REQUIRE(!m.ll_history.empty());
    CHECK(m.ll_history.back() == doctest::Approx(closed_ll).epsilon(1e-9));
}

TEST_CASE("two well-separated clusters are recovered") {
    Rng rng(72);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 300, {-5.0, 0.0}, {0.3, 0.3}),
                               gaussian_blob(rng, 300, {5.0, 1.0}, {0.3, 0.3}));
    GmmConfig config;
    config.seed = 2;
    GmmModel m = fit_gmm(X, 2, config);
    REQUIRE(m.n_components == 2);

    int lo = m.means[0](0) < m.means[1](0) ? 0 : 1;
    CHECK(m.means[static_cast<size_t>(lo)](0) == doctest::Approx(-5.0).epsilon(0.2 / 5.0));
    CHECK(m.means[static_cast<size_t>(1 - lo)](0) == doctest::Approx(5.0).epsilon(0.2 / 5.0));
    CHECK(m.weights[0] == doctest::Approx(0.5).epsilon(0.1));
    CHECK(m.weights[0] + m.weights[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("EM likelihood is monotone over 20 seeded datasets") {
    for (uint64_t s = 0; s < 20; ++s) {
        Rng rng(1000 + s);
        Eigen::MatrixXd X = vstack(gaussian_blob(rng, 60, {0.0, 0.0}, {1.0, 2.0}),
                                   gaussian_blob(rng, 60, {3.0, -1.0}, {0.5, 1.0}));
        GmmConfig config;
        config.seed = s;
        GmmModel m = fit_gmm(X, 3, config);  // run_em throws on any LL drop
        REQUIRE(m.ll_history.size() >= 2);
        double prev = m.ll_history.front();
        for (double ll : m.ll_history) {
            CHECK(ll >= prev - 1e-6 * (std::abs(prev) + 1.0));
            prev = std::max(prev, ll);
        }
        CHECK(m.ll_history.back() >= m.ll_history.front());
    }
}

TEST_CASE("log_density of a standard normal at the origin") {
    GmmModel m;
    m.n_components = 1;
    m.dim = 1;
    m.covariance_kind = CovarianceKind::diagonal;
    m.weights = {1.0};
    m.means = {Eigen::VectorXd::Zero(1)};
    m.diag_vars = {Eigen::VectorXd::Ones(1)};
    m.prepare();
    CHECK(log_density(m, Eigen::VectorXd::Zero(1)) ==
          doctest::Approx(-0.9189385332046727).epsilon(1e-12));
    // one sd out: -0.5 - log sqrt(2 pi)
    Eigen::VectorXd x(1);
    x << 1.0;
    CHECK(log_density(m, x) == doctest::Approx(-1.4189385332046727).epsilon(1e-12));
}

TEST_CASE("log_density matches a naive mixture sum") {
    Rng rng(73);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 150, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}),
                               gaussian_blob(rng, 150, {2.0, -1.0, 0.5}, {0.7, 1.2, 0.9}));
    GmmConfig config;
    config.seed = 5;
    config.covariance = CovarianceChoice::diagonal;
    GmmModel m = fit_gmm(X, 2, config);

    for (int i = 0; i < 20; ++i) {
        Eigen::VectorXd x = X.row(i * 7).transpose();
        double acc = 0.0;
        for (int c = 0; c < m.n_components; ++c) {
            double quad = 0.0, logdet = 0.0;
            for (int d = 0; d < 3; ++d) {
                double diff = x(d) - m.means[static_cast<size_t>(c)](d);
                double var = m.diag_vars[static_cast<size_t>(c)](d);
                quad += diff * diff / var;
                logdet += std::log(var);
            }
            double logpdf =
                -0.5 * (3.0 * std::log(2.0 * std::numbers::pi) + logdet + quad);
            acc += m.weights[static_cast<size_t>(c)] * std::exp(logpdf);
        }
        CHECK(log_density(m, x) == doctest::Approx(std::log(acc)).epsilon(1e-10));
    }
}

TEST_CASE("1-dim density integrates to one") {
    Rng rng(74);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 200, {-1.0}, {0.5}),
                               gaussian_blob(rng, 200, {2.0}, {1.0}));
    GmmConfig config;
    config.seed = 6;
    GmmModel m = fit_gmm(X, 2, config);
    double dx = 0.005, integral = 0.0;
    for (double x = -20.0; x <= 20.0; x += dx) {
        Eigen::VectorXd v(1);
        v << x;
        integral += std::exp(log_density(m, v)) * dx;
    }
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("fits are deterministic and row-permutation invariant") {
    Rng rng(75);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 80, {0.0, 0.0}, {1.0, 1.0}),
                               gaussian_blob(rng, 80, {4.0, 4.0}, {1.0, 1.0}));
    GmmConfig config;
    config.seed = 9;

    GmmModel a = fit_gmm(X, 2, config);
    GmmModel b = fit_gmm(X, 2, config);

    std::vector<Eigen::Index> perm(160);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffler(123);
    shuffler.shuffle(perm);
    Eigen::MatrixXd Xp(160, 2);
    for (Eigen::Index i = 0; i < 160; ++i) Xp.row(i) = X.row(perm[static_cast<size_t>(i)]);
    GmmModel c = fit_gmm(Xp, 2, config);

    for (const GmmModel* other : {&b, &c}) {
        REQUIRE(other->n_components == a.n_components);
        for (size_t k = 0; k < a.weights.size(); ++k) {
            CHECK(other->weights[k] == a.weights[k]);  // bitwise
            CHECK((other->means[k] - a.means[k]).cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("k shrinks with a warning when tokens are scarce") {
    Rng rng(76);
    Eigen::MatrixXd X = gaussian_blob(rng, 7, {0.0}, {1.0});
    GmmConfig config;
    config.seed = 3;
    GmmModel m = fit_gmm(X, 16, config);
    CHECK(m.n_components == 1);  // max(1, 7/5) = 1
    CHECK(!m.warnings.empty());
    CHECK_THROWS_AS(fit_gmm(Eigen::MatrixXd(0, 1), 1, config), InsufficientDataError);
}

TEST_CASE("pretest prefers one component for unimodal data") {
    Rng rng(77);
    Eigen::MatrixXd X = gaussian_blob(rng, 150, {0.0, 0.0}, {1.0, 1.0});
    GmmConfig config;
    config.seed = 11;
    PretestReport r = pretest_components(X, {1, 2, 4}, 5, config);
    CHECK(r.chosen_k == 1);
    CHECK(r.grid == std::vector<int>{1, 2, 4});
    CHECK(std::none_of(r.heldout_ll.begin(), r.heldout_ll.end(),
                       [](double v) { return std::isnan(v); }));
}

TEST_CASE("pretest separates a genuinely bimodal sample") {
    Rng rng(78);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 120, {-4.0}, {0.5}),
                               gaussian_blob(rng, 120, {4.0}, {0.5}));
    GmmConfig config;
    config.seed = 12;
    PretestReport r = pretest_components(X, {1, 2, 4}, 5, config);
    CHECK(r.chosen_k >= 2);
}

TEST_CASE("pretest contracts") {
    Rng rng(79);
    Eigen::MatrixXd X = gaussian_blob(rng, 30, {0.0}, {1.0});
    GmmConfig config;
    PretestReport single = pretest_components(X, {3}, 3, config);
    CHECK(single.chosen_k == 3);
    CHECK_THROWS_AS(pretest_components(X, {}, 5, config), ContractError);
    CHECK_THROWS_AS(pretest_components(X, {1, 2}, 1, config), ContractError);
    Eigen::MatrixXd tiny = gaussian_blob(rng, 3, {0.0}, {1.0});
    CHECK_THROWS_AS(pretest_components(tiny, {1}, 5, config), InsufficientDataError);
}

TEST_CASE("model JSON round-trips to identical densities") {
    Rng rng(80);
    Eigen::MatrixXd X = vstack(gaussian_blob(rng, 100, {0.0, 1.0}, {1.0, 0.5}),
                               gaussian_blob(rng, 100, {3.0, -2.0}, {0.8, 1.5}));
    for (CovarianceChoice choice : {CovarianceChoice::diagonal, CovarianceChoice::full}) {
        GmmConfig config;
        config.seed = 13;
        config.covariance = choice;
        GmmModel m = fit_gmm(X, 2, config);
        m.trained_on_family = "LTFD";
        GmmModel back = gmm_from_json(gmm_to_json(m));
        CHECK(back.covariance_kind == m.covariance_kind);
        CHECK(back.trained_on_family == "LTFD");
        for (int i = 0; i < 10; ++i) {
            Eigen::VectorXd x = X.row(i * 17).transpose();
            CHECK(log_density(back, x) == doctest::Approx(log_density(m, x)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(gmm_from_json("{}"), FormatError);
    CHECK_THROWS_AS(gmm_from_json("not json"), FormatError);
    CHECK_THROWS_AS(gmm_from_json(R"({"format": "dfvoice-gmm", "version": 99})"), FormatError);
}

TEST_CASE("degenerate data still yields a usable density") {
    // all points identical: variance floor keeps the model finite
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(40, 2) * 3.0;
    GmmConfig config;
    config.seed = 14;
    GmmModel m = fit_gmm(X, 2, config);
    Eigen::VectorXd x(2);
    x << 3.0, 3.0;
    double ld = log_density(m, x);
    CHECK(std::isfinite(ld));
    Eigen::VectorXd far(2);
    far << 100.0, 100.0;
    CHECK(log_density(m, far) >= kLogDensityFloor);
    CHECK(log_density(m, far) <= ld);
}
