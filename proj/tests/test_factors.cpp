#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include <xvabsde/backward.hpp>
#include <xvabsde/factors.hpp>
#include <xvabsde/paths.hpp>

using namespace xvabsde;

namespace {

MatrixXd random_spd(std::size_t n, unsigned seed) {
    std::srand(seed);
    MatrixXd a = MatrixXd::Random(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    return a * a.transpose() + 0.1 * MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                        static_cast<Eigen::Index>(n));
}

}  // namespace

TEST_CASE("spectral decomposition closed cases") {
    auto id = spectral_decompose(MatrixXd::Identity(3, 3));
    CHECK((id.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-14);
    MatrixXd sum = MatrixXd::Zero(3, 3);
    for (const auto& pj : id.projections) sum += pj;
    CHECK((sum - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

    MatrixXd d = MatrixXd::Zero(2, 2);
    d(0, 0) = 4.0;
    d(1, 1) = 1.0;
    auto dec = spectral_decompose(d);
    CHECK(dec.eigenvalues(0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(dec.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dec.projections[0](0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(dec.projections[0](1, 1) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(dec.projections[1](1, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spectral decomposition reconstructs a random SPD matrix") {
    MatrixXd cov = random_spd(5, 77);
    auto dec = spectral_decompose(cov);
    MatrixXd rebuilt = MatrixXd::Zero(5, 5);
    for (std::size_t j = 0; j < 5; ++j) rebuilt += dec.eigenvalues(static_cast<Eigen::Index>(j)) * dec.projections[j];
    CHECK((rebuilt - cov).cwiseAbs().maxCoeff() < 1e-10);
    // descending order
    for (std::size_t j = 1; j < 5; ++j) {
        CHECK(dec.eigenvalues(static_cast<Eigen::Index>(j)) <=
              dec.eigenvalues(static_cast<Eigen::Index>(j - 1)) + 1e-14);
    }
    // rank-1 idempotent projections, mutually orthogonal
    for (std::size_t j = 0; j < 5; ++j) {
        const MatrixXd& pj = dec.projections[j];
        CHECK((pj * pj - pj).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(pj.trace() == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t k = j + 1; k < 5; ++k) {
            CHECK((pj * dec.projections[k]).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("spectral decomposition rejects non-PSD input and fixes signs") {
    MatrixXd neg = MatrixXd::Identity(2, 2);
    neg(1, 1) = -0.5;
    CHECK_THROWS_AS(spectral_decompose(neg), std::invalid_argument);
    CHECK_THROWS_AS(spectral_decompose(MatrixXd::Zero(2, 3)), std::invalid_argument);

    // projections are sign-invariant, but the averaged-projection factors use
    // the convention: check it through truncation_projection
    MatrixXd cov = random_spd(4, 3);
    auto pr = truncation_projection(cov, 2);
    for (Eigen::Index j = 0; j < 2; ++j) {
        for (Eigen::Index a = 0; a < 4; ++a) {
            if (std::abs(pr.u(a, j)) > 1e-14) {
                CHECK(pr.u(a, j) > 0.0);
                break;
            }
        }
    }
}

TEST_CASE("average projection algebra") {
    MatrixXd cov = random_spd(4, 11);
    auto dec = spectral_decompose(cov);
    MatrixXd trunc = dec.projections[0] + dec.projections[1];
    // identical samples: mean is the sample itself
    auto pr = average_projection({trunc, trunc, trunc}, 2);
    CHECK((pr.p - trunc).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pr.p * pr.p - pr.p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(pr.p.trace() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK((pr.u * pr.u.transpose() - pr.p).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((pr.u.transpose() * pr.u - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);

    // samples sharing a common subspace recover it
    MatrixXd other = dec.projections[0] + dec.projections[2];
    auto shared = average_projection({trunc, other}, 1);
    CHECK((shared.p - dec.projections[0]).cwiseAbs().maxCoeff() < 1e-10);

    CHECK(pr.dispersion < 1e-12);
    auto mixed = average_projection({trunc, other}, 1);
    CHECK(mixed.dispersion > 0.0);

    CHECK_THROWS_AS(average_projection({trunc}, 4), std::invalid_argument);
    CHECK_THROWS_AS(average_projection({}, 1), std::invalid_argument);
}

TEST_CASE("discrepancy profile against the analytic constant-sigma value") {
    const std::size_t n = 3, m = 20, N = 64;
    VectorXd mu = VectorXd::Zero(3), s0 = VectorXd::Ones(3);
    MatrixXd sigma = MatrixXd::Zero(3, 3);
    sigma(0, 0) = 2.0;
    sigma(1, 1) = 1.0;
    sigma(2, 2) = 0.5;
    auto model = make_constant_model(mu, sigma, s0);
    auto grid = build_time_grid(1.0, m);
    auto batch = generate_brownian(grid, n, N, 5);
    auto ens = simulate_euler(model, grid, batch);

    // full projection: no discrepancy
    auto d_full = discrepancy_delta(ens, MatrixXd::Identity(3, 3));
    for (double v : d_full) CHECK(std::abs(v) < 1e-12);

    // keep the top factor: Delta(t)^2 = t * (1^2 + 0.5^2)
    auto pr = truncation_projection(sigma * sigma.transpose(), 1);
    auto d1 = discrepancy_delta(ens, pr.p);
    for (std::size_t i = 0; i <= m; ++i) {
        CHECK(d1[i] == doctest::Approx(std::sqrt(grid.nodes[i] * 1.25)).epsilon(1e-10));
    }
    // nondecreasing by construction
    for (std::size_t i = 1; i <= m; ++i) CHECK(d1[i] >= d1[i - 1]);

    // zero factors: the whole diffusion budget
    auto d0 = discrepancy_delta(ens, MatrixXd::Zero(3, 3));
    CHECK(d0[m] == doctest::Approx(std::sqrt(4.0 + 1.0 + 0.25)).epsilon(1e-10));
}

TEST_CASE("reduced batch is an exact projection of the full one") {
    const std::size_t n = 4, m = 16, N = 200;
    auto grid = build_time_grid(1.0, m);
    auto batch = generate_brownian(grid, n, N, 21);
    MatrixXd cov = random_spd(n, 9);
    auto pr = truncation_projection(cov, 2);
    auto red = reduce_brownian(batch, grid, pr.u);
    CHECK(red.dimension == 2);
    CHECK(red.seed == batch.seed);
    // Pythagoras: |P W|^2 + |(I-P) W|^2 = |W|^2, with P W = U W~
    for (std::size_t p = 0; p < 10; ++p) {
        for (std::size_t i = 0; i <= m; ++i) {
            VectorXd w(4), wt(2);
            for (std::size_t a = 0; a < n; ++a) w(static_cast<Eigen::Index>(a)) = batch.cumulative(p, i * n + a);
            for (std::size_t b = 0; b < 2; ++b) wt(static_cast<Eigen::Index>(b)) = red.cumulative(p, i * 2 + b);
            VectorXd pw = pr.u * wt;
            const double ortho = (w - pw).squaredNorm() + pw.squaredNorm() - w.squaredNorm();
            CHECK(std::abs(ortho) < 1e-10);
            // consistency with applying P directly
            CHECK((pw - pr.p * w).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("full-rank reduced simulation is bit-identical to the plain one") {
    const std::size_t n = 3, m = 12, N = 100;
    VectorXd kappa(3), s0(3);
    kappa << 0.02, -0.01, 0.03;
    s0 << 1.0, 2.0, 0.5;
    MatrixXd vol = 0.2 * MatrixXd::Identity(3, 3);
    vol(1, 0) = 0.05;
    auto model = make_geometric_model(kappa, vol, s0);
    auto grid = build_time_grid(1.0, m);
    auto batch = generate_brownian(grid, n, N, 33);
    auto plain = simulate_euler(model, grid, batch);

    FactorProjection full;
    full.retained = n;
    full.u = MatrixXd::Identity(3, 3);
    full.p = MatrixXd::Identity(3, 3);
    auto red = simulate_reduced(model, grid, batch, full);
    CHECK((red.states - plain.states).abs().maxCoeff() == 0.0);
}

TEST_CASE("reduced simulation moves only along retained directions") {
    const std::size_t n = 3, m = 10, N = 500;
    VectorXd mu = VectorXd::Zero(3), s0 = VectorXd::Zero(3);
    auto model = make_constant_model(mu, MatrixXd::Identity(3, 3), s0);
    auto grid = build_time_grid(1.0, m);
    auto batch = generate_brownian(grid, n, N, 41);
    FactorProjection pr;
    pr.retained = 1;
    pr.u = MatrixXd::Zero(3, 1);
    pr.u(0, 0) = 1.0;
    pr.p = pr.u * pr.u.transpose();
    auto red = simulate_reduced(model, grid, batch, pr);
    for (std::size_t p = 0; p < N; ++p) {
        // component 0 reproduces W^0 exactly; the others stay put
        CHECK(std::abs(red.s(p, m, 0) - batch.cumulative(p, m * n + 0)) < 1e-12);
        CHECK(red.s(p, m, 1) == 0.0);
        CHECK(red.s(p, m, 2) == 0.0);
    }
    // variance bookkeeping of the retained component
    double var = 0.0;
    for (std::size_t p = 0; p < N; ++p) var += red.s(p, m, 0) * red.s(p, m, 0);
    var /= static_cast<double>(N);
    const double se = std::sqrt(2.0 / static_cast<double>(N));  // var(W_1^2) = 2
    CHECK(std::abs(var - 1.0) < 3.0 * se);
}

namespace {

struct SweepRun {
    ReductionDiagnostics diag;
};

// shared setup for the factor-sweep checks: 4-d arithmetic model with a
// strongly graded spectrum and a linear BSDE on the terminal sum
struct SweepFixture {
    std::size_t n = 4, m = 24, N = 3000;
    AssetModel model;
    TimeGrid grid;
    BrownianBatch batch;
    PathEnsemble full;
    BackwardSolution sol_full;
    DriverSpec driver;
    TerminalSpec terminal;
    MatrixXd sigma;

    SweepFixture() {
        VectorXd mu = VectorXd::Zero(4), s0 = VectorXd::Ones(4);
        sigma = MatrixXd::Zero(4, 4);
        sigma.diagonal() << 2.0, 1.0, 0.5, 0.1;
        model = make_constant_model(mu, sigma, s0);
        grid = build_time_grid(1.0, m);
        batch = generate_brownian(grid, n, N, 57);
        full = simulate_euler(model, grid, batch);
        driver.f = [](std::size_t, std::size_t, double, std::span<const double>, double y,
                      std::span<const double>) { return -0.05 * y; };
        terminal.xi = [](std::span<const double> s) {
            return s[0] + s[1] + s[2] + s[3];
        };
        HermiteBasis basis(4, 1);
        sol_full = solve_backward(full, driver, terminal, basis);
    }

    SweepRun run(std::size_t f) {
        auto pr = (f == n) ? identity_projection(n)
                           : truncation_projection(sigma * sigma.transpose(), f);
        auto red = simulate_reduced(model, grid, batch, pr);
        HermiteBasis rbasis(f, 1);
        auto rdriver = reduced_factor_driver(driver, pr.u);
        auto sol = solve_backward(red, rdriver, terminal, rbasis);
        SweepRun out;
        out.diag = reduction_error_report(full, sol_full.y, sol_full.z, red, sol.y, sol.z, pr);
        return out;
    }
};

}  // namespace

TEST_CASE("factor sweep: errors shrink monotonically and vanish at full rank") {
    SweepFixture fx;
    std::vector<double> es, ey, ez, rz;
    for (std::size_t f = 1; f <= 4; ++f) {
        auto run = fx.run(f);
        es.push_back(run.diag.err_s);
        ey.push_back(run.diag.err_y);
        ez.push_back(run.diag.err_z);
        rz.push_back(run.diag.residual_z);
    }
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(es[k] <= es[k - 1] + 1e-12);
        CHECK(ey[k] <= ey[k - 1] + 1e-12);
        CHECK(ez[k] <= ez[k - 1] + 1e-12);
        CHECK(rz[k] <= rz[k - 1] + 1e-12);
    }
    // full rank: coupled runs coincide up to roundoff
    CHECK(es[3] < 1e-10);
    CHECK(ey[3] < 1e-10);
    CHECK(ez[3] < 1e-10);
    CHECK(rz[3] < 1e-10);
}

TEST_CASE("state discrepancy respects the a-priori projection bound") {
    // linear drift, constant sigma: L_sigma = 0, L_mu = |A|_2
    const std::size_t n = 3, m = 40, N = 2000;
    MatrixXd a_matrix = MatrixXd::Zero(3, 3);
    a_matrix.diagonal() << 0.3, -0.2, 0.1;
    a_matrix(0, 1) = 0.1;
    MatrixXd sigma = MatrixXd::Zero(3, 3);
    sigma.diagonal() << 1.5, 0.8, 0.3;
    VectorXd s0 = VectorXd::Ones(3);
    auto model = make_linear_drift_model(a_matrix, sigma, s0);
    auto grid = build_time_grid(1.0, m);
    auto batch = generate_brownian(grid, n, N, 71);
    auto full = simulate_euler(model, grid, batch);

    for (std::size_t f : {std::size_t{1}, std::size_t{2}}) {
        auto pr = truncation_projection(sigma * sigma.transpose(), f);
        auto red = simulate_reduced(model, grid, batch, pr);
        ArrayXXd none;
        auto diag = reduction_error_report(full, none, none, red, none, none, pr);
        // integral of Delta^2 over [0, T] (trapezoid on the profile squares)
        double int_delta2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            int_delta2 += 0.5 * grid.steps[i] *
                          (diag.delta[i] * diag.delta[i] + diag.delta[i + 1] * diag.delta[i + 1]);
        }
        const double l_mu =
            a_matrix.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).singularValues()(0);
        const double gamma = l_mu * l_mu;  // L_sigma = 0, T = 1, |U| = 1
        const double bound = std::sqrt(2.0 * int_delta2) * std::exp(gamma);
        CHECK(diag.err_s <= bound);
        CHECK(diag.err_s > 0.0);
    }
}

TEST_CASE("uncoupled runs are rejected") {
    SweepFixture fx;
    auto pr = truncation_projection(fx.sigma * fx.sigma.transpose(), 2);
    auto other_batch = generate_brownian(fx.grid, fx.n, fx.N, 58);  // different seed
    auto red = simulate_reduced(fx.model, fx.grid, other_batch, pr);
    ArrayXXd none;
    CHECK_THROWS_AS(reduction_error_report(fx.full, none, none, red, none, none, pr),
                    ContractViolation);
}

TEST_CASE("reduced driver lifts the control back to full coordinates") {
    DriverSpec full;
    full.f = [](std::size_t, std::size_t, double, std::span<const double>, double,
                std::span<const double> z) { return 2.0 * z[0] - z[1] + 0.5 * z[2]; };
    MatrixXd u(3, 1);
    u << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0;
    auto red = reduced_factor_driver(full, u);
    std::vector<double> s(3, 0.0), zeta{std::sqrt(2.0)};
    const double got = red.f(0, 0, 0.0, s, 0.0, zeta);
    CHECK(got == doctest::Approx(2.0 * 1.0 - 1.0).epsilon(1e-14));
}
