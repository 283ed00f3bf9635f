#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lps/functionals.hpp"
#include "lps/kernels.hpp"
#include "lps/model.hpp"
#include "lps/spectral.hpp"
#include "test_fixtures.hpp"

#include <cmath>

using namespace lps;
using namespace lps::fixtures;

namespace {

struct Setup {
    Model model;
    Generator gen;
    SpectralDecomposition dec;
    CarreOperator gamma;
};

Setup make(const Model& m, CarreMode mode = CarreMode::Full) {
    Setup s{m, build_graph_laplacian(m), {}, make_carre(m, mode)};
    s.dec = decompose(s.gen);
    return s;
}

double norm2_mu(const SpectralDecomposition& dec, const Vec& v) {
    return std::sqrt(kernels::sumsq_w(v.data(), dec.mu.data(), v.size()));
}

} // namespace

TEST_CASE("closed-form H on K2") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    const LpsResult r = h_gamma_exact(s.dec, s.gamma, f);
    // |Gamma e^{-tL} f|^2 = 2 e^{-4t} at each vertex; integral = 1/2
    CHECK(r.values[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.values[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.p_norms.at(2.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("H vanishes on the kernel and is 1-homogeneous") {
    CounterRng rng(11);
    Setup s = make(random_model(rng, 9, false, false));
    const LpsResult zero = h_gamma_exact(s.dec, s.gamma, Vec::Constant(s.dec.n(), 4.2));
    CHECK(zero.values.maxCoeff() <= 1e-12);

    const Vec f = random_vector(rng, s.dec.n());
    const LpsResult one = h_gamma_exact(s.dec, s.gamma, f);
    const LpsResult two = h_gamma_exact(s.dec, s.gamma, 2.0 * f);
    CHECK((two.values - 2.0 * one.values).cwiseAbs().maxCoeff() <=
          1e-12 * std::max(1.0, one.values.maxCoeff()));
}

TEST_CASE("L2 identity for the full carre operator") {
    CounterRng rng(22);
    for (int trial = 0; trial < 12; ++trial) {
        Setup s = make(random_model(rng));
        const Vec f = random_vector(rng, s.dec.n());
        const LpsResult r = h_gamma_exact(s.dec, s.gamma, f);
        const double want = norm2_mu(s.dec, s.dec.project_out_kernel(f)) / std::sqrt(2.0);
        CHECK(r.p_norms.at(2.0) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("quadrature route agrees with the closed form for exp") {
    CounterRng rng(33);
    for (int trial = 0; trial < 6; ++trial) {
        Setup s = make(random_model(rng));
        HGammaPlan plan(s.dec, s.gamma);
        for (int rep = 0; rep < 8; ++rep) {
            const Vec f = random_vector(rng, s.dec.n());
            const LpsResult exact = plan.eval(f);
            const LpsResult quad = h_gamma_F(s.dec, s.gamma, Symbol::exp_decay(), f, {});
            const double scale = std::max(exact.values.maxCoeff(), 1e-300);
            CHECK((quad.values - exact.values).cwiseAbs().maxCoeff() <= 1e-6 * scale);
            CHECK(quad.p_norms.at(2.0) ==
                  doctest::Approx(exact.p_norms.at(2.0)).epsilon(1e-6));
            CHECK_FALSE(quad.warning);
        }
    }
}

TEST_CASE("psi quadrature against the Gamma-function value on K2") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    const LpsResult r = h_gamma_F(s.dec, s.gamma, Symbol::psi(0.25), f, {});
    // c^2 |Gamma u|^2 / lambda * int s^{3/2} e^{-2s} ds = Gamma(5/2) / 2^{5/2}
    const double want_sq = std::tgamma(2.5) / std::pow(2.0, 2.5);
    CHECK(r.values[0] == doctest::Approx(std::sqrt(want_sq)).epsilon(1e-6));
    CHECK(r.values[1] == doctest::Approx(std::sqrt(want_sq)).epsilon(1e-6));
}

TEST_CASE("divergence refusal tracks the declared decay") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, Symbol::phi(0.0), f, {}), DivergenceError);
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, Symbol::one_minus_exp(), f, {}), DivergenceError);
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, Symbol::resolvent(0.5), f, {}), DivergenceError);
    CHECK_NOTHROW(h_gamma_F(s.dec, s.gamma, Symbol::resolvent(0.51), f, {}));
    CHECK_NOTHROW(h_gamma_F(s.dec, s.gamma, Symbol::phi(0.01), f, {}));
}

TEST_CASE("declared decay is checked, not trusted") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    Symbol lying = Symbol::one_minus_exp();
    lying.delta_infinity = 2.0;   // bogus declaration to sneak past the refusal
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, lying, f, {}), ValidationError);
}

TEST_CASE("heavy power tails raise the quadrature warning flag") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    // phi(0.05) decays like z^{-0.55}; the truncated tail beyond the window
    // carries mass far above the 1e-4 reporting threshold
    const LpsResult slow = h_gamma_F(s.dec, s.gamma, Symbol::phi(0.05), f, {});
    CHECK(slow.warning);
    CHECK(slow.quadrature_error_estimate > 1e-4);
    const LpsResult fast = h_gamma_F(s.dec, s.gamma, Symbol::exp_decay(), f, {});
    CHECK_FALSE(fast.warning);
}

TEST_CASE("quadrature spec validation") {
    Setup s = make(k2());
    Vec f(2);
    f << 1.0, -1.0;
    QuadratureSpec q;
    q.nodes = 8;
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, Symbol::exp_decay(), f, q), ValidationError);
    q.nodes = 32;
    q.t_min = 1.0;
    q.t_max = 0.5;
    CHECK_THROWS_AS(h_gamma_F(s.dec, s.gamma, Symbol::exp_decay(), f, q), ValidationError);
}

TEST_CASE("maximal function") {
    Setup s = make(path(6));
    SUBCASE("invariant vectors are their own maximal function") {
        const Vec ones = Vec::Constant(6, 2.5);
        const Vec m = maximal_function(s.dec, ones);
        CHECK((m - ones).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("eigenvectors peak at t = 0") {
        const Vec u = s.dec.vectors.col(3);
        const Vec m = maximal_function(s.dec, u);
        CHECK((m - u.cwiseAbs()).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("sup-norm contraction") {
        CounterRng rng(5);
        for (int i = 0; i < 10; ++i) {
            const Vec f = random_vector(rng, 6);
            const Vec m = maximal_function(s.dec, f);
            CHECK(m.maxCoeff() <= (1.0 + 1e-12) * f.cwiseAbs().maxCoeff());
            CHECK(m.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("meyer functional") {
    SUBCASE("mass conservation ties S to H on conservative models") {
        CounterRng rng(66);
        for (int trial = 0; trial < 5; ++trial) {
            Setup s = make(random_model(rng, 8, false, false));
            const Vec f = random_vector(rng, s.dec.n());
            const LpsResult S = meyer_S(s.dec, s.gamma, f, {});
            const LpsResult H = h_gamma_exact(s.dec, s.gamma, f);
            double s_mass = 0.0, h_mass = 0.0;
            for (int x = 0; x < s.dec.n(); ++x) {
                s_mass += s.dec.mu[x] * S.values[x] * S.values[x];
                h_mass += s.dec.mu[x] * H.values[x] * H.values[x];
            }
            CHECK(s_mass == doctest::Approx(h_mass).epsilon(1e-6));
        }
    }
    SUBCASE("constants vanish and the functional is homogeneous") {
        CounterRng rng(67);
        Setup s = make(path(5));
        CHECK(meyer_S(s.dec, s.gamma, Vec::Constant(5, 1.0), {}).values.maxCoeff() <= 1e-12);
        const Vec f = random_vector(rng, 5);
        const LpsResult one = meyer_S(s.dec, s.gamma, f, {});
        const LpsResult two = meyer_S(s.dec, s.gamma, 2.0 * f, {});
        CHECK((two.values - 2.0 * one.values).cwiseAbs().maxCoeff() <=
              1e-9 * std::max(1.0, one.values.maxCoeff()));
    }
}

TEST_CASE("gradient bound fit") {
    SUBCASE("K2 with theta = 1 gives exactly 1") {
        Setup s = make(k2());
        Vec f(2);
        f << 1.0, -1.0;
        const GradientBoundFit fit = fit_gradient_bound(s.dec, s.gamma, 1.0, {f});
        CHECK(fit.c_theta == doctest::Approx(1.0).epsilon(1e-9));
        CHECK_FALSE(fit.growing_in_t);
    }
    SUBCASE("ratio is scale-invariant") {
        CounterRng rng(68);
        Setup s = make(path(7));
        const Vec f = random_vector(rng, 7);
        const GradientBoundFit a = fit_gradient_bound(s.dec, s.gamma, 0.7, {f});
        const GradientBoundFit b = fit_gradient_bound(s.dec, s.gamma, 0.7, {2.0 * f});
        CHECK(a.c_theta == doctest::Approx(b.c_theta).epsilon(1e-10));
    }
    SUBCASE("theta and corpus validation") {
        Setup s = make(k2());
        CHECK_THROWS_AS(fit_gradient_bound(s.dec, s.gamma, 0.0, {Vec::Ones(2)}),
                        ValidationError);
        CHECK_THROWS_AS(fit_gradient_bound(s.dec, s.gamma, 0.5, {}), ValidationError);
    }
}

TEST_CASE("p-norms stored in the result are recomputable") {
    CounterRng rng(70);
    Setup s = make(random_model(rng));
    const Vec f = random_vector(rng, s.dec.n());
    const LpsResult r = h_gamma_exact(s.dec, s.gamma, f);
    for (const auto& [p, v] : r.p_norms) {
        const double again =
            kernels::pnorm_mu(r.values.data(), s.dec.mu.data(), r.values.size(), p);
        CHECK(v == doctest::Approx(again).epsilon(1e-12));
    }
    CHECK(r.values.minCoeff() >= 0.0);
}
