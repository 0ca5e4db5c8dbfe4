#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chaoslab/errors.hpp>
#include <chaoslab/gauss_oracle.hpp>
#include <chaoslab/quadrature.hpp>

#include <cmath>
#include <numbers>
#include <vector>

using namespace chaoslab;

namespace {

const kernels::KernelSpec kSweepKernel =
    kernels::builtin("riesz-truncated", {{"alpha", 0.25}, {"d", 1}, {"p", 8}, {"q", 8}});

} // namespace

TEST_CASE("heat kernel L^p norms match the closed form and quadrature") {
    // ||g_1||_2 in d=1 is (4 pi)^{-1/4}
    CHECK(gauss::heat_kernel_lp_norm(1.0, 2.0, 1) ==
          doctest::Approx(0.531125966013598457).epsilon(1e-14));
    // ||g_4||_2 = ||g_1||_2 * 4^{-1/4}
    CHECK(gauss::heat_kernel_lp_norm(4.0, 2.0, 1) ==
          doctest::Approx(0.375562772232471).epsilon(1e-12));

    // time scaling t^{-(d/2)(1-1/p)}: d=4, p=5 gives ratio 4^{-1.6}
    double r = gauss::heat_kernel_lp_norm(4.0, 5.0, 4) / gauss::heat_kernel_lp_norm(1.0, 5.0, 4);
    CHECK(r == doctest::Approx(0.108818820412015503).epsilon(1e-13));
    CHECK(gauss::heat_kernel_lp_constant(5.0, 4) ==
          doctest::Approx(gauss::heat_kernel_lp_norm(1.0, 5.0, 4)).epsilon(1e-14));

    // p = 1 is the total mass, for any t and d
    for (double t : {0.1, 1.0, 7.0})
        for (int d : {1, 2, 3})
            CHECK(gauss::heat_kernel_lp_norm(t, 1.0, d) == doctest::Approx(1.0).epsilon(1e-14));

    // independent check: direct quadrature of g_t^p in d = 1
    for (double t : {0.5, 2.0}) {
        for (double p : {2.0, 3.5}) {
            auto gp = [t, p](double x) {
                double g = std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
                return std::pow(g, p);
            };
            double norm = std::pow(quad::adaptive(gp, -30.0, 30.0, 1e-12), 1.0 / p);
            CHECK(gauss::heat_kernel_lp_norm(t, p, 1) == doctest::Approx(norm).epsilon(1e-10));
        }
    }

    CHECK_THROWS_AS(gauss::heat_kernel_lp_norm(0.0, 2.0, 1), ConstraintError);
    CHECK_THROWS_AS(gauss::heat_kernel_lp_norm(-1.0, 2.0, 1), ConstraintError);
    CHECK_THROWS_AS(gauss::heat_kernel_lp_norm(1.0, 0.5, 1), ConstraintError);
}

TEST_CASE("single-window integral: exact value for a constant dominator") {
    // h == c: I = c^2 (t2 - t1) regardless of the Gaussian
    auto bl = kernels::builtin("bounded-lipschitz", {{"c", 1.5}});
    std::vector<double> noshift;
    auto rep = gauss::lemma1_integral(bl, 0.25, 0.75, noshift);
    CHECK(rep.integral_value == doctest::Approx(1.125).epsilon(1e-3));
    CHECK(rep.t1 == 0.25);
    CHECK(rep.t2 == 0.75);
    CHECK(rep.exponent == doctest::Approx(0.625)); // defaults p = q = 8, d = 1
    CHECK(std::isnan(rep.fitted_slope));           // slope and envelope are
    CHECK(std::isnan(rep.c0_estimate));            // sweep-only quantities

    // the zero kernel integrates to zero
    auto z = gauss::lemma1_integral(kernels::builtin("zero"), 0.0, 0.5, noshift);
    CHECK(z.integral_value == doctest::Approx(0.0));

    CHECK_THROWS_AS(gauss::lemma1_integral(bl, 0.5, 0.5, noshift), ConstraintError);
    CHECK_THROWS_AS(gauss::lemma1_integral(bl, 0.5, 0.25, noshift), ConstraintError);
}

TEST_CASE("single-window integral decays as the shift leaves the support") {
    std::vector<double> s0 = {0.0}, s1 = {1.0}, s3 = {3.0};
    auto i0 = gauss::lemma1_integral(kSweepKernel, 0.0, 0.25, s0).integral_value;
    auto i1 = gauss::lemma1_integral(kSweepKernel, 0.0, 0.25, s1).integral_value;
    auto i3 = gauss::lemma1_integral(kSweepKernel, 0.0, 0.25, s3).integral_value;
    CHECK(i0 > i1);
    CHECK(i1 > i3);
    CHECK(i3 < 0.05 * i0);
}

TEST_CASE("window sweep reproduces the frozen dyadic table") {
    // Frozen against an independent high-precision evaluation of
    //   I(w) = int_0^w int_{|y|<=1} |y|^{-1/2} g_t(y) dy dt
    // for the truncated riesz dominator with alpha = 1/4 in d = 1.
    const double expected[6] = {0.10135668452146002, 0.17046094532629611,
                                0.28667961887103237, 0.48204459350602035,
                                0.80815799018868564, 1.3380704153895663};

    std::vector<gauss::Window> windows;
    for (int k = 6; k >= 1; --k) windows.push_back({0.0, std::ldexp(1.0, -k)});
    auto rep = gauss::lemma1_sweep(kSweepKernel, windows);

    REQUIRE(rep.points.size() == 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(rep.points[std::size_t(i)].width == doctest::Approx(std::ldexp(1.0, i - 6)));
        CHECK(rep.points[std::size_t(i)].integral ==
              doctest::Approx(expected[i]).epsilon(1e-5));
        CHECK(rep.points[std::size_t(i)].shift_norm == 0.0);
    }

    CHECK(rep.exponent == doctest::Approx(0.625));
    CHECK(rep.fitted_slope == doctest::Approx(0.7456720032763814).epsilon(1e-5));
    CHECK(rep.c0_estimate == doctest::Approx(2.0635866797718892).epsilon(1e-5));

    // windowed integrals grow with the window, and the fitted envelope
    // dominates every point: I <= c0 * w^e with equality at the argmax
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        if (i > 0) CHECK(rep.points[i].integral > rep.points[i - 1].integral);
        CHECK(rep.points[i].bound ==
              doctest::Approx(rep.c0_estimate * std::pow(rep.points[i].width, rep.exponent))
                  .epsilon(1e-12));
        CHECK(rep.points[i].integral <= rep.points[i].bound * (1.0 + 1e-12));
        worst = std::max(worst, rep.points[i].integral / rep.points[i].bound);
    }
    CHECK(worst == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("sweep with shifts keeps the worst shift per window") {
    std::vector<gauss::Window> windows;
    for (int k = 4; k >= 1; --k) windows.push_back({0.0, std::ldexp(1.0, -k)});
    std::vector<std::vector<double>> shifts = {{0.0}, {2.0}};
    auto rep = gauss::lemma1_sweep(kSweepKernel, windows, shifts);
    REQUIRE(rep.points.size() == 4);
    for (const auto& pt : rep.points) {
        CHECK(pt.shift_norm == 0.0); // the centered window always dominates
        CHECK(pt.integral > 0.0);
    }
}

TEST_CASE("sweep preconditions: enough windows, enough width span") {
    std::vector<gauss::Window> few = {{0.0, 0.1}, {0.0, 0.2}, {0.0, 0.4}};
    CHECK_THROWS_AS(gauss::lemma1_sweep(kSweepKernel, few), UsageError);

    std::vector<gauss::Window> narrow = {{0.0, 0.1}, {0.0, 0.2}, {0.0, 0.3}, {0.0, 0.4}};
    CHECK_THROWS_AS(gauss::lemma1_sweep(kSweepKernel, narrow), UsageError);

    std::vector<gauss::Window> flat = {{0.0, 0.2}, {0.0, 0.2}, {0.0, 0.2}, {0.0, 0.2}};
    CHECK_THROWS_AS(gauss::lemma1_sweep(kSweepKernel, flat), UsageError);
}

TEST_CASE("conditioning windows follow the documented arithmetic") {
    kernels::ExponentPair e{8.0, 8.0, 1}; // window exponent 0.625
    auto w = gauss::conditioning_windows(2.0, 3.0, 2.0, e, 0.5);
    CHECK(w.lemma3_window == doctest::Approx(std::pow(6.0, -1.0 / 0.625)).epsilon(1e-14));
    // est1_delta = min(1 / (2 c0^2 T alpha^2), T) = min(1/4, 2)
    CHECK(w.est1_delta == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(w.n_windows == 8);

    // delta capped at the horizon when the bound is loose
    auto w2 = gauss::conditioning_windows(0.1, 1.0, 0.5, e, 0.1);
    CHECK(w2.est1_delta == doctest::Approx(0.5));
    CHECK(w2.n_windows == 1);

    // nonpositive window exponent is rejected
    kernels::ExponentPair bad{3.0, 3.0, 1}; // (q-2)/q - d/p = 0
    CHECK_THROWS_AS(gauss::conditioning_windows(2.0, 3.0, 2.0, bad, 0.5), ConstraintError);
    kernels::ExponentPair neg{3.0, 3.0, 2};
    CHECK_THROWS_AS(gauss::conditioning_windows(2.0, 3.0, 2.0, neg, 0.5), ConstraintError);

    CHECK_THROWS_AS(gauss::conditioning_windows(-1.0, 3.0, 2.0, e, 0.5), ConstraintError);
    CHECK_THROWS_AS(gauss::conditioning_windows(2.0, 3.0, -2.0, e, 0.5), ConstraintError);
}
