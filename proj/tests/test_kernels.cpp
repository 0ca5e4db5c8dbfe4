#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chaoslab/errors.hpp>
#include <chaoslab/kernels.hpp>
#include <chaoslab/rng.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

using namespace chaoslab;
using kernels::Admissibility;
using kernels::BuiltinId;
using kernels::ExponentPair;
using kernels::KernelSpec;

namespace {

std::vector<double> random_cloud(long n, int d, uint64_t salt, double scale = 1.0) {
    std::vector<double> pos(std::size_t(n) * std::size_t(d));
    for (long i = 0; i < n; ++i)
        for (int a = 0; a < d; ++a)
            pos[std::size_t(a) * std::size_t(n) + std::size_t(i)] =
                scale * rng::normal(salt, rng::Stream::Scratch, uint32_t(i), uint32_t(a));
    return pos;
}

// Straightforward per-pair reference loop for the interaction drift,
// independent of the library's fast paths and threading.
std::vector<double> manual_system_drift(const KernelSpec& spec, double t,
                                        const std::vector<double>& pos, long n, int d, long r) {
    const std::size_t dd = std::size_t(d);
    std::vector<double> out(pos.size(), 0.0);
    std::vector<double> xi(dd), yj(dd), b(dd);
    for (long i = r; i < n; ++i) {
        for (int a = 0; a < d; ++a) xi[std::size_t(a)] = pos[std::size_t(a) * std::size_t(n) + std::size_t(i)];
        for (long j = r; j < n; ++j) {
            if (j == i) continue;
            for (int a = 0; a < d; ++a) yj[std::size_t(a)] = pos[std::size_t(a) * std::size_t(n) + std::size_t(j)];
            if (spec.singular_at(t, xi, yj)) continue;
            spec.drift(t, xi, yj, b);
            bool finite = true;
            for (int a = 0; a < d; ++a) finite = finite && std::isfinite(b[std::size_t(a)]);
            if (!finite) continue;
            for (int a = 0; a < d; ++a)
                out[std::size_t(a) * std::size_t(n) + std::size_t(i)] += b[std::size_t(a)] / double(n);
        }
    }
    return out;
}

std::vector<double> manual_beta_r(const KernelSpec& spec, double t, const std::vector<double>& pos,
                                  long n, int d, long r) {
    if (r == 0) return manual_system_drift(spec, t, pos, n, d, 0);
    const std::size_t dd = std::size_t(d);
    std::vector<double> out(pos.size(), 0.0);
    std::vector<double> xi(dd), yj(dd), b(dd);
    auto at = [&](long i, int a) { return pos[std::size_t(a) * std::size_t(n) + std::size_t(i)]; };
    auto add = [&](long i, int a, double v) {
        out[std::size_t(a) * std::size_t(n) + std::size_t(i)] += v;
    };
    // coordinates below r: the full interaction drift
    auto full = manual_system_drift(spec, t, pos, n, d, 0);
    for (long i = 0; i < std::min(r, n); ++i)
        for (int a = 0; a < d; ++a)
            out[std::size_t(a) * std::size_t(n) + std::size_t(i)] =
                full[std::size_t(a) * std::size_t(n) + std::size_t(i)];
    // coordinates >= r: (1/n) sum over i < r of b(t, x_j, x_i)
    for (long j = r; j < n; ++j) {
        for (int a = 0; a < d; ++a) xi[std::size_t(a)] = at(j, a);
        for (long i = 0; i < r; ++i) {
            for (int a = 0; a < d; ++a) yj[std::size_t(a)] = at(i, a);
            if (spec.singular_at(t, xi, yj)) continue;
            spec.drift(t, xi, yj, b);
            bool finite = true;
            for (int a = 0; a < d; ++a) finite = finite && std::isfinite(b[std::size_t(a)]);
            if (!finite) continue;
            for (int a = 0; a < d; ++a) add(j, a, b[std::size_t(a)] / double(n));
        }
    }
    return out;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        CHECK(std::abs(a[k] - b[k]) <= tol * std::max(1.0, std::abs(b[k])));
}

// Same kernel but routed through the generic per-pair path instead of the
// builtin fast paths.
KernelSpec as_custom(KernelSpec spec) {
    spec.id = BuiltinId::Custom;
    return spec;
}

} // namespace

TEST_CASE("exponent pairs: validation, sum, boundary-exact admissibility") {
    CHECK_THROWS_AS((ExponentPair{2.0, 8.0, 1}.validate()), ConstraintError);
    CHECK_THROWS_AS((ExponentPair{8.0, 2.0, 1}.validate()), ConstraintError);
    CHECK_THROWS_AS((ExponentPair{8.0, 8.0, 0}.validate()), ConstraintError);

    ExponentPair good{5.0, 5.0, 2};
    CHECK(good.sum() == doctest::Approx(0.8));
    CHECK(good.admissible());

    // exact boundary d/p + 2/q = 1 must be rejected deterministically
    CHECK_FALSE(ExponentPair{4.0, 8.0, 3}.admissible());  // 3/4 + 1/4
    CHECK_FALSE(ExponentPair{3.0, 3.0, 1}.admissible());  // 1/3 + 2/3
    CHECK(ExponentPair{3.0, 3.01, 1}.admissible());       // just below
    CHECK_FALSE(ExponentPair{3.0, 2.99, 1}.admissible()); // just above

    // window exponent e = (q-2)/q - d/p
    CHECK(ExponentPair{8.0, 8.0, 1}.window_exponent() == doctest::Approx(0.625));
}

TEST_CASE("catalogue constructs with documented defaults") {
    auto names = kernels::builtin_names();
    REQUIRE(names.size() == 6);
    for (const auto& name : names) {
        std::map<std::string, double> params;
        if (name == "riesz" || name == "riesz-truncated") params["alpha"] = 0.5;
        auto spec = kernels::builtin(name, params);
        CHECK(spec.name == name);
        CHECK(spec.parameters.count("d") == 1);
        CHECK(spec.parameters.count("p") == 1);
        CHECK(spec.parameters.count("q") == 1);
        CHECK(bool(spec.drift));
        CHECK(bool(spec.dominator));
        CHECK(bool(spec.singular_at));
    }

    // kappa-riesz defaults to the d=2, p=3, q=8, alpha=1.5, kappa=1 profile
    auto kr = kernels::builtin("kappa-riesz");
    CHECK(kr.exponents.d == 2);
    CHECK(kr.exponents.p == 3.0);
    CHECK(kr.exponents.q == 8.0);
    CHECK(kr.params.alpha == 1.5);
    CHECK(kr.params.kappa == 1.0);

    CHECK(kernels::builtin("zero").support_radius == 0.0);
    CHECK(kernels::builtin("riesz-truncated", {{"alpha", 0.5}}).support_radius == 1.0);
    CHECK(std::isinf(kernels::builtin("linear-ou").support_radius));
}

TEST_CASE("hand-evaluated drift values") {
    const double t = 0.5;

    auto zero = kernels::builtin("zero", {{"d", 2}});
    std::vector<double> x = {1.0, 2.0}, y = {-0.5, 0.25}, out(2, 99.0);
    zero.drift(t, x, y, out);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);

    auto ou = kernels::builtin("linear-ou", {{"d", 2}});
    std::vector<double> x1 = {1.0, 0.0}, y1 = {0.0, 0.0};
    ou.drift(t, x1, y1, out);
    CHECK(out[0] == doctest::Approx(-1.0));
    CHECK(out[1] == doctest::Approx(0.0));

    // riesz alpha=0.5, s=-1, d=1, x=2, y=1: -(2-1)/|1|^{1.5} = -1
    auto riesz_att = kernels::builtin("riesz", {{"alpha", 0.5}, {"s", -1.0}});
    std::vector<double> x2 = {2.0}, y2 = {1.0}, out1(1, 0.0);
    riesz_att.drift(t, x2, y2, out1);
    CHECK(out1[0] == doctest::Approx(-1.0));

    // repulsive branch points along x - y and scales like r^{-alpha}
    auto riesz_rep = kernels::builtin("riesz", {{"alpha", 0.5}, {"s", 1.0}});
    std::vector<double> x3 = {2.0}, y3 = {0.0};
    riesz_rep.drift(t, x3, y3, out1);
    CHECK(out1[0] == doctest::Approx(std::pow(2.0, -0.5)));

    // truncation zeroes the kernel beyond radius 1
    auto trunc = kernels::builtin("riesz-truncated", {{"alpha", 0.5}});
    std::vector<double> x4 = {3.0}, y4 = {0.0};
    trunc.drift(t, x4, y4, out1);
    CHECK(out1[0] == 0.0);
    std::vector<double> x5 = {0.5}, y5 = {0.0};
    trunc.drift(t, x5, y5, out1);
    CHECK(out1[0] == doctest::Approx(std::pow(0.5, -0.5) * 0.5 / 0.5));

    // bounded-lipschitz: |b| = c r / sqrt(1 + r^2), attracting
    auto bl = kernels::builtin("bounded-lipschitz", {{"c", 2.0}});
    std::vector<double> x6 = {1.0}, y6 = {0.0};
    bl.drift(t, x6, y6, out1);
    CHECK(out1[0] == doctest::Approx(-2.0 / std::sqrt(2.0)));

    // kappa-riesz: -kappa (x-y)/|x-y|^alpha, |b| = kappa r^{1-alpha}
    auto kr = kernels::builtin("kappa-riesz", {{"alpha", 1.5}, {"kappa", 2.0}});
    std::vector<double> x7 = {4.0, 0.0}, y7 = {0.0, 0.0}, out2(2, 0.0);
    kr.drift(t, x7, y7, out2);
    CHECK(out2[0] == doctest::Approx(-2.0 * 4.0 * std::pow(4.0, -1.5)));
    CHECK(out2[1] == doctest::Approx(0.0));

    // coincidence is singular for the riesz family
    CHECK(riesz_rep.singular_at(t, y3, y3));
    CHECK_FALSE(riesz_rep.singular_at(t, x3, y3));
    CHECK_FALSE(ou.singular_at(t, y1, y1));
}

TEST_CASE("alias paper-h2-example is the kappa-riesz kernel") {
    auto alias = kernels::builtin("paper-h2-example", {{"alpha", 1.2}, {"kappa", 0.7}});
    auto canon = kernels::builtin("kappa-riesz", {{"alpha", 1.2}, {"kappa", 0.7}});
    CHECK(alias.id == BuiltinId::KappaRiesz);
    CHECK(alias.name == "paper-h2-example");
    std::vector<double> x = {0.3, -0.4}, y = {0.0, 0.0}, oa(2), oc(2);
    alias.drift(0.0, x, y, oa);
    canon.drift(0.0, x, y, oc);
    CHECK(oa[0] == oc[0]);
    CHECK(oa[1] == oc[1]);
    CHECK(kernels::classify(alias).verdict == kernels::classify(canon).verdict);
}

TEST_CASE("constructor rejects bad names and parameters") {
    CHECK_THROWS_AS(kernels::builtin("coulomb"), UsageError);
    CHECK_THROWS_AS(kernels::builtin("riesz"), ConstraintError); // alpha required
    try {
        kernels::builtin("riesz");
    } catch (const ConstraintError& e) {
        CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    }
    CHECK_THROWS_AS(kernels::builtin("riesz", {{"alpha", 2.5}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("riesz", {{"alpha", 0.0}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("riesz", {{"alpha", 0.5}, {"s", 0.5}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("kappa-riesz", {{"alpha", 0.5}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("bounded-lipschitz", {{"c", -1.0}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("zero", {{"beta", 1.0}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("zero", {{"p", 2.0}}), ConstraintError);
    CHECK_THROWS_AS(kernels::builtin("zero", {{"d", 1.5}}), ConstraintError);
}

TEST_CASE("domination holds on 10^4 random non-singular pairs per kernel") {
    std::vector<KernelSpec> specs;
    specs.push_back(kernels::builtin("zero"));
    specs.push_back(kernels::builtin("linear-ou", {{"d", 2}}));
    specs.push_back(kernels::builtin("bounded-lipschitz", {{"c", 1.7}, {"d", 3}}));
    specs.push_back(kernels::builtin("riesz", {{"alpha", 0.7}, {"d", 2}}));
    specs.push_back(kernels::builtin("riesz-truncated", {{"alpha", 0.9}}));
    specs.push_back(kernels::builtin("kappa-riesz", {}));

    for (const auto& spec : specs) {
        const int d = spec.exponents.d;
        const std::size_t dd = std::size_t(d);
        std::vector<double> x(dd), y(dd), z(dd), b(dd);
        int checked = 0;
        for (uint32_t k = 0; checked < 10000; ++k) {
            double t = rng::uniform(5, rng::Stream::Scratch, k, 0);
            for (int a = 0; a < d; ++a) {
                x[std::size_t(a)] = 3.0 * rng::normal(6, rng::Stream::Scratch, k, uint32_t(a));
                y[std::size_t(a)] = 3.0 * rng::normal(7, rng::Stream::Scratch, k, uint32_t(a));
                z[std::size_t(a)] = x[std::size_t(a)] - y[std::size_t(a)];
            }
            if (spec.singular_at(t, x, y)) continue;
            spec.drift(t, x, y, b);
            double norm2 = 0.0;
            for (int a = 0; a < d; ++a) norm2 += b[std::size_t(a)] * b[std::size_t(a)];
            double h = spec.dominator(t, z);
            REQUIRE(std::sqrt(norm2) <= h + 1e-12);
            ++checked;
        }
    }
}

TEST_CASE("riesz drift is antisymmetric") {
    for (int d : {1, 3}) {
        auto spec = kernels::builtin("riesz", {{"alpha", 1.1}, {"d", double(d)}, {"s", -1.0}});
        const std::size_t dd = std::size_t(d);
        std::vector<double> x(dd), y(dd), bxy(dd), byx(dd);
        for (uint32_t k = 0; k < 200; ++k) {
            for (int a = 0; a < d; ++a) {
                x[std::size_t(a)] = rng::normal(8, rng::Stream::Scratch, k, uint32_t(a));
                y[std::size_t(a)] = rng::normal(9, rng::Stream::Scratch, k, uint32_t(a));
            }
            spec.drift(0.3, x, y, bxy);
            spec.drift(0.3, y, x, byx);
            for (int a = 0; a < d; ++a) CHECK(bxy[std::size_t(a)] == -byx[std::size_t(a)]);
        }
    }
}

TEST_CASE("classification: the four-case verdict table") {
    // (a) plain exponent arithmetic is covered above; (b) boundary case on
    // an otherwise well-behaved kernel
    auto boundary = kernels::builtin(
        "riesz-truncated", {{"alpha", 0.3}, {"d", 3}, {"p", 4}, {"q", 8}});
    auto cb = kernels::classify(boundary);
    CHECK(cb.verdict == Admissibility::Inadmissible);
    CHECK_FALSE(cb.exponent_ok);
    CHECK(cb.exponent_sum == doctest::Approx(1.0));
    CHECK(cb.global_lp_finite); // compactly supported and locally integrable

    // (c) truncated riesz, d=2, alpha=0.3, p=5: integral of |z|^{-1.5} over
    // the unit disc is 2 pi * int_0^1 r^{-0.5} dr = 4 pi
    auto trunc = kernels::builtin(
        "riesz-truncated", {{"alpha", 0.3}, {"d", 2}, {"p", 5}, {"q", 5}});
    auto ct = kernels::classify(trunc);
    CHECK(ct.verdict == Admissibility::H1);
    CHECK(ct.exponent_ok);
    CHECK(ct.local_lp_finite);
    CHECK(ct.global_lp_finite);
    CHECK_FALSE(ct.best_effort);
    CHECK(ct.global_lp_value == doctest::Approx(4.0 * std::numbers::pi).epsilon(1e-6));

    // (d) the same profile without truncation: tail of |z|^{-1.5 * ...}
    // diverges in d=2, but the local part and the tail function survive
    auto glob = kernels::builtin("riesz", {{"alpha", 0.3}, {"d", 2}, {"p", 5}, {"q", 5}});
    auto cg = kernels::classify(glob);
    CHECK(cg.verdict == Admissibility::H2Only);
    CHECK(cg.exponent_ok);
    CHECK(cg.local_lp_finite);
    CHECK_FALSE(cg.global_lp_finite);
    CHECK(std::isinf(cg.global_lp_value));
    CHECK(cg.h2_tail_ok);
}

TEST_CASE("classification: extra regimes") {
    // too singular for its own p: local L^p fails -> inadmissible even
    // though the exponent test passes
    auto hot = kernels::builtin("riesz", {{"alpha", 1.3}, {"d", 2}, {"p", 5}, {"q", 5}});
    auto ch = kernels::classify(hot);
    CHECK(ch.verdict == Admissibility::Inadmissible);
    CHECK(ch.exponent_ok);
    CHECK_FALSE(ch.local_lp_finite);

    // the motivating singular example classifies H2-only with its defaults
    auto kr = kernels::classify(kernels::builtin("kappa-riesz"));
    CHECK(kr.verdict == Admissibility::H2Only);
    CHECK(kr.exponent_sum == doctest::Approx(2.0 / 3.0 + 0.25));

    // global riesz with the d=2, p=3, q=8, alpha=0.5 exponents
    auto gr = kernels::classify(
        kernels::builtin("riesz", {{"alpha", 0.5}, {"d", 2}, {"p", 3}, {"q", 8}}));
    CHECK(gr.verdict == Admissibility::H2Only);
    CHECK(gr.exponent_sum == doctest::Approx(11.0 / 12.0));

    // monotone in (p, q) on the exponent test: enlarging exponents with the
    // same integrability status cannot flip H1 away
    auto bigger = kernels::builtin(
        "riesz-truncated", {{"alpha", 0.3}, {"d", 2}, {"p", 6}, {"q", 8}});
    CHECK(kernels::classify(bigger).verdict == Admissibility::H1);

    CHECK_THROWS_AS(kernels::classify(kernels::builtin("zero"), -1.0), ConstraintError);
}

TEST_CASE("classification of custom kernels is flagged best-effort") {
    KernelSpec spec;
    spec.name = "gaussian-bump";
    spec.exponents = {4.0, 4.0, 1};
    spec.drift = [](double, std::span<const double> x, std::span<const double> y,
                    std::span<double> out) {
        double z = x[0] - y[0];
        out[0] = std::exp(-z * z);
    };
    spec.dominator = [](double, std::span<const double> z) { return std::exp(-z[0] * z[0]); };
    spec.singular_at = [](double, std::span<const double>, std::span<const double>) {
        return false;
    };
    auto c = kernels::classify(spec);
    CHECK(c.best_effort);
    CHECK(c.verdict == Admissibility::H1);
    // int exp(-4 z^2) dz = sqrt(pi) / 2
    CHECK(c.global_lp_value ==
          doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(2e-2));

    // an H2 claim without a tail function is rejected
    KernelSpec bad = spec;
    bad.claims_h2 = true;
    CHECK_THROWS_AS(kernels::classify(bad), ConstraintError);

    // a decreasing tail function is rejected
    KernelSpec shrink = spec;
    shrink.claims_h2 = true;
    shrink.h2_tail = [](double T) { return 1.0 / (1.0 + T); };
    CHECK_THROWS_AS(kernels::classify(shrink), ConstraintError);
}

TEST_CASE("system_drift matches the per-pair reference loop") {
    const double t = 0.25;

    // generic path: riesz in d=2 with a repeated point (masked pair)
    auto riesz = kernels::builtin("riesz", {{"alpha", 0.8}, {"d", 2}});
    long n = 24;
    auto pos = random_cloud(n, 2, 41);
    // duplicate a particle to exercise singular masking
    pos[3] = pos[2];
    pos[std::size_t(n) + 3] = pos[std::size_t(n) + 2];
    for (long r : {0L, 5L}) {
        std::vector<double> out(pos.size());
        kernels::system_drift(riesz, t, pos.data(), n, 2, r, out.data());
        check_close(out, manual_system_drift(riesz, t, pos, n, 2, r), 1e-13);
        // masked coordinates are exactly zero
        for (long i = 0; i < r; ++i) {
            CHECK(out[std::size_t(i)] == 0.0);
            CHECK(out[std::size_t(n) + std::size_t(i)] == 0.0);
        }
    }

    // fast path vs generic path for linear-ou
    auto ou = kernels::builtin("linear-ou", {{"d", 3}});
    n = 40;
    auto pos3 = random_cloud(n, 3, 42);
    std::vector<double> fast(pos3.size()), generic(pos3.size());
    kernels::system_drift(ou, t, pos3.data(), n, 3, 0, fast.data());
    kernels::system_drift(as_custom(ou), t, pos3.data(), n, 3, 0, generic.data());
    check_close(fast, generic, 1e-12);
    check_close(fast, manual_system_drift(ou, t, pos3, n, 3, 0), 1e-12);

    // thread count does not change a single bit
    std::vector<double> one(pos3.size()), eight(pos3.size());
    kernels::system_drift(ou, t, pos3.data(), n, 3, 0, one.data(), 1);
    kernels::system_drift(ou, t, pos3.data(), n, 3, 0, eight.data(), 8);
    CHECK(one == eight);
}

TEST_CASE("beta_r: full rows below r, response rows above") {
    const double t = 0.0;
    auto bl = kernels::builtin("bounded-lipschitz", {{"c", 1.2}, {"d", 2}});
    long n = 17;
    auto pos = random_cloud(n, 2, 77);
    for (long r : {0L, 1L, 4L}) {
        std::vector<double> out(pos.size());
        kernels::beta_r(bl, t, pos.data(), n, 2, r, out.data());
        check_close(out, manual_beta_r(bl, t, pos, n, 2, r), 1e-13);
    }

    // r = 0 reduces to the full interaction drift
    std::vector<double> out0(pos.size()), full(pos.size());
    kernels::beta_r(bl, t, pos.data(), n, 2, 0, out0.data());
    kernels::system_drift(bl, t, pos.data(), n, 2, 0, full.data());
    check_close(out0, full, 1e-14);

    // linear-ou fast path vs generic
    auto ou = kernels::builtin("linear-ou");
    auto pos1 = random_cloud(33, 1, 78);
    std::vector<double> fast(pos1.size()), generic(pos1.size());
    kernels::beta_r(ou, t, pos1.data(), 33, 1, 1, fast.data());
    kernels::beta_r(as_custom(ou), t, pos1.data(), 33, 1, 1, generic.data());
    check_close(fast, generic, 1e-12);
    // hand formula: beta_j = -(x_j - x_0)/n for j >= 1
    for (long j = 1; j < 33; ++j)
        CHECK(fast[std::size_t(j)] ==
              doctest::Approx(-(pos1[std::size_t(j)] - pos1[0]) / 33.0).epsilon(1e-12));
}

TEST_CASE("mean_drift averages the kernel against a cloud") {
    const double t = 0.1;
    auto riesz = kernels::builtin("riesz", {{"alpha", 0.5}});
    // query at 0 against cloud {1, 2, 4}: (1/3)(-(1)^{-1/2} - ... ) with s=+1
    std::vector<double> q = {0.0}, cloud = {1.0, 2.0, 4.0}, out(1);
    kernels::mean_drift(riesz, t, q.data(), 1, cloud.data(), 3, 1, out.data());
    double expect = (-std::pow(1.0, -0.5) - std::pow(2.0, -0.5) - std::pow(4.0, -0.5)) / 3.0;
    CHECK(out[0] == doctest::Approx(expect).epsilon(1e-14));

    // a cloud point coinciding with the query is masked
    std::vector<double> cloud2 = {0.0, 1.0}, out2(1);
    kernels::mean_drift(riesz, t, q.data(), 1, cloud2.data(), 2, 1, out2.data());
    CHECK(out2[0] == doctest::Approx(-0.5).epsilon(1e-14));

    // linear-ou fast path against the generic path on a 2-d batch
    auto ou = kernels::builtin("linear-ou", {{"d", 2}});
    long nq = 9, m = 31;
    auto queries = random_cloud(nq, 2, 55);
    auto pts = random_cloud(m, 2, 56);
    std::vector<double> fast(queries.size()), generic(queries.size());
    kernels::mean_drift(ou, t, queries.data(), nq, pts.data(), m, 2, fast.data());
    kernels::mean_drift(as_custom(ou), t, queries.data(), nq, pts.data(), m, 2, generic.data());
    check_close(fast, generic, 1e-12);
    // and against the closed form -(x - cloud mean)
    for (int a = 0; a < 2; ++a) {
        double mean = 0.0;
        for (long j = 0; j < m; ++j) mean += pts[std::size_t(a) * std::size_t(m) + std::size_t(j)];
        mean /= double(m);
        for (long i = 0; i < nq; ++i) {
            double xi = queries[std::size_t(a) * std::size_t(nq) + std::size_t(i)];
            CHECK(fast[std::size_t(a) * std::size_t(nq) + std::size_t(i)] ==
                  doctest::Approx(-(xi - mean)).epsilon(1e-12));
        }
    }
}
