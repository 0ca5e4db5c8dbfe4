#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/girsanov.hpp"
#include "chaoslab/kernels.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/sde_engine.hpp"

using namespace chaoslab;

namespace {

// A trajectory that sits still: every snapshot is the same cloud, so the
// drift functionals reduce to closed-form Riemann sums.
sde::TrajectoryBlock constant_path(long n, int d, double dt, long steps,
                                   std::vector<double> cloud) {
    sde::TrajectoryBlock block;
    block.n = n;
    block.dim = d;
    block.dt = dt;
    block.record_every = 1;
    for (long k = 0; k <= steps; ++k) {
        block.times.push_back(double(k) * dt);
        block.snapshots.push_back(cloud);
    }
    return block;
}

sde::SimConfig config_for(const sde::TrajectoryBlock& block, kernels::KernelSpec kernel) {
    sde::SimConfig cfg;
    cfg.n_particles = block.n;
    cfg.dim = block.dim;
    cfg.dt = block.dt;
    cfg.horizon = block.times.back();
    cfg.kernel = std::move(kernel);
    return cfg;
}

// b(t, x, y) = c in every coordinate, never singular.
kernels::KernelSpec constant_kernel(double c, int d) {
    kernels::KernelSpec spec;
    spec.name = "constant-test";
    spec.exponents = kernels::ExponentPair{8.0, 8.0, d};
    spec.drift = [c](double, std::span<const double>, std::span<const double>,
                     std::span<double> out) {
        for (double& v : out) v = c;
    };
    spec.dominator = [c, d](double, std::span<const double>) {
        return std::abs(c) * std::sqrt(double(d));
    };
    spec.singular_at = [](double, std::span<const double>, std::span<const double>) {
        return false;
    };
    return spec;
}

sde::SimConfig gaussian_start_config(long n, kernels::KernelSpec kernel, double horizon,
                                     double dt, uint64_t seed) {
    sde::SimConfig cfg;
    cfg.n_particles = n;
    cfg.dim = kernel.exponents.d;
    cfg.horizon = horizon;
    cfg.dt = dt;
    cfg.diffusion = 1.0;
    cfg.kernel = std::move(kernel);
    cfg.initial_law.kind = sde::InitialLawKind::Gaussian;
    cfg.initial_law.mean = {0.0};
    cfg.initial_law.var = {1.0};
    cfg.seed = seed;
    return cfg;
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

} // namespace

TEST_CASE("hand-built two-particle path has exact energy and weight") {
    // Particles pinned at +1 and -1 under the attractive linear kernel:
    // beta^(1) = (-1, +1) at every time, so |beta|^2 = 2 and the energy
    // over [0, 1] is exactly 2.
    auto block = constant_path(2, 1, 0.25, 4, {1.0, -1.0});
    auto cfg = config_for(block, kernels::builtin("linear-ou"));

    auto acc = girsanov::drift_energy(block, cfg, 1);
    CHECK(acc.r == 1);
    CHECK(!acc.has_ito);
    CHECK(acc.drift_energy == 2.0);
    CHECK(acc.ito_sum == 0.0);
    CHECK_THROWS_AS(acc.log_weight(), UsageError);
    CHECK_THROWS_AS(girsanov::weight(block, cfg, 1), UsageError);

    // With N = 2 the full field coincides with the r = 1 field.
    CHECK(girsanov::drift_energy(block, cfg, 0).drift_energy == 2.0);

    // Zero Brownian increments: log Z = -energy/2 exactly.
    block.has_increments = true;
    block.increments.assign(4, std::vector<double>{0.0, 0.0});
    auto with_ito = girsanov::drift_energy(block, cfg, 1);
    CHECK(with_ito.has_ito);
    CHECK(with_ito.log_weight() == -1.0);
    CHECK(girsanov::weight(block, cfg, 1) == -1.0);

    // beta = (-1, +1): each step adds -1*0.1 + 1*0.2 = 0.1 to the Ito sum.
    block.increments.assign(4, std::vector<double>{0.1, 0.2});
    auto shifted = girsanov::drift_energy(block, cfg, 1);
    CHECK(shifted.ito_sum == doctest::Approx(0.4).epsilon(1e-13));
    CHECK(shifted.log_weight() == doctest::Approx(-1.4).epsilon(1e-13));

    // Increments are usable only on the dense step grid; a thinned block
    // must not pretend to carry an Ito sum.
    block.record_every = 2;
    CHECK(!girsanov::drift_energy(block, cfg, 1).has_ito);
}

TEST_CASE("partial-drift energies of a constant kernel match the closed form") {
    const long n = 5;
    const double c = 2.0;
    const double dt = 0.1;
    const long steps = 5;
    const double horizon = dt * double(steps);
    auto block = constant_path(n, 1, dt, steps, {0.4, -1.2, 3.0, 0.05, -2.2});
    auto cfg = config_for(block, constant_kernel(c, 1));

    for (long r : {0L, 1L, 3L}) {
        // r of the rows (all of them when r = 0) carry the full (n-1)/n
        // mean drift; the remaining rows feel only the r/n pull of the
        // leading block.  Self-pairs never contribute.
        long full_rows = r == 0 ? n : r;
        long coupled_rows = r == 0 ? 0 : n - r;
        double per_time =
            c * c *
            (double(full_rows) * double((n - 1) * (n - 1)) + double(coupled_rows) * double(r * r)) /
            double(n * n);
        auto acc = girsanov::drift_energy(block, cfg, r);
        CHECK(std::abs(acc.drift_energy - per_time * horizon) < 1e-12);
    }

    // The zero kernel has zero energy and unit weight, exactly, whatever
    // the increments are.
    auto zero_cfg = config_for(block, kernels::builtin("zero"));
    block.has_increments = true;
    block.increments.assign(std::size_t(steps), std::vector<double>(std::size_t(n), 0.5));
    auto acc0 = girsanov::drift_energy(block, zero_cfg, 2);
    CHECK(acc0.drift_energy == 0.0);
    CHECK(acc0.ito_sum == 0.0);
    CHECK(acc0.log_weight() == 0.0);
}

TEST_CASE("trajectory/config mismatches are rejected") {
    auto block = constant_path(3, 1, 0.1, 4, {0.0, 1.0, 2.0});
    auto cfg = config_for(block, kernels::builtin("linear-ou"));
    CHECK_NOTHROW(girsanov::drift_energy(block, cfg, 0));

    auto bad_n = cfg;
    bad_n.n_particles = 4;
    CHECK_THROWS_AS(girsanov::drift_energy(block, bad_n, 0), UsageError);

    auto bad_d = cfg;
    bad_d.dim = 2;
    CHECK_THROWS_AS(girsanov::drift_energy(block, bad_d, 0), UsageError);

    auto bad_dt = cfg;
    bad_dt.dt = 0.2;
    CHECK_THROWS_AS(girsanov::drift_energy(block, bad_dt, 0), UsageError);

    CHECK_THROWS_AS(girsanov::drift_energy(block, cfg, -1), UsageError);
    CHECK_THROWS_AS(girsanov::drift_energy(block, cfg, 3), UsageError);

    sde::TrajectoryBlock stub = block;
    stub.times.resize(1);
    stub.snapshots.resize(1);
    CHECK_THROWS_AS(girsanov::drift_energy(stub, cfg, 0), UsageError);
}

TEST_CASE("exp_moment is exact on constant samples and overflow-safe") {
    std::vector<double> flat(150, 1.0e4);
    auto est = girsanov::exp_moment(flat, 2.0, 1000, 11);
    CHECK(est.log_mean_exp == 2.0e4);
    CHECK(est.ci_low == 2.0e4);
    CHECK(est.ci_high == 2.0e4);
    CHECK(est.n_paths == 150);
    CHECK(est.diverged_fraction == 0.0);
    CHECK(est.alpha == 2.0);

    // alpha * f ~ 1419 would overflow a naive exp(); the shifted estimator
    // stays finite and lands inside the scaled sample range.
    std::vector<double> big(150);
    for (std::size_t j = 0; j < big.size(); ++j)
        big[j] = 709.0 + double(j) / double(big.size() - 1);
    auto hot = girsanov::exp_moment(big, 2.0, 1000, 4);
    CHECK(std::isfinite(hot.log_mean_exp));
    CHECK(hot.log_mean_exp > 2.0 * 709.0);
    CHECK(hot.log_mean_exp < 2.0 * 710.0);
    CHECK(std::isfinite(hot.ci_low));
    CHECK(std::isfinite(hot.ci_high));
}

TEST_CASE("exp_moment preconditions") {
    std::vector<double> v(100, 0.5);
    CHECK_NOTHROW(girsanov::exp_moment(v, 1.0, 1000, 0));
    CHECK_THROWS_AS(girsanov::exp_moment(v, 0.0, 1000, 0), ConstraintError);
    CHECK_THROWS_AS(girsanov::exp_moment(v, -1.0, 1000, 0), ConstraintError);

    std::vector<double> few(99, 0.5);
    CHECK_THROWS_AS(girsanov::exp_moment(few, 1.0, 1000, 0), UsageError);
    CHECK_THROWS_AS(girsanov::exp_moment(v, 1.0, 999, 0), UsageError);
}

TEST_CASE("diverged paths are excluded, not propagated") {
    const double inf = std::numeric_limits<double>::infinity();
    const double nan = std::numeric_limits<double>::quiet_NaN();

    std::vector<double> finite(185);
    for (std::size_t j = 0; j < finite.size(); ++j) finite[j] = 0.3 * std::sin(double(j));
    std::vector<double> mixed = finite;
    mixed.insert(mixed.end(), 9, inf);
    mixed.push_back(-inf);
    mixed.insert(mixed.end(), 5, nan); // 200 values, 15 non-finite

    auto full = girsanov::exp_moment(mixed, 1.5, 1200, 21);
    auto clean = girsanov::exp_moment(finite, 1.5, 1200, 21);
    CHECK(full.n_paths == 200);
    CHECK(full.diverged_fraction == doctest::Approx(0.075).epsilon(1e-15));
    CHECK(clean.diverged_fraction == 0.0);
    // The surviving values and the bootstrap seed are identical, so the
    // estimates must agree bit for bit.
    CHECK(full.log_mean_exp == clean.log_mean_exp);
    CHECK(full.ci_low == clean.ci_low);
    CHECK(full.ci_high == clean.ci_high);

    std::vector<double> doomed(120, inf);
    CHECK_THROWS_AS(girsanov::exp_moment(doomed, 1.0, 1000, 0), EstimationError);
}

TEST_CASE("exp_moment grows with alpha and dominates the plain mean") {
    std::vector<double> v(160);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = double(j) / double(v.size() - 1);
    double m = mean(v);

    auto a = girsanov::exp_moment(v, 0.5, 1500, 9);
    auto b = girsanov::exp_moment(v, 1.0, 1500, 9);
    auto c = girsanov::exp_moment(v, 2.0, 1500, 9);
    CHECK(a.log_mean_exp < b.log_mean_exp);
    CHECK(b.log_mean_exp < c.log_mean_exp);
    // Jensen, strict for a non-constant sample.
    CHECK(a.log_mean_exp > 0.5 * m);
    CHECK(b.log_mean_exp > 1.0 * m);
    CHECK(c.log_mean_exp > 2.0 * m);
    for (const auto& est : {a, b, c}) {
        CHECK(est.ci_low <= est.log_mean_exp);
        CHECK(est.log_mean_exp <= est.ci_high);
        CHECK(est.ci_low < est.ci_high);
    }

    auto again = girsanov::exp_moment(v, 1.0, 1500, 9);
    CHECK(again.log_mean_exp == b.log_mean_exp);
    CHECK(again.ci_low == b.ci_low);
    CHECK(again.ci_high == b.ci_high);
}

TEST_CASE("pair energies replay the documented noise layout exactly") {
    auto kernel = kernels::builtin("linear-ou");
    const double horizon = 1.0;
    const double dt = 0.125;
    const long steps = 8;
    const long n_paths = 6;
    const uint64_t seed = 77;

    auto frozen = girsanov::pair_energies(kernel, horizon, dt, n_paths, seed,
                                          girsanov::CompanionLaw::Frozen);
    auto brown = girsanov::pair_energies(kernel, horizon, dt, n_paths, seed,
                                         girsanov::CompanionLaw::Brownian);
    REQUIRE(frozen.size() == std::size_t(n_paths));
    REQUIRE(brown.size() == std::size_t(n_paths));

    // b(x, y) = -(x - y): stream 0 drives w, stream 1 the Brownian
    // companion, energies are left-endpoint sums.
    const double sdt = std::sqrt(dt);
    for (long j = 0; j < n_paths; ++j) {
        uint64_t path_seed = rng::mix(seed, uint64_t(j));
        double w = 0.0, y = 0.0, e_frozen = 0.0, e_brown = 0.0;
        for (long k = 0; k < steps; ++k) {
            e_frozen += w * w * dt;
            e_brown += (w - y) * (w - y) * dt;
            w += sdt * rng::normal(path_seed, rng::Stream::StepNoise, 0, uint32_t(k), 0);
            y += sdt * rng::normal(path_seed, rng::Stream::StepNoise, 1, uint32_t(k), 0);
        }
        CHECK(frozen[std::size_t(j)] == e_frozen);
        CHECK(brown[std::size_t(j)] == e_brown);
    }
}

TEST_CASE("frozen companion position enters the energy in every axis") {
    auto kernel = kernels::builtin("linear-ou", {{"d", 2}});
    const double horizon = 0.5;
    const double dt = 0.125;
    const long steps = 4;
    std::vector<double> y0 = {0.5, -0.25};

    auto energies = girsanov::pair_energies(kernel, horizon, dt, 3, 5,
                                            girsanov::CompanionLaw::Frozen, y0);
    const double sdt = std::sqrt(dt);
    for (long j = 0; j < 3; ++j) {
        uint64_t path_seed = rng::mix(uint64_t(5), uint64_t(j));
        double w0 = 0.0, w1 = 0.0, energy = 0.0;
        for (long k = 0; k < steps; ++k) {
            energy += ((w0 - y0[0]) * (w0 - y0[0]) + (w1 - y0[1]) * (w1 - y0[1])) * dt;
            w0 += sdt * rng::normal(path_seed, rng::Stream::StepNoise, 0, uint32_t(k), 0);
            w1 += sdt * rng::normal(path_seed, rng::Stream::StepNoise, 0, uint32_t(k), 1);
        }
        CHECK(energies[std::size_t(j)] == energy);
        // The very first left endpoint already contributes |y0|^2 dt.
        CHECK(energies[std::size_t(j)] >= (0.25 + 0.0625) * dt * 0.999);
    }
}

TEST_CASE("bounded kernels give uniformly bounded pair energies") {
    auto bounded = kernels::builtin("bounded-lipschitz", {{"c", 1.5}});
    const double horizon = 1.0;
    const double dt = 0.05;

    auto frozen = girsanov::pair_energies(bounded, horizon, dt, 200, 3,
                                          girsanov::CompanionLaw::Frozen);
    auto brown = girsanov::pair_energies(bounded, horizon, dt, 200, 3,
                                         girsanov::CompanionLaw::Brownian);
    for (double e : frozen) {
        CHECK(e >= 0.0);
        CHECK(e < 1.5 * 1.5 * horizon); // |b| < c strictly
    }
    CHECK(frozen != brown);

    auto again = girsanov::pair_energies(bounded, horizon, dt, 200, 3,
                                         girsanov::CompanionLaw::Frozen);
    CHECK(again == frozen);

    // For the linear kernel the Brownian companion doubles the expected
    // squared separation (E|w-y|^2 = 2t vs E|w|^2 = t).
    auto lin = kernels::builtin("linear-ou");
    auto lin_frozen = girsanov::pair_energies(lin, horizon, dt, 400, 9,
                                              girsanov::CompanionLaw::Frozen);
    auto lin_brown = girsanov::pair_energies(lin, horizon, dt, 400, 9,
                                             girsanov::CompanionLaw::Brownian);
    CHECK(mean(lin_brown) > 1.4 * mean(lin_frozen));
    CHECK(mean(lin_brown) < 2.8 * mean(lin_frozen));
}

TEST_CASE("pair_energies validates its grid") {
    auto kernel = kernels::builtin("linear-ou");
    CHECK_THROWS_AS(
        girsanov::pair_energies(kernel, 0.0, 0.1, 10, 0, girsanov::CompanionLaw::Frozen),
        ConstraintError);
    CHECK_THROWS_AS(
        girsanov::pair_energies(kernel, 1.0, -0.1, 10, 0, girsanov::CompanionLaw::Frozen),
        ConstraintError);
    CHECK_THROWS_AS(
        girsanov::pair_energies(kernel, 1.0, 0.3, 10, 0, girsanov::CompanionLaw::Frozen),
        ConstraintError);
    CHECK_THROWS_AS(
        girsanov::pair_energies(kernel, 1.0, 0.1, 0, 0, girsanov::CompanionLaw::Frozen),
        UsageError);
    std::vector<double> wrong_dim = {1.0, 2.0};
    CHECK_THROWS_AS(girsanov::pair_energies(kernel, 1.0, 0.1, 10, 0,
                                            girsanov::CompanionLaw::Frozen, wrong_dim),
                    UsageError);
}

TEST_CASE("sample_functionals: zero kernel gives unit weights exactly") {
    auto cfg = gaussian_start_config(3, kernels::builtin("zero"), 0.3, 0.1, 1234);
    auto sample = girsanov::sample_functionals(cfg, 0, 16, true);
    REQUIRE(sample.energies.size() == 16);
    REQUIRE(sample.log_weights.size() == 16);
    for (double e : sample.energies) CHECK(e == 0.0);
    for (double lw : sample.log_weights) CHECK(lw == 0.0);

    auto no_weights = girsanov::sample_functionals(cfg, 0, 16, false);
    CHECK(no_weights.log_weights.empty());
    CHECK(no_weights.energies == sample.energies);
}

TEST_CASE("discrete change-of-drift weights average to one") {
    auto cfg = gaussian_start_config(4, kernels::builtin("bounded-lipschitz", {{"c", 1.0}}),
                                     0.5, 0.02, 1);

    // Full transform: the reference law is N independent Brownian
    // particles, reweighted onto the interacting system.  E[Z] = 1 holds
    // exactly in discrete time, so the estimate's CI must cover 0.
    auto full = girsanov::sample_functionals(cfg, 0, 600, true, true);
    REQUIRE(full.log_weights.size() == 600);
    auto zf = girsanov::exp_moment(full.log_weights, 1.0, 2000, 5);
    CHECK(zf.diverged_fraction == 0.0);
    CHECK(zf.ci_low < 0.0);
    CHECK(0.0 < zf.ci_high);
    CHECK(std::abs(zf.log_mean_exp) < 0.1);
    CHECK(mean(full.log_weights) < 0.0); // Jensen: E log Z < log E Z = 0

    // The r = 0 energy is deterministically below T c^2 (N-1)^2 / N.
    for (double e : full.energies) {
        CHECK(e > 0.0);
        CHECK(e < 0.5 * 9.0 / 4.0);
    }

    // Partial transform: reference decouples the first particle only.
    auto pcfg = cfg;
    pcfg.partial_r = 1;
    auto part = girsanov::sample_functionals(pcfg, 1, 600, true);
    auto zp = girsanov::exp_moment(part.log_weights, 1.0, 2000, 6);
    CHECK(zp.ci_low < 0.0);
    CHECK(0.0 < zp.ci_high);
    CHECK(mean(part.log_weights) < 0.0);
    // r = 1 energy bound: T c^2 (N-1) / N.
    for (double e : part.energies) CHECK(e < 0.5 * 3.0 / 4.0);

    // Reference simulations with and without the drift are different
    // ensembles, and repeated sampling is reproducible bit for bit.
    auto with_drift = girsanov::sample_functionals(cfg, 0, 120, false, false);
    auto driftless = girsanov::sample_functionals(cfg, 0, 120, false, true);
    CHECK(with_drift.energies != driftless.energies);
    auto again = girsanov::sample_functionals(pcfg, 1, 600, true);
    CHECK(again.energies == part.energies);
    CHECK(again.log_weights == part.log_weights);
}

TEST_CASE("sample_functionals validates its arguments") {
    auto cfg = gaussian_start_config(4, kernels::builtin("linear-ou"), 0.5, 0.1, 0);
    CHECK_THROWS_AS(girsanov::sample_functionals(cfg, 4, 100, false), UsageError);
    CHECK_THROWS_AS(girsanov::sample_functionals(cfg, -1, 100, false), UsageError);
    CHECK_THROWS_AS(girsanov::sample_functionals(cfg, 0, 0, false), UsageError);

    auto bad = cfg;
    bad.dt = 0.3; // does not divide the horizon
    CHECK_THROWS_AS(girsanov::sample_functionals(bad, 0, 10, false), ConstraintError);
}

TEST_CASE("scaling study: full energies grow with N, partial stay bounded") {
    auto kernel = kernels::builtin("linear-ou");
    std::vector<long> sizes = {4, 8, 16};
    auto study = girsanov::novikov_scaling_study(kernel, sizes, 0.25, 0.05, 0.05, 150, 7);

    CHECK(study.horizon == 0.25);
    CHECK(study.dt == 0.05);
    CHECK(study.alpha == 0.05);
    CHECK(study.n_paths == 150);
    REQUIRE(study.rows.size() == 3);

    for (std::size_t k = 0; k < study.rows.size(); ++k) {
        const auto& row = study.rows[k];
        CHECK(row.n == sizes[k]);
        CHECK(row.error.empty());
        REQUIRE(row.full_exp_moment.has_value());
        REQUIRE(row.partial_exp_moment.has_value());
        CHECK(row.full_exp_moment->alpha == 0.05);
        CHECK(row.full_exp_moment->diverged_fraction == 0.0);
        CHECK(row.partial_exp_moment->diverged_fraction == 0.0);
        CHECK(std::isfinite(row.full_energy_mean));
        CHECK(row.full_energy_mean > 0.0);
        CHECK(row.partial_energy_mean > 0.0);
        // Jensen holds exactly on the empirical sample.
        CHECK(row.full_exp_moment->log_mean_exp >= 0.05 * row.full_energy_mean - 1e-9);
        CHECK(row.partial_exp_moment->log_mean_exp >= 0.05 * row.partial_energy_mean - 1e-9);
    }

    // Under the Brownian reference with unit-variance start the full
    // energy mean is (N-1) * integral of (1+t), so the column scales ~N...
    CHECK(study.rows[1].full_energy_mean > study.rows[0].full_energy_mean);
    CHECK(study.rows[2].full_energy_mean > study.rows[1].full_energy_mean);
    double growth = study.rows[2].full_energy_mean / study.rows[0].full_energy_mean;
    CHECK(growth > 3.0);
    CHECK(growth < 8.0);

    // ...while the r = 1 column is bounded in N.
    double pmin = std::numeric_limits<double>::infinity();
    double pmax = 0.0;
    for (const auto& row : study.rows) {
        pmin = std::min(pmin, row.partial_energy_mean);
        pmax = std::max(pmax, row.partial_energy_mean);
    }
    CHECK(pmax / pmin < 2.0);
    CHECK(study.rows[2].partial_energy_mean < 0.25 * study.rows[2].full_energy_mean);
}

TEST_CASE("scaling study captures per-N estimation failures without aborting") {
    auto kernel = kernels::builtin("linear-ou");
    std::vector<long> sizes = {2, 3};
    // alpha = inf makes every scaled functional non-finite, so exp_moment
    // reports total divergence; the sweep must record it and keep going.
    double inf = std::numeric_limits<double>::infinity();
    auto study = girsanov::novikov_scaling_study(kernel, sizes, 0.25, 0.05, inf, 100, 1);
    REQUIRE(study.rows.size() == 2);
    for (const auto& row : study.rows) {
        CHECK(!row.error.empty());
        CHECK(!row.full_exp_moment.has_value());
        CHECK(!row.partial_exp_moment.has_value());
        // The full-energy mean was computed before the estimator threw.
        CHECK(std::isfinite(row.full_energy_mean));
        CHECK(std::isnan(row.partial_energy_mean));
    }
}

TEST_CASE("scaling study preconditions") {
    auto kernel = kernels::builtin("linear-ou");
    std::vector<long> ok = {4, 8};
    std::vector<long> empty;
    std::vector<long> dup = {4, 4};
    std::vector<long> decreasing = {8, 4};
    std::vector<long> tiny = {1, 2};
    CHECK_THROWS_AS(girsanov::novikov_scaling_study(kernel, empty, 0.25, 0.05, 0.1, 100, 0),
                    ConstraintError);
    CHECK_THROWS_AS(girsanov::novikov_scaling_study(kernel, dup, 0.25, 0.05, 0.1, 100, 0),
                    ConstraintError);
    CHECK_THROWS_AS(girsanov::novikov_scaling_study(kernel, decreasing, 0.25, 0.05, 0.1, 100, 0),
                    ConstraintError);
    CHECK_THROWS_AS(girsanov::novikov_scaling_study(kernel, tiny, 0.25, 0.05, 0.1, 100, 0),
                    ConstraintError);
    CHECK_THROWS_AS(girsanov::novikov_scaling_study(kernel, ok, 0.25, 0.05, 0.1, 99, 0),
                    UsageError);
}
