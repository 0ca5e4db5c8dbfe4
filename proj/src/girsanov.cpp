#include "chaoslab/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"
#include "kernel_functors.hpp"

namespace chaoslab::girsanov {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

void check_grid(const sde::TrajectoryBlock& traj, const sde::SimConfig& config, long r) {
    if (traj.n != config.n_particles || traj.dim != config.dim)
        throw UsageError("trajectory shape does not match the config");
    if (std::abs(traj.dt - config.dt) > 1e-12 * std::max(1.0, config.dt))
        throw UsageError("trajectory step size does not match the config");
    if (r < 0 || r >= traj.n)
        throw UsageError("functional index r must lie in [0, N)");
}

} // namespace

double PathFunctionalAccumulator::log_weight() const {
    if (!has_ito)
        throw UsageError("log-weight needs Brownian increments; re-run the simulation "
                         "with keep_increments and record_every = 1");
    return -ito_sum - 0.5 * drift_energy;
}

PathFunctionalAccumulator drift_energy(const sde::TrajectoryBlock& traj,
                                       const sde::SimConfig& config, long r) {
    check_grid(traj, config, r);
    if (traj.snapshots.size() < 2)
        throw UsageError("trajectory too short for a path functional");

    long n = traj.n;
    int d = traj.dim;
    PathFunctionalAccumulator acc;
    acc.r = r;
    // Increments can be consumed only when every step was recorded, so
    // that snapshot k is the left endpoint of step k.
    acc.has_ito = traj.has_increments && traj.record_every == 1 &&
                  traj.increments.size() + 1 == traj.snapshots.size();

    std::vector<double> beta(std::size_t(n) * d);
    for (std::size_t k = 0; k + 1 < traj.snapshots.size(); ++k) {
        kernels::beta_r(config.kernel, traj.times[k], traj.snapshots[k].data(), n, d, r,
                        beta.data());
        double dtk = traj.times[k + 1] - traj.times[k];
        double norm2 = 0.0;
        for (double v : beta) norm2 += v * v;
        acc.drift_energy += norm2 * dtk;
        if (acc.has_ito) {
            const auto& inc = traj.increments[k];
            double dot = 0.0;
            for (std::size_t idx = 0; idx < beta.size(); ++idx) dot += beta[idx] * inc[idx];
            acc.ito_sum += dot;
        }
    }
    return acc;
}

double weight(const sde::TrajectoryBlock& traj, const sde::SimConfig& config, long r) {
    return drift_energy(traj, config, r).log_weight();
}

ExpMomentEstimate exp_moment(std::span<const double> functionals, double alpha,
                             int n_resamples, uint64_t seed) {
    if (alpha <= 0.0) throw ConstraintError("exp_moment needs alpha > 0");
    if (functionals.size() < 100)
        throw UsageError("exp_moment needs at least 100 independent paths");
    if (n_resamples < 1000)
        throw UsageError("exp_moment needs at least 1000 bootstrap resamples");

    std::vector<double> scaled;
    scaled.reserve(functionals.size());
    long diverged = 0;
    for (double f : functionals) {
        double s = alpha * f;
        if (std::isfinite(s))
            scaled.push_back(s);
        else
            ++diverged;
    }
    if (scaled.empty())
        throw EstimationError("every path's exponential functional diverged");

    ExpMomentEstimate est;
    est.alpha = alpha;
    est.n_paths = long(functionals.size());
    est.diverged_fraction = double(diverged) / double(functionals.size());
    est.log_mean_exp = stats::log_mean_exp(scaled);
    auto ci = stats::bootstrap_ci(
        scaled, [](std::span<const double> v) { return stats::log_mean_exp(v); },
        n_resamples, seed);
    est.ci_low = ci.lo;
    est.ci_high = ci.hi;
    return est;
}

std::vector<double> pair_energies(const kernels::KernelSpec& kernel, double horizon,
                                  double dt, long n_paths, uint64_t seed,
                                  CompanionLaw companion, std::span<const double> frozen_y) {
    int d = kernel.exponents.d;
    if (horizon <= 0.0 || dt <= 0.0) throw ConstraintError("horizon and dt must be positive");
    long steps = std::lround(horizon / dt);
    if (steps < 1 || std::abs(double(steps) * dt - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ConstraintError("horizon must be an integer number of steps");
    if (n_paths < 1) throw UsageError("pair_energies needs at least one path");
    if (!frozen_y.empty() && long(frozen_y.size()) != d)
        throw UsageError("frozen_y must have the kernel's dimension");

    std::vector<double> energies(static_cast<std::size_t>(n_paths));
    kernels::detail::with_evaluator(kernel, d, [&](auto kern) {
        parallel::parallel_for(std::size_t(n_paths), [&](std::size_t lo, std::size_t hi) {
            const std::size_t dd = std::size_t(d);
            std::vector<double> w(dd), y(dd), b(dd);
            double sdt = std::sqrt(dt);
            for (std::size_t j = lo; j < hi; ++j) {
                uint64_t path_seed = rng::mix(seed, j);
                std::fill(w.begin(), w.end(), 0.0);
                for (int a = 0; a < d; ++a)
                    y[std::size_t(a)] = frozen_y.empty() ? 0.0 : frozen_y[std::size_t(a)];
                double energy = 0.0;
                for (long k = 0; k < steps; ++k) {
                    if (kern.eval(double(k) * dt, w.data(), y.data(), b.data())) {
                        double norm2 = 0.0;
                        for (int a = 0; a < d; ++a) norm2 += b[std::size_t(a)] * b[std::size_t(a)];
                        energy += norm2 * dt;
                    }
                    for (int a = 0; a < d; ++a) {
                        w[std::size_t(a)] += sdt * rng::normal(path_seed, rng::Stream::StepNoise,
                                                               0, uint32_t(k), uint32_t(a));
                        if (companion == CompanionLaw::Brownian)
                            y[std::size_t(a)] += sdt * rng::normal(path_seed,
                                                                   rng::Stream::StepNoise, 1,
                                                                   uint32_t(k), uint32_t(a));
                    }
                }
                energies[j] = energy;
            }
        });
    });
    return energies;
}

FunctionalSample sample_functionals(const sde::SimConfig& config, long r, long n_paths,
                                    bool want_weights, bool driftless_reference) {
    config.validate();
    if (r < 0 || r >= config.n_particles) throw UsageError("r must lie in [0, N)");
    if (n_paths < 1) throw UsageError("sample_functionals needs at least one path");

    sde::SimConfig sim = config;
    if (driftless_reference) {
        sim.kernel = kernels::builtin("zero");
        sim.kernel.exponents = config.kernel.exponents;
        sim.partial_r = 0;
    }

    FunctionalSample out;
    out.energies.resize(std::size_t(n_paths));
    if (want_weights) out.log_weights.resize(std::size_t(n_paths));
    parallel::parallel_for(std::size_t(n_paths), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t j = lo; j < hi; ++j) {
            sde::SimConfig run_cfg = sim;
            run_cfg.seed = rng::mix(config.seed, j);
            sde::TrajectoryBlock traj = sde::run(run_cfg, 1, want_weights);
            sde::SimConfig functional_cfg = config;
            functional_cfg.seed = run_cfg.seed;
            auto acc = drift_energy(traj, functional_cfg, r);
            out.energies[j] = acc.drift_energy;
            if (want_weights) out.log_weights[j] = acc.log_weight();
        }
    });
    return out;
}

ScalingStudy novikov_scaling_study(const kernels::KernelSpec& kernel,
                                   std::span<const long> n_list, double horizon, double dt,
                                   double alpha, long n_paths, uint64_t seed) {
    if (n_list.empty()) throw ConstraintError("the N sweep needs at least one size");
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        if (n_list[k] < 2) throw ConstraintError("each N must be at least 2");
        if (k > 0 && n_list[k] <= n_list[k - 1])
            throw ConstraintError("the N sweep must be strictly increasing");
    }
    if (n_paths < 100) throw UsageError("the study needs at least 100 paths per N");

    ScalingStudy study;
    study.horizon = horizon;
    study.dt = dt;
    study.alpha = alpha;
    study.n_paths = n_paths;
    double nan = std::numeric_limits<double>::quiet_NaN();

    for (long n : n_list) {
        ScalingRow row;
        row.n = n;
        row.full_energy_mean = nan;
        row.partial_energy_mean = nan;
        try {
            sde::SimConfig base;
            base.n_particles = n;
            base.dim = kernel.exponents.d;
            base.horizon = horizon;
            base.dt = dt;
            base.diffusion = 1.0;
            base.kernel = kernel;
            base.initial_law.kind = sde::InitialLawKind::Gaussian;
            base.initial_law.mean = {0.0};
            base.initial_law.var = {1.0};
            base.seed = rng::mix(seed, uint64_t(n));

            // Full transform: reference = independent Brownian particles.
            auto full = sample_functionals(base, 0, n_paths, false, true);
            row.full_energy_mean = mean_of(full.energies);
            row.full_exp_moment =
                exp_moment(full.energies, alpha, 2000, rng::mix(seed, uint64_t(n) + 2));

            // Partial transform: reference = first particle driftless, the
            // rest interacting among themselves (same path seeds — common
            // random numbers against the full column).
            sde::SimConfig partial_cfg = base;
            partial_cfg.partial_r = 1;
            auto partial = sample_functionals(partial_cfg, 1, n_paths, false);
            row.partial_energy_mean = mean_of(partial.energies);
            row.partial_exp_moment =
                exp_moment(partial.energies, alpha, 2000, rng::mix(seed, uint64_t(n) + 1));
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        study.rows.push_back(std::move(row));
    }
    return study;
}

} // namespace chaoslab::girsanov
