#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/sde_engine.hpp"

/// Drift-energy path functionals, full and partial change-of-drift
/// log-weights, and overflow-safe Monte Carlo exponential-moment
/// estimators.  The central objects are, for a trajectory X of the
/// N-particle system,
///
///   energy  = ∫ |β_t(X)|² dt         (left-endpoint Riemann sum)
///   log Z   = −∫ β_t(X)·dW_t − energy/2
///
/// where β is either the full interaction drift (r = 0, all N coordinates
/// carry their pairwise mean-field drift) or the partial vector field
/// (r ≥ 1: the first r coordinates carry their full drifts, coordinates
/// r+1..N only the (1/N)-weighted pull of the first r particles).  The
/// discrete weight matches the Euler–Maruyama measure change exactly, so
/// E[exp(log Z)] = 1 over reference paths for any horizon and step size.
namespace chaoslab::girsanov {

struct PathFunctionalAccumulator {
    double drift_energy = 0.0; ///< running Riemann sum of ∫|β_t|² dt, ≥ 0
    double ito_sum = 0.0;      ///< running Σ β_t · ΔW_t (needs increments)
    long r = 0;                ///< 0 = full drift, else partial field
    bool has_ito = false;

    /// log Z = −ito_sum − drift_energy/2; UsageError when the trajectory
    /// carried no Brownian increments.
    double log_weight() const;
};

/// Evaluate the (config.kernel, r) drift functional along a stored
/// trajectory: left-endpoint Riemann sums on the recorded grid, singular
/// or non-finite pair evaluations contributing 0.  The Itô sum is filled
/// only when the block stores increments on the full step grid.
/// Throws UsageError when the block's (n, dim, dt) disagree with config
/// or r is out of range.
PathFunctionalAccumulator drift_energy(const sde::TrajectoryBlock& traj,
                                       const sde::SimConfig& config, long r);

/// log Z_T^{(r)} of the stored trajectory; UsageError without increments.
double weight(const sde::TrajectoryBlock& traj, const sde::SimConfig& config, long r);

struct ExpMomentEstimate {
    double alpha = 0.0;        ///< exponent multiplier
    double log_mean_exp = 0.0; ///< log (1/n) Σ exp(α F_j), finite paths only
    double ci_low = 0.0;       ///< 95% percentile bootstrap
    double ci_high = 0.0;
    long n_paths = 0;
    double diverged_fraction = 0.0; ///< share of non-finite functionals
};

/// log E[exp(α F)] from i.i.d. functional values, max-shifted so that
/// exponents of any size are representable.  Non-finite functionals are
/// excluded from the mean and reported in diverged_fraction instead of
/// collapsing the estimate to infinity.
/// Pre: ≥ 100 paths (UsageError), ≥ 1000 bootstrap resamples.
/// Throws EstimationError when every path diverged.
ExpMomentEstimate exp_moment(std::span<const double> functionals, double alpha,
                             int n_resamples = 2000, uint64_t seed = 0);

/// Law of the companion process Y in the two-body energy study.
enum class CompanionLaw {
    Brownian, ///< independent standard Brownian motion started at frozen_y
    Frozen    ///< constant path Y_t = frozen_y
};

/// Per-path energies ∫₀ᵀ |b(t, w_t, Y_t)|² dt for a single Brownian
/// particle w against an independent companion Y — the two extreme laws
/// probing uniformity of the exponential bound over the law of Y.
/// frozen_y (size d, or empty = origin) is Y's start/frozen location.
std::vector<double> pair_energies(const kernels::KernelSpec& kernel, double horizon,
                                  double dt, long n_paths, uint64_t seed,
                                  CompanionLaw companion,
                                  std::span<const double> frozen_y = {});

/// Per-path drift functionals over independent reference runs of `config`
/// (config.partial_r selects the simulated reference system; with
/// driftless_reference the simulation drops the drift entirely — N
/// independent Brownian particles — while the functional still evaluates
/// config.kernel).  Path j runs with seed mix(config.seed, j); paths are
/// embarrassingly parallel and the output order is by path index.
struct FunctionalSample {
    std::vector<double> energies;
    std::vector<double> log_weights; ///< empty unless want_weights
};
FunctionalSample sample_functionals(const sde::SimConfig& config, long r, long n_paths,
                                    bool want_weights, bool driftless_reference = false);

struct ScalingRow {
    long n = 0;
    double full_energy_mean = 0.0;    ///< mean ∫|B^N|² dt on driftless runs
    double partial_energy_mean = 0.0; ///< mean ∫|β^{(1)}|² dt on partial runs
    std::optional<ExpMomentEstimate> full_exp_moment;
    std::optional<ExpMomentEstimate> partial_exp_moment;
    std::string error; ///< empty when this N succeeded
};

struct ScalingStudy {
    double horizon = 0.0;
    double dt = 0.0;
    double alpha = 0.0;
    long n_paths = 0;
    std::vector<ScalingRow> rows;
};

/// Growth-in-N study: for each N simulate (i) N driftless particles and
/// the full-drift energy, expected to grow ~N for nontrivial kernels, and
/// (ii) the partial system (first particle driftless, the rest coupled
/// among themselves) with the r = 1 energy and its exponential moment,
/// expected bounded in N.  Initial law: standard Gaussian; diffusion 1.
/// Estimation failures are captured per N without aborting the sweep.
/// Pre: n_list strictly increasing, every entry ≥ 2.
ScalingStudy novikov_scaling_study(const kernels::KernelSpec& kernel,
                                   std::span<const long> n_list, double horizon, double dt,
                                   double alpha, long n_paths, uint64_t seed);

} // namespace chaoslab::girsanov
