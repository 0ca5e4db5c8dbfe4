#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/kernels.hpp"

/// Euler–Maruyama time stepping of the N-particle interaction system, its
/// partial-drift variant (first r particles driftless, the rest coupled
/// only among themselves), plain driftless ensembles, and linear SDEs with
/// an externally supplied mean-field drift.  All randomness is counter
/// indexed, so a (config, seed) pair pins the trajectory bit-for-bit
/// regardless of thread count.
namespace chaoslab::sde {

enum class InitialLawKind { PointMass, Gaussian, UniformBox };

/// Initial law of the i.i.d. particle positions.  All three families have
/// finite moments of every order, satisfying the beta > 2 moment
/// requirement of the convergence theory.
struct InitialLaw {
    InitialLawKind kind = InitialLawKind::Gaussian;
    std::vector<double> mean; ///< point mass location / Gaussian mean
    std::vector<double> var;  ///< Gaussian per-axis variances
    std::vector<double> lo, hi; ///< uniform box corners

    /// Throws ConstraintError when the family's parameters are malformed
    /// for dimension `dim` (sizes must be 1 — broadcast — or dim).
    void validate(int dim) const;
    double sample(uint64_t seed, uint32_t stream, int axis, int dim) const;
};

struct SimConfig {
    long n_particles = 1;
    int dim = 1;
    double horizon = 1.0;
    double dt = 0.01;
    double diffusion = std::numbers::sqrt2; ///< sigma, coefficient of dW
    kernels::KernelSpec kernel;
    InitialLaw initial_law;
    uint64_t seed = 0;
    std::optional<double> taming; ///< cap |drift| <= taming/sqrt(dt) when set
    long partial_r = 0;           ///< 0 = full system

    /// round(horizon / dt); validate() checks the rounding is exact to 1e-9.
    long steps() const;
    void validate() const;
};

struct ParticleEnsemble {
    double time = 0.0;
    long step_index = 0;
    long n = 0;
    int dim = 1;
    /// Axis-major: positions[axis * n + i].
    std::vector<double> positions;
    /// Per-particle noise stream ids (defaults to the particle index;
    /// carried explicitly so permutation tests can permute them).
    std::vector<uint32_t> streams;

    double at(long i, int axis) const { return positions[std::size_t(axis) * n + i]; }
    double& at(long i, int axis) { return positions[std::size_t(axis) * n + i]; }
};

struct TrajectoryBlock {
    long n = 0;
    int dim = 1;
    double dt = 0.0;
    double diffusion = 0.0;
    uint64_t seed = 0;
    long record_every = 1;
    std::string kernel_name;

    std::vector<double> times; ///< strictly increasing, one per snapshot
    std::vector<std::vector<double>> snapshots; ///< axis-major, one per time
    bool has_increments = false;
    /// Brownian increments sqrt(dt) * xi per step (no sigma factor),
    /// axis-major; present only when requested at record_every = 1.
    std::vector<std::vector<double>> increments;

    /// Integration steps covered by the block (from the time span, not the
    /// snapshot count — snapshots may be thinned by record_every).
    long n_steps() const {
        return times.size() < 2 ? 0 : std::lround((times.back() - times.front()) / dt);
    }
    /// Snapshot index whose time matches t to within dt/2; UsageError if absent.
    std::size_t index_at(double t) const;
};

/// Draw the i.i.d. initial configuration (streams i = 0..N-1).
ParticleEnsemble sample_initial(const SimConfig& config);

/// One Euler–Maruyama step of the (possibly partial-drift) system.
/// Pre: state.time + dt <= horizon + dt/2.  Throws BlowUpError naming the
/// first offending particle when a position turns non-finite.
ParticleEnsemble step(const SimConfig& config, const ParticleEnsemble& state);

/// Iterate step() from a fresh initial sample, recording every
/// record_every-th snapshot plus the final one.  keep_increments requires
/// record_every == 1 (the weight functionals need aligned grids).
TrajectoryBlock run(const SimConfig& config, long record_every = 1,
                    bool keep_increments = false);

/// As run(), but starting from the given state (used by permutation and
/// coupling tests).
TrajectoryBlock run_from(const SimConfig& config, ParticleEnsemble state,
                         long record_every = 1, bool keep_increments = false);

/// Drift field for the linearized (frozen-law) dynamics: called once per
/// step with the whole ensemble (axis-major, n*dim) and fills all drifts,
/// so law-averaged drifts can batch their inner loop.
using FieldDrift = std::function<void(double t, std::span<const double> positions,
                                      std::span<double> out)>;

/// Euler–Maruyama with an external drift field instead of pairwise
/// interaction; same determinism and blow-up contracts.
TrajectoryBlock run_linear(const SimConfig& config, const FieldDrift& drift,
                           long record_every = 1, bool keep_increments = false);

/// ---- persistence ---------------------------------------------------------

/// Little-endian binary layout with a versioned magic header (documented
/// in the README); re-writing the same block is byte-identical.
void write_trajectory(const std::filesystem::path& path, const TrajectoryBlock& traj);
TrajectoryBlock read_trajectory(const std::filesystem::path& path);

/// CSV of selected particles' coordinates over time: header
/// time,p<i>_x<axis>,... with '.' decimal separator.
void export_marginals_csv(const std::filesystem::path& path, const TrajectoryBlock& traj,
                          std::span<const long> particles);

} // namespace chaoslab::sde
