#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/sde_engine.hpp"

/// Reference solutions of the mean-field limit equation
///   dX_t = (∫ b(t, X_t, y) ρ_t(y) dy) dt + σ dW_t,   ρ_t = Law(X_t):
/// a closed form for the linear pull kernel, Picard iteration over the law
/// with sample-average drift and common random numbers, and a 1-d
/// conservative finite-volume Fokker–Planck solver.  The two numerical
/// methods cross-check each other; neither is privileged.
namespace chaoslab::meanfield {

struct GridSpec {
    int dim = 1;
    std::vector<double> lo, hi; ///< box corners, size dim
    std::vector<long> cells;    ///< cells per axis, size dim

    void validate() const; ///< ConstraintError on malformed boxes
    long n_cells() const;
    double width(int axis) const;
    double center(int axis, long i) const;
    double cell_volume() const;
};

enum class DensityKind {
    Grid,    ///< cell-averaged values on a rectangular lattice (d ≤ 2)
    Samples, ///< kernel density estimate carried by its samples (any d)
    Gaussian ///< closed form: product of N(mean_a, var) over axes
};

/// One time slice of a probability density.  Nonnegative with unit mass
/// (within 1e-3 for the numerical kinds; midpoint rule on grids).
struct DensityEstimate {
    DensityKind kind = DensityKind::Gaussian;
    double time = 0.0;
    int dim = 1;

    // Grid kind
    GridSpec grid;
    std::vector<double> values; ///< row-major, axis 0 fastest

    // Samples kind.  bandwidth > 0 pins the KDE bandwidth on every axis;
    // bandwidth = 0 means "Silverman's rule at evaluation time".
    std::vector<double> samples; ///< axis-major, samples[axis * n + i]
    long n_samples = 0;
    double bandwidth = 0.0;

    // Gaussian kind (isotropic)
    std::vector<double> mean;
    double var = 1.0;

    double mass() const;
    /// L^r norm, r ≥ 1.  Sample-based estimates are projected onto an
    /// automatic grid first (KDE), which biases the norm high by O(h) for
    /// peaked densities — callers comparing against sharp decay rates
    /// should prefer grid or closed-form estimates.
    double lr_norm(double r) const;
    /// 1-d quantile function (UsageError in higher dimension).
    double quantile(double u) const;
    /// i.i.d. draws (Gaussian any d; Grid d = 1 by quantile transform).
    std::vector<double> draw_samples(long n, uint64_t seed) const;
};

/// Mean and variance flow of the linear pull kernel b(x,y) = −(x−y):
/// the law stays Gaussian with constant mean and
/// v_t = σ²/2 + (v₀ − σ²/2) e^{−2t} per coordinate.
DensityEstimate exact_ou_density(double t, std::span<const double> mean0, double var0,
                                 double sigma);

/// Classic Gaussian-reference rule σ̂ (4 / (3n))^{1/5} for one coordinate.
double silverman_bandwidth(std::span<const double> samples);

/// Project samples onto a grid through a product-Gaussian KDE (d ≤ 2 for
/// public use).  bandwidth = 0 applies Silverman's rule per axis.
DensityEstimate kde_on_grid(const DensityEstimate& samples_density, const GridSpec& grid);

struct BandwidthRule {
    enum class Kind { Silverman, Fixed } kind = Kind::Silverman;
    double h = 0.0; ///< Fixed only

    static BandwidthRule silverman() { return {Kind::Silverman, 0.0}; }
    static BandwidthRule fixed(double h) { return {Kind::Fixed, h}; }
};

struct PicardResult {
    std::vector<double> times;
    /// Final iterate: one sample-based estimate per recorded time.
    std::vector<DensityEstimate> densities;
    bool converged = false;
    long iterations_run = 0;
    /// max-over-times sliced-W1 between successive iterates, one entry
    /// per completed iteration after the first.
    std::vector<double> successive_distance;
};

/// Fixed-point iteration on the law: start from the initial law frozen in
/// time, repeatedly simulate the linear dynamics whose drift averages the
/// kernel over the previous iterate's samples (singular pairs masked),
/// and stop when successive iterates are sliced-W1-closer than `tolerance`
/// at every recorded time.  The same seed drives every iteration (common
/// random numbers), so the iteration is deterministic and contraction
/// shows up pathwise.  Pre: n_ref ≥ 1000, iterations ≥ 1.
PicardResult picard_solve(const sde::SimConfig& config, long iterations, long n_ref,
                          BandwidthRule bandwidth_rule = BandwidthRule::silverman(),
                          double tolerance = 1e-3);

struct FokkerPlanckResult {
    GridSpec grid;
    std::vector<double> times;
    std::vector<DensityEstimate> densities;
    long total_substeps = 0;
};

/// Explicit conservative finite-volume solve of
///   ∂_t ρ = (σ²/2) ρ″ − ∂_x((k∗ρ) ρ)
/// on grid with no-flux boundaries and upwinded advection; the kernel must
/// be of convolution type b(t,x,y) = k(t, x−y) (all builtins are), and the
/// singular cell of the convolution contributes 0.  Each macro step of
/// dt_pde is split into enough substeps to satisfy the stability bound
/// dt ≤ 0.4 min(Δx²/σ², Δx/max|k∗ρ|); NumericalError when the required
/// splitting exceeds 65536.  Mass is conserved to roundoff.
FokkerPlanckResult fokker_planck_1d(const kernels::KernelSpec& kernel, const GridSpec& grid,
                                    const DensityEstimate& initial, double sigma, double horizon,
                                    double dt_pde, int n_snapshots = 11);

struct DecayPoint {
    double t = 0.0;
    double value = 0.0;    ///< ‖ρ_t‖_r · t^{(d/2)(1 − 1/r)}
    bool projected = false; ///< true when a KDE grid projection supplied the norm
};

/// Normalized L^r-norm series whose boundedness is the density-decay
/// check for point-mass initial data.  Pre: ≥ 4 estimates at strictly
/// increasing positive times spanning at least a decade; r ≥ 1.
std::vector<DecayPoint> density_decay_check(std::span<const DensityEstimate> estimates,
                                            double r);

} // namespace chaoslab::meanfield
