#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaoslab/meanfield.hpp"
#include "chaoslab/sde_engine.hpp"

/// Propagation-of-chaos diagnostics: distance of the empirical time-t
/// marginal to the limit law, fourth-moment tightness ratios, the
/// martingale-problem residual functional
///   G(μ^N) = (1/N) Σ_i φ(X^i_{t₁..t_a}) [ f(X^i_t) − f(X^i_s)
///            − ∫_s^t ( (σ²/2) Δf(X^i_u) + ∇f(X^i_u)·(b ⋆ μ^N_u)(X^i_u) ) du ],
/// and tagged-particle independence.  Every study simulates its own runs
/// (streaming, one run in memory at a time per worker) and reports a
/// series over N with bootstrap confidence intervals and a log-log slope.
namespace chaoslab::chaos {

struct SeriesEntry {
    double x = 0.0; ///< abscissa (N, or time gap)
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct DiagnosticsReport {
    std::string name;
    std::vector<SeriesEntry> series;
    std::optional<double> fitted_slope; ///< log value vs log abscissa
    std::map<std::string, std::string> metadata;
};

/// C²_b test function with analytic derivatives (closed catalogue —
/// finite-difference Laplacians inside an MC estimator bias it silently).
struct TestFunction {
    std::string name;
    std::function<double(std::span<const double>)> value;
    std::function<void(std::span<const double>, std::span<double>)> gradient;
    std::function<double(std::span<const double>)> laplacian;
};

/// "cos": x ↦ cos(a·x) (frequency defaults to all-ones);
/// "inverse-quadratic": x ↦ 1/(1+|x|²).  UsageError for other names.
TestFunction test_function(const std::string& name, std::span<const double> frequency = {});
std::vector<std::string> test_function_names();

/// Bounded weight of one particle's positions at the early times
/// (early[k] = position at early_times[k], size d each).
using PathWeight = std::function<double(std::span<const std::vector<double>>)>;

/// "one", "zero", or "tanh" (product of tanh of the first coordinate over
/// the early times).  UsageError for other names.
PathWeight path_weight(const std::string& name);

/// Bounded scalar observable of a position: "one", "tanh", or "cos"
/// (first coordinate).  UsageError for other names.
std::function<double(std::span<const double>)> scalar_observable(const std::string& name);

// ---------------------------------------------------------------- studies

enum class DistanceMethod { ExactW1, SlicedW1, EnergyDistance };

struct MarginalStudyParams {
    std::vector<long> n_list;
    double t = 1.0;
    DistanceMethod method = DistanceMethod::ExactW1;
    int n_slices = 16;                ///< SlicedW1 only
    long n_runs = 8;                  ///< independent realizations per N
    long reference_samples = 20000;   ///< reference draws for cloud methods
};

/// Distance of the empirical time-t marginal to the reference marginal,
/// per N, averaged over runs, with the slope of log distance vs log N.
/// ExactW1 requires d = 1 and compares against reference quantiles; the
/// cloud methods compare against reference draws.  UsageError when the
/// reference is not at time t.
DiagnosticsReport marginal_distance(const sde::SimConfig& base,
                                    const MarginalStudyParams& params,
                                    const meanfield::DensityEstimate& reference);

struct TimePair {
    double s = 0.0;
    double t = 0.0;
};

/// E |X_t − X_s|⁴ / (t−s)² per pair, averaged over particles with a
/// bootstrap CI treating particles as decorrelated; abscissa is t−s.
/// Pairs with s = t are skipped with a note in the metadata.  Both times
/// must be recorded in the block.
DiagnosticsReport tightness_moment(const sde::TrajectoryBlock& traj,
                                   std::span<const TimePair> pairs);

/// The residual G(μ^N) of one stored realization: time integrals are
/// left-endpoint Riemann sums on the recorded grid between s and t, the
/// empirical drift averages the kernel over the whole ensemble (self pair
/// masked with the rest of the singular set), and σ is the block's
/// diffusion.  UsageError when any needed time is not on the recorded
/// grid.
double g_of_trajectory(const sde::TrajectoryBlock& traj, const kernels::KernelSpec& kernel,
                       const TestFunction& f, const PathWeight& phi,
                       std::span<const double> early_times, double s, double t);

struct GStudyParams {
    std::vector<long> n_list;
    std::string f = "cos";
    std::vector<double> frequency;   ///< cos frequency (empty = all-ones)
    std::string phi = "one";
    std::vector<double> early_times; ///< 0 < t₁ ≤ … ≤ t_a ≤ s
    double s = 0.5;
    double t = 1.0;
    long n_runs = 200;
};

/// E[G(μ^N)²] per N over independent runs, with CI and log-log slope
/// (the propagation-of-chaos residual decays like 1/N).
DiagnosticsReport g_functional_study(const sde::SimConfig& base, const GStudyParams& params);

struct IndependenceParams {
    std::vector<long> n_list;
    std::string g = "tanh";
    std::string h = "tanh";
    double t = 1.0;
    long n_runs = 200;
};

/// |Cov(g(X¹_t), h(X²_t))| per N.  Exchangeability lets the pair moment
/// be averaged over all ordered pairs within each run; the product of
/// means is removed with a cross-run unbiased estimator.  Bootstrap CI
/// over runs; with a single run the (biased) within-run estimate is
/// reported and flagged in the metadata instead of a CI.
DiagnosticsReport independence_study(const sde::SimConfig& base,
                                     const IndependenceParams& params);

} // namespace chaoslab::chaos
