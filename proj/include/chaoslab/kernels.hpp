#pragma once

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>

/// Interaction kernels b(t,x,y), their dominating functions h_t(z), their
/// singular sets, and the integrability classification that decides which
/// well-posedness regime (global vs. local-plus-tail) a kernel falls in.
namespace chaoslab::kernels {

/// Integrability orders (p in space, q in time) and the space dimension.
struct ExponentPair {
    double p = 8.0;
    double q = 8.0;
    int d = 1;

    /// Throws ConstraintError unless p > 2, q > 2, d >= 1.
    void validate() const;

    /// d/p + 2/q as a double (diagnostic value; the admissibility verdict
    /// below does not rely on this rounded sum).
    double sum() const { return double(d) / p + 2.0 / q; }

    /// Strict test d/p + 2/q < 1.  When p and q are ratios of small
    /// integers the comparison is exact in integer arithmetic, so boundary
    /// cases like d/p + 2/q = 1 classify deterministically; otherwise a
    /// floating comparison with a 1e-12 safety margin is used.
    bool admissible() const;

    /// (q-2)/q - d/p, the window exponent of the Gaussian drift bound.
    double window_exponent() const { return (q - 2.0) / q - double(d) / p; }
};

/// Dispatch tag for the built-in catalogue; Custom means "only the
/// std::function members are usable".
enum class BuiltinId { Custom, Zero, LinearOU, BoundedLipschitz, Riesz, RieszTruncated, KappaRiesz };

/// Numeric parameters of built-in kernels (unused fields keep defaults).
struct BuiltinParams {
    double alpha = 0.0; ///< singularity order
    double s = 1.0;     ///< Riesz orientation, +1 repulsive / -1 attractive
    double c = 1.0;     ///< bound of the bounded-Lipschitz kernel
    double kappa = 1.0; ///< Lipschitz factor of the kappa-riesz kernel
};

using DriftFn = std::function<void(double t, std::span<const double> x,
                                   std::span<const double> y, std::span<double> out)>;
using DominatorFn = std::function<double(double t, std::span<const double> z)>;
using SingularFn = std::function<bool(double t, std::span<const double> x,
                                      std::span<const double> y)>;

/// An interaction kernel with everything the rest of the toolkit needs:
/// the drift b, a dominating |b(t,x,y)| <= h_t(x-y), the singular-set
/// predicate, declared integrability exponents, and (when the kernel obeys
/// the local-integrability regime) the tail function H(T).
///
/// Immutable after construction; evaluations are pure and thread-safe.
struct KernelSpec {
    std::string name;
    DriftFn drift;
    DominatorFn dominator;
    SingularFn singular_at;
    ExponentPair exponents;

    /// H(T) = integral over [0,T] of sup_{|x|>1} h_t(x)^2; present only
    /// when the kernel claims the local regime.  Must be nondecreasing.
    std::optional<std::function<double(double)>> h2_tail;
    bool claims_h2 = false;

    /// Fast-path/analytics hooks for built-ins --------------------------
    BuiltinId id = BuiltinId::Custom;
    BuiltinParams params;
    /// h_t(z) = radial_profile(t, |z|) when the dominator is radial.
    std::optional<std::function<double(double t, double r)>> radial_profile;
    /// Analytic integral of h_t^p over {|z| > R} (+inf when divergent).
    std::optional<std::function<double(double t, double p, double R)>> tail_lp;
    /// Radius beyond which h vanishes (inf when not compactly supported).
    double support_radius = std::numeric_limits<double>::infinity();
    /// Fully resolved builtin parameters (defaults materialized; always
    /// includes d, p, q), for canonical config rendering.
    std::map<std::string, double> parameters;
};

enum class Admissibility { H1, H2Only, Inadmissible };

struct Classification {
    Admissibility verdict = Admissibility::Inadmissible;
    double exponent_sum = 0.0; ///< d/p + 2/q
    bool exponent_ok = false;
    bool global_lp_finite = false;
    bool local_lp_finite = false;
    bool h2_tail_ok = false; ///< present, finite, nondecreasing
    bool best_effort = false; ///< no radial profile: quadrature probing only
    double global_lp_value = 0.0; ///< integral of h^p when finite (else inf)
};

/// Classify a kernel: H1 needs the exponent inequality plus a finite
/// global L^p norm of the dominator (verified by quadrature on |z| <= R
/// plus the analytic tail for built-ins); H2-only needs the exponent
/// inequality, local L^p integrability and a valid h2_tail.
///
/// Throws ConstraintError for invalid exponents, for an H2 claim without
/// h2_tail, and for a decreasing h2_tail.
Classification classify(const KernelSpec& spec, double radius = 8.0);

/// Built-in catalogue.  Names: zero, linear-ou, bounded-lipschitz, riesz,
/// riesz-truncated, kappa-riesz (accepted alias: paper-h2-example).
/// Recognized parameter keys: d, p, q, alpha, s, c, kappa.
/// Throws UsageError for unknown names, ConstraintError for out-of-range
/// or unknown parameters.
KernelSpec builtin(const std::string& name,
                   const std::map<std::string, double>& parameters = {});

/// All catalogue names (canonical spellings, for CLI help and configs).
std::span<const std::string> builtin_names();

/// ---- shared pairwise-drift evaluators (structure-of-sequences layout,
///      positions[axis * n + i]) -------------------------------------------

/// Interaction drift of every particle: out[axis*n+i] = (1/n) sum over
/// j != i of b(t, x_i, x_j), each summand masked to zero when singular_at
/// holds or the evaluation is non-finite.  With partial_r = r > 0,
/// particles 0..r-1 get zero drift and particles r..n-1 sum only over
/// j in {r..n-1} (normalization stays 1/n).
void system_drift(const KernelSpec& spec, double t, const double* positions, long n, int d,
                  long partial_r, double* out, int threads = 0);

/// Change-of-drift field beta^{(r)}: coordinates 0..r-1 carry the full
/// interaction drift (as in system_drift with partial_r = 0), coordinates
/// r..n-1 carry (1/n) sum over i in {0..r-1} of b(t, x_j, x_i).  r = 0
/// reduces to the full drift for every coordinate.
void beta_r(const KernelSpec& spec, double t, const double* positions, long n, int d, long r,
            double* out, int threads = 0);

/// Mean interaction against a sample cloud: out_row(i) = (1/m) sum over
/// cloud points y of masked b(t, x_i, y).  Queries are axis-major
/// (n_q x d), the cloud likewise (m x d).  Used for mean-field drifts and
/// for the empirical-generator drift term (pass the ensemble itself as the
/// cloud; self pairs are masked or vanish).
void mean_drift(const KernelSpec& spec, double t, const double* queries, long n_q,
                const double* cloud, long m, int d, double* out, int threads = 0);

} // namespace chaoslab::kernels
