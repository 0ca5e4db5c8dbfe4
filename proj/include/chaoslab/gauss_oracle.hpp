#pragma once

#include <span>
#include <vector>

#include "chaoslab/kernels.hpp"

/// Analytic and quadrature oracles around the Gaussian heat kernel
/// g_t(x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)): closed-form L^p norms, the
/// windowed convolution bound
///     I(t1,t2; shift) = int_{t1}^{t2} int h_t(y + shift)^2 g_{t-t1}(y) dy dt
/// with its width exponent (q-2)/q - d/p, and the conditioning windows the
/// exponential-moment estimates are built from.
namespace chaoslab::gauss {

/// C_p = (2 pi)^{-(d/2)(1-1/p)} p^{-d/(2p)}, so that ||g_t||_p = C_p /
/// t^{(d/2)(1-1/p)}.
double heat_kernel_lp_constant(double p, int d);

/// Closed-form ||g_t||_p; throws ConstraintError for t <= 0 or p < 1.
double heat_kernel_lp_norm(double t, double p, int d);

struct GaussianBoundReport {
    double t1 = 0.0;
    double t2 = 0.0;
    double integral_value = 0.0; ///< I for the single window (worst shift)
    double exponent = 0.0;       ///< (q-2)/q - d/p from the kernel's exponents
    double fitted_slope = 0.0;   ///< log-log slope across a sweep (NaN for single windows)
    double c0_estimate = 0.0;    ///< max over windows of I / width^exponent
};

/// One windowed integral, quadrature-refined until two successive
/// refinement levels agree to relative 1e-4.  The time integrand is
/// singular only at t = t1; it is handled by the substitution u = t - t1
/// with a graded geometric mesh.  Throws NumericalError (carrying the last
/// two estimates) when refinement fails to converge.
GaussianBoundReport lemma1_integral(const kernels::KernelSpec& spec, double t1, double t2,
                                    std::span<const double> shift, double rel_tol = 1e-4);

struct Window {
    double t1 = 0.0;
    double t2 = 0.0;
};

struct SweepPoint {
    double width = 0.0;
    double integral = 0.0;   ///< worst (largest) I over the shift grid
    double shift_norm = 0.0; ///< |shift| attaining the worst I
    double bound = 0.0;      ///< c0_estimate * width^exponent
};

struct SweepReport : GaussianBoundReport {
    std::vector<SweepPoint> points;
};

/// Sweep windows x shifts; fits log I vs log width over the worst shift
/// per window and reports c0_estimate = max I / width^exponent.
/// Preconditions: >= 4 windows, widths spanning at least a factor 8 (in
/// particular not all identical); an empty shift list means shift = 0.
SweepReport lemma1_sweep(const kernels::KernelSpec& spec, std::span<const Window> windows,
                         const std::vector<std::vector<double>>& shifts = {});

struct ConditioningWindows {
    double lemma3_window = 0.0; ///< (c0 * kappa)^{-1/e}
    double est1_delta = 0.0;    ///< min(1 / (2 c0^2 T alpha^2), T)
    long n_windows = 0;         ///< floor(T / est1_delta)
};

/// Window sizes under which the windowed bound is small enough to chain:
/// e = (q-2)/q - d/p must be positive (throws ConstraintError otherwise).
ConditioningWindows conditioning_windows(double c0, double kappa, double T,
                                         const kernels::ExponentPair& exponents, double alpha);

} // namespace chaoslab::gauss
