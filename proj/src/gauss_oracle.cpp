#include "chaoslab/gauss_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/quadrature.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab::gauss {

double heat_kernel_lp_constant(double p, int d) {
    if (p < 1.0) throw ConstraintError("heat kernel L^p norm requires p >= 1");
    if (d < 1) throw ConstraintError("heat kernel L^p norm requires d >= 1");
    return std::pow(2.0 * M_PI, -0.5 * d * (1.0 - 1.0 / p)) * std::pow(p, -0.5 * d / p);
}

double heat_kernel_lp_norm(double t, double p, int d) {
    if (!(t > 0.0)) throw ConstraintError("heat kernel L^p norm requires t > 0");
    return heat_kernel_lp_constant(p, d) * std::pow(t, -0.5 * d * (1.0 - 1.0 / p));
}

namespace {

/// exp(-x) I_0(x) for x >= 0 (Abramowitz & Stegun 9.8.1/9.8.2, |err| ~ 2e-7).
double bessel_i0_scaled(double x) {
    if (x < 3.75) {
        double t = (x / 3.75) * (x / 3.75);
        double i0 = 1.0 + t * (3.5156229 + t * (3.0899424 + t * (1.2067492 +
                    t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
        return std::exp(-x) * i0;
    }
    double t = 3.75 / x;
    double poly = 0.39894228 + t * (0.01328592 + t * (0.00225319 + t * (-0.00157565 +
                  t * (0.00916281 + t * (-0.02057706 + t * (0.02635537 +
                  t * (-0.01647633 + t * 0.00392377)))))));
    return poly / std::sqrt(x);
}

/// Angular average of g_tau over the sphere of radius r centered at
/// distance s from the origin of the Gaussian:
///   A_d(r, s, tau) = int_{S^{d-1}} g_tau(r u - s e_1) dsigma(u),
/// normalized so that int_0^inf r^{d-1} A_d dr = 1.
double angular_average(int d, double r, double s, double tau) {
    double gap = r - s;
    double expo = -0.5 * gap * gap / tau;
    switch (d) {
    case 1: {
        double c = 1.0 / std::sqrt(2.0 * M_PI * tau);
        double sum2 = -0.5 * (r + s) * (r + s) / tau;
        return c * (std::exp(expo) + std::exp(sum2));
    }
    case 2: {
        // (1/tau) e^{-(r-s)^2/(2 tau)} * e^{-x} I_0(x),  x = r s / tau.
        return std::exp(expo) * bessel_i0_scaled(r * s / tau) / tau;
    }
    case 3: {
        double a = r * s / tau;
        double c = 2.0 * M_PI * std::pow(2.0 * M_PI * tau, -1.5);
        if (a < 1e-12) return c * 2.0 * std::exp(-0.5 * (r * r + s * s) / tau);
        return c * std::exp(expo) * (-std::expm1(-2.0 * a)) / a;
    }
    default:
        throw UsageError("windowed Gaussian bound supports d <= 3");
    }
}

double shift_norm(std::span<const double> shift) {
    double s2 = 0.0;
    for (double v : shift) s2 += v * v;
    return std::sqrt(s2);
}

/// Spatial integral J(tau) = int h_t(u)^2 g_tau(u - shift) du for a radial
/// dominator, reduced to one radial dimension.  Quadrature-singular only
/// at r = 0 (dominator blow-up); the Gaussian peak at r ~ s is resolved
/// with panels of width ~ sqrt(tau).
double radial_space_integral(const std::function<double(double, double)>& profile, int d,
                             double t, double tau, double s, double support, int order) {
    double sigma = std::sqrt(tau);
    double r_max = std::min(support, s + 14.0 * sigma);
    if (!(r_max > 0.0)) return 0.0;
    auto f = [&](double r) {
        double h = profile(t, r);
        return h * h * std::pow(r, d - 1) * angular_average(d, r, s, tau);
    };
    // Graded mesh into the possible singularity at r = 0.
    double r_cut = std::min(r_max, std::max(0.125, 0.25 * s));
    double acc = quad::graded_lower(f, 0.0, r_cut, order, 1e-9);
    // Smooth region: panels no wider than the Gaussian scale, skipping
    // panels whose Gaussian factor is negligible.
    if (r_max > r_cut) {
        double step = std::max(sigma, (r_max - r_cut) / 256.0);
        double lo = r_cut;
        while (lo < r_max) {
            double hi = std::min(r_max, lo + step);
            double gap = std::max(0.0, std::max(lo - s, s - hi));
            if (0.5 * gap * gap / tau < 60.0) acc += quad::gl_panel(f, lo, hi, order);
            lo = hi;
        }
    }
    return acc;
}

/// Tensor-product fallback for non-radial dominators (best effort: the
/// box covers the Gaussian mass around the shift plus a fixed pad).
double box_space_integral(const kernels::KernelSpec& spec, int d, double t, double tau,
                          std::span<const double> shift, int order) {
    if (d > 3) throw UsageError("windowed Gaussian bound supports d <= 3");
    double half = 12.0 * std::sqrt(tau) + 2.0;
    double lo[3], hi[3];
    for (int a = 0; a < d; ++a) {
        double sa = a < int(shift.size()) ? shift[a] : 0.0;
        lo[a] = sa - half;
        hi[a] = sa + half;
    }
    double norm = std::pow(2.0 * M_PI * tau, -0.5 * d);
    auto f = [&](const double* u) {
        double h = spec.dominator(t, std::span<const double>(u, std::size_t(d)));
        if (!std::isfinite(h)) return 0.0;
        double q = 0.0;
        for (int a = 0; a < d; ++a) {
            double sa = a < int(shift.size()) ? shift[a] : 0.0;
            double z = u[a] - sa;
            q += z * z;
        }
        return h * h * norm * std::exp(-0.5 * q / tau);
    };
    return quad::gl_tensor(f, lo, hi, d, order);
}

double windowed_integral_at_order(const kernels::KernelSpec& spec, double t1, double t2,
                                  std::span<const double> shift, int order) {
    int d = spec.exponents.d;
    double s = shift_norm(shift);
    auto J = [&](double tau) {
        double t = t1 + tau;
        if (spec.radial_profile)
            return radial_space_integral(*spec.radial_profile, d, t, tau, s,
                                         spec.support_radius, order);
        return box_space_integral(spec, d, t, tau, shift, order);
    };
    // u = t - t1 substitution; the integrand may blow up like a power of u
    // at u = 0, which the graded mesh absorbs.
    return quad::graded_lower(J, 0.0, t2 - t1, 16, 1e-6);
}

} // namespace

GaussianBoundReport lemma1_integral(const kernels::KernelSpec& spec, double t1, double t2,
                                    std::span<const double> shift, double rel_tol) {
    if (!(t1 >= 0.0) || !(t2 > t1))
        throw ConstraintError("windowed integral requires 0 <= t1 < t2");
    if (!shift.empty() && int(shift.size()) != spec.exponents.d)
        throw UsageError("shift dimension does not match the kernel dimension");

    GaussianBoundReport rep;
    rep.t1 = t1;
    rep.t2 = t2;
    rep.exponent = spec.exponents.window_exponent();
    rep.fitted_slope = std::numeric_limits<double>::quiet_NaN();
    rep.c0_estimate = std::numeric_limits<double>::quiet_NaN();

    const int orders[] = {16, 24, 32, 48, 64};
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int order : orders) {
        double I = windowed_integral_at_order(spec, t1, t2, shift, order);
        if (std::isfinite(prev) &&
            std::abs(I - prev) <= rel_tol * std::max(std::abs(I), 1e-300)) {
            rep.integral_value = I;
            return rep;
        }
        prev = I;
    }
    throw NumericalError("windowed integral: successive quadrature refinements disagree "
                         "beyond the requested tolerance",
                         prev, prev);
}

SweepReport lemma1_sweep(const kernels::KernelSpec& spec, std::span<const Window> windows,
                         const std::vector<std::vector<double>>& shifts) {
    if (windows.size() < 4) throw UsageError("window sweep needs at least 4 windows");
    double wmin = std::numeric_limits<double>::infinity(), wmax = 0.0;
    for (const Window& w : windows) {
        double width = w.t2 - w.t1;
        if (!(width > 0.0) || !(w.t1 >= 0.0))
            throw ConstraintError("window sweep requires 0 <= t1 < t2 per window");
        wmin = std::min(wmin, width);
        wmax = std::max(wmax, width);
    }
    if (!(wmax / wmin >= 8.0))
        throw UsageError("window widths must span at least a factor of 8 "
                         "(identical-width sweeps give a degenerate fit)");

    std::vector<std::vector<double>> shift_grid = shifts;
    if (shift_grid.empty())
        shift_grid.push_back(std::vector<double>(std::size_t(spec.exponents.d), 0.0));

    SweepReport rep;
    rep.exponent = spec.exponents.window_exponent();
    rep.points.resize(windows.size());

    // Windows x shifts evaluate independently; fixed slot writes keep the
    // reduction deterministic.
    std::size_t tasks = windows.size() * shift_grid.size();
    std::vector<double> integrals(tasks);
    parallel::parallel_for(tasks, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            const Window& w = windows[k / shift_grid.size()];
            const auto& sh = shift_grid[k % shift_grid.size()];
            integrals[k] = lemma1_integral(spec, w.t1, w.t2, sh).integral_value;
        }
    });

    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
        SweepPoint pt;
        pt.width = windows[wi].t2 - windows[wi].t1;
        for (std::size_t si = 0; si < shift_grid.size(); ++si) {
            double I = integrals[wi * shift_grid.size() + si];
            if (si == 0 || I > pt.integral) {
                pt.integral = I;
                pt.shift_norm = shift_norm(shift_grid[si]);
            }
        }
        rep.points[wi] = pt;
    }

    rep.t1 = windows.front().t1;
    rep.t2 = windows.back().t2;
    rep.integral_value = rep.points.back().integral;

    bool all_positive = true;
    double c0 = 0.0;
    std::vector<double> ws, is;
    for (auto& pt : rep.points) {
        all_positive = all_positive && pt.integral > 0.0;
        if (pt.integral > 0.0) {
            ws.push_back(pt.width);
            is.push_back(pt.integral);
        }
        c0 = std::max(c0, pt.integral / std::pow(pt.width, rep.exponent));
    }
    rep.c0_estimate = c0;
    rep.fitted_slope = all_positive && ws.size() >= 2
                           ? stats::fit_loglog(ws, is).slope
                           : std::numeric_limits<double>::quiet_NaN();
    for (auto& pt : rep.points) pt.bound = c0 * std::pow(pt.width, rep.exponent);
    return rep;
}

ConditioningWindows conditioning_windows(double c0, double kappa, double T,
                                         const kernels::ExponentPair& exponents, double alpha) {
    if (!(c0 > 0.0) || !(kappa > 0.0) || !(T > 0.0) || !(alpha > 0.0))
        throw ConstraintError("conditioning_windows requires c0, kappa, T, alpha > 0");
    double e = exponents.window_exponent();
    if (!(e > 0.0))
        throw ConstraintError("window exponent (q-2)/q - d/p must be positive; got " +
                              std::to_string(e));
    ConditioningWindows w;
    w.lemma3_window = std::pow(c0 * kappa, -1.0 / e);
    w.est1_delta = std::min(1.0 / (2.0 * c0 * c0 * T * alpha * alpha), T);
    w.n_windows = long(std::floor(T / w.est1_delta + 1e-12));
    return w;
}

} // namespace chaoslab::gauss
