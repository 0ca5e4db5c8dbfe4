#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

/// Shared estimation helpers: moments, numerically safe log-mean-exp,
/// bootstrap confidence intervals, log-log slope fits, the standard normal
/// cdf/quantile, and the empirical transport distances used by the chaos
/// diagnostics (exact 1-d W1, sliced W1, energy distance).
namespace chaoslab::stats {

struct Moments {
    double mean = 0.0;
    double var = 0.0; ///< unbiased sample variance
    double m4 = 0.0;  ///< fourth central moment (biased, 1/n)
    std::size_t n = 0;
};

Moments moments(std::span<const double> v);

/// log( (1/n) sum exp(v_i) ) with the max subtracted before exponentiating,
/// so exponents of order +-1e4 are handled without overflow.
double log_mean_exp(std::span<const double> v);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap for an arbitrary statistic of an i.i.d. sample.
/// The interval is widened, if necessary, to contain the point estimate.
Interval bootstrap_ci(std::span<const double> v,
                      const std::function<double(std::span<const double>)>& statistic,
                      int n_resamples, uint64_t seed, double level = 0.95);

Interval bootstrap_mean_ci(std::span<const double> v, int n_resamples, uint64_t seed,
                           double level = 0.95);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Least squares y = a + b x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least squares on (log x, log y); all inputs must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);

/// Standard normal quantile (Wichura's PPND16 rational approximations,
/// |error| < 1e-15 on (0, 1)).  Throws ConstraintError outside (0, 1).
double normal_quantile(double u);

/// W1 between the empirical measure of `samples` and the distribution with
/// the given quantile function, by the quantile coupling with midpoint
/// evaluation: (1/n) sum |x_(i) - Q((i-0.5)/n)|.  Sorts a copy.
double w1_vs_quantile(std::span<const double> samples,
                      const std::function<double(double)>& quantile);

/// Exact W1 between two 1-d empirical measures (any sizes, equal weights).
double w1_empirical(std::span<const double> a, std::span<const double> b);

/// Point cloud with axis-major storage: coordinate `axis` of point i lives
/// at data[axis * n + i].
struct Cloud {
    const double* data = nullptr;
    std::size_t n = 0;
    int dim = 1;
    double at(std::size_t i, int axis) const { return data[std::size_t(axis) * n + i]; }
};

/// Sliced W1: average over `n_slices` random unit directions (fixed by
/// `seed`) of the exact 1-d W1 between the projected clouds.
double sliced_w1(const Cloud& a, const Cloud& b, int n_slices, uint64_t seed);

/// Energy distance sqrt(2 E|X-Y| - E|X-X'| - E|Y-Y'|) with U-statistic
/// within-terms; Euclidean norm on R^dim.
double energy_distance(const Cloud& a, const Cloud& b);

} // namespace chaoslab::stats
