#include "chaoslab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "chaoslab/errors.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab::stats {

Moments moments(std::span<const double> v) {
    Moments m;
    m.n = v.size();
    if (m.n == 0) return m;
    double sum = 0.0;
    for (double x : v) sum += x;
    m.mean = sum / double(m.n);
    double s2 = 0.0, s4 = 0.0;
    for (double x : v) {
        double d = x - m.mean;
        s2 += d * d;
        s4 += d * d * d * d;
    }
    m.var = m.n > 1 ? s2 / double(m.n - 1) : 0.0;
    m.m4 = s4 / double(m.n);
    return m;
}

double log_mean_exp(std::span<const double> v) {
    if (v.empty()) throw UsageError("log_mean_exp of an empty sample");
    double mx = -HUGE_VAL;
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx; // all -inf, or a +-inf made it in
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - mx);
    return mx + std::log(acc / double(v.size()));
}

Interval bootstrap_ci(std::span<const double> v,
                      const std::function<double(std::span<const double>)>& statistic,
                      int n_resamples, uint64_t seed, double level) {
    if (v.empty()) throw UsageError("bootstrap_ci of an empty sample");
    if (n_resamples < 10) throw ConstraintError("bootstrap_ci needs >= 10 resamples");
    if (!(level > 0.0 && level < 1.0)) throw ConstraintError("bootstrap level must be in (0,1)");
    double point = statistic(v);
    std::vector<double> resample(v.size()), estimates;
    estimates.reserve(std::size_t(n_resamples));
    for (int r = 0; r < n_resamples; ++r) {
        for (std::size_t i = 0; i < v.size(); ++i)
            resample[i] = v[rng::uniform_index(seed, rng::Stream::Bootstrap, uint32_t(r),
                                               uint32_t(i), v.size())];
        estimates.push_back(statistic(resample));
    }
    std::sort(estimates.begin(), estimates.end());
    double tail = 0.5 * (1.0 - level);
    auto pick = [&](double u) {
        double pos = u * double(estimates.size() - 1);
        std::size_t i = std::size_t(pos);
        std::size_t j = std::min(i + 1, estimates.size() - 1);
        double frac = pos - double(i);
        return estimates[i] * (1.0 - frac) + estimates[j] * frac;
    };
    Interval ci{pick(tail), pick(1.0 - tail)};
    ci.lo = std::min(ci.lo, point);
    ci.hi = std::max(ci.hi, point);
    return ci;
}

Interval bootstrap_mean_ci(std::span<const double> v, int n_resamples, uint64_t seed,
                           double level) {
    return bootstrap_ci(v, [](std::span<const double> s) { return moments(s).mean; },
                        n_resamples, seed, level);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw UsageError("fit_line needs two equally sized samples with >= 2 points");
    double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-30 * std::max(1.0, sxx))
        throw UsageError("fit_line: abscissae are (numerically) identical");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw UsageError("fit_loglog requires strictly positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw ConstraintError("normal_quantile requires u in (0,1)");
    // Wichura, Applied Statistics 37 (1988), algorithm PPND16.
    double q = u - 0.5;
    if (std::abs(q) <= 0.425) {
        double r = 0.180625 - q * q;
        double num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                           6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                         1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                       1.3314166789178437745e+2) * r + 3.3871328727963666080e+0);
        double den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                           3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                         5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                       4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0.0 ? u : 1.0 - u;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                           2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                         3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                       4.63033784615654529590e+0) * r + 1.42343711074968357734e+0);
        double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                           1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                         6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                       2.05319162663775882187e+0) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                           1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                         2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                       5.46378491116411436990e+0) * r + 6.65790464350110377720e+0);
        double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                           1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                         1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                       5.99832206555887937690e-1) * r + 1.0);
        val = num / den;
    }
    return q < 0.0 ? -val : val;
}

double w1_vs_quantile(std::span<const double> samples,
                      const std::function<double(double)>& quantile) {
    if (samples.empty()) throw UsageError("w1_vs_quantile of an empty sample");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    double n = double(s.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        acc += std::abs(s[i] - quantile((double(i) + 0.5) / n));
    return acc / n;
}

double w1_empirical(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("w1_empirical of an empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    // Integrate |F_a^{-1}(u) - F_b^{-1}(u)| over the merged breakpoints of
    // the two quantile staircases.
    double acc = 0.0, u = 0.0;
    std::size_t i = 0, j = 0;
    double n = double(x.size()), m = double(y.size());
    while (i < x.size() && j < y.size()) {
        double ui = double(i + 1) / n, uj = double(j + 1) / m;
        double next = std::min(ui, uj);
        acc += (next - u) * std::abs(x[i] - y[j]);
        u = next;
        if (ui <= next + 1e-18) ++i;
        if (uj <= next + 1e-18) ++j;
    }
    return acc;
}

double sliced_w1(const Cloud& a, const Cloud& b, int n_slices, uint64_t seed) {
    if (a.dim != b.dim) throw UsageError("sliced_w1: dimension mismatch");
    if (n_slices < 1) throw ConstraintError("sliced_w1 needs >= 1 slice");
    std::vector<double> pa(a.n), pb(b.n);
    std::vector<double> dir(std::size_t(a.dim));
    double acc = 0.0;
    for (int s = 0; s < n_slices; ++s) {
        double norm2 = 0.0;
        for (int ax = 0; ax < a.dim; ++ax) {
            dir[std::size_t(ax)] =
                rng::normal(seed, rng::Stream::Slice, uint32_t(s), 0, uint32_t(ax));
            norm2 += dir[std::size_t(ax)] * dir[std::size_t(ax)];
        }
        double inv = 1.0 / std::sqrt(std::max(norm2, 1e-300));
        for (std::size_t i = 0; i < a.n; ++i) {
            double p = 0.0;
            for (int ax = 0; ax < a.dim; ++ax) p += dir[std::size_t(ax)] * a.at(i, ax);
            pa[i] = p * inv;
        }
        for (std::size_t i = 0; i < b.n; ++i) {
            double p = 0.0;
            for (int ax = 0; ax < b.dim; ++ax) p += dir[std::size_t(ax)] * b.at(i, ax);
            pb[i] = p * inv;
        }
        acc += w1_empirical(pa, pb);
    }
    return acc / double(n_slices);
}

namespace {

double cloud_dist(const Cloud& a, std::size_t i, const Cloud& b, std::size_t j) {
    double s = 0.0;
    for (int ax = 0; ax < a.dim; ++ax) {
        double d = a.at(i, ax) - b.at(j, ax);
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace

double energy_distance(const Cloud& a, const Cloud& b) {
    if (a.dim != b.dim) throw UsageError("energy_distance: dimension mismatch");
    if (a.n < 2 || b.n < 2) throw UsageError("energy_distance needs >= 2 points per cloud");
    double cross = 0.0;
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t j = 0; j < b.n; ++j) cross += cloud_dist(a, i, b, j);
    cross /= double(a.n) * double(b.n);
    double within_a = 0.0;
    for (std::size_t i = 0; i < a.n; ++i)
        for (std::size_t j = i + 1; j < a.n; ++j) within_a += cloud_dist(a, i, a, j);
    within_a *= 2.0 / (double(a.n) * double(a.n - 1));
    double within_b = 0.0;
    for (std::size_t i = 0; i < b.n; ++i)
        for (std::size_t j = i + 1; j < b.n; ++j) within_b += cloud_dist(b, i, b, j);
    within_b *= 2.0 / (double(b.n) * double(b.n - 1));
    return std::sqrt(std::max(0.0, 2.0 * cross - within_a - within_b));
}

} // namespace chaoslab::stats
