#include "chaoslab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "chaoslab/errors.hpp"

namespace chaoslab::quad {

namespace {

struct Rule {
    std::vector<double> x, w;
};

/// Newton iteration on P_n with the Chebyshev-angle initial guess.
Rule make_rule(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Recurrence for P_n(x) and P'_n(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.x[i] = -x;
        r.w[i] = w;
        r.x[n - 1 - i] = x;
        r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

const Rule& rule(int order) {
    if (order < 1) throw ConstraintError("Gauss-Legendre order must be >= 1");
    static std::map<int, Rule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make_rule(order)).first;
    return it->second;
}

} // namespace

const std::vector<double>& gl_nodes(int order) { return rule(order).x; }
const std::vector<double>& gl_weights(int order) { return rule(order).w; }

double gl_panel(const std::function<double(double)>& f, double a, double b, int order) {
    const Rule& r = rule(order);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < order; ++i) acc += r.w[i] * f(mid + half * r.x[i]);
    return acc * half;
}

double gl_tensor(const std::function<double(const double*)>& f,
                 const double* lo, const double* hi, int dim, int order) {
    if (dim < 1 || dim > 3) throw ConstraintError("gl_tensor supports dim in 1..3");
    const Rule& r = rule(order);
    double mid[3], half[3];
    for (int a = 0; a < dim; ++a) {
        mid[a] = 0.5 * (lo[a] + hi[a]);
        half[a] = 0.5 * (hi[a] - lo[a]);
    }
    double acc = 0.0, pt[3];
    int n1 = order, n2 = dim > 1 ? order : 1, n3 = dim > 2 ? order : 1;
    for (int i = 0; i < n1; ++i) {
        pt[0] = mid[0] + half[0] * r.x[i];
        for (int j = 0; j < n2; ++j) {
            if (dim > 1) pt[1] = mid[1] + half[1] * r.x[j];
            for (int k = 0; k < n3; ++k) {
                if (dim > 2) pt[2] = mid[2] + half[2] * r.x[k];
                double w = r.w[i] * (dim > 1 ? r.w[j] : 1.0) * (dim > 2 ? r.w[k] : 1.0);
                acc += w * f(pt);
            }
        }
    }
    double vol = half[0];
    for (int a = 1; a < dim; ++a) vol *= half[a];
    return acc * vol;
}

namespace {

double simpson_aux(const std::function<double(double)>& f, double a, double b, double eps,
                   double whole, double fa, double fb, double fm, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0)
        throw NumericalError("adaptive Simpson: depth limit without convergence",
                             left + right, whole);
    return simpson_aux(f, a, m, 0.5 * eps, left, fa, fm, flm, depth - 1) +
           simpson_aux(f, m, b, 0.5 * eps, right, fm, fb, frm, depth - 1);
}

} // namespace

double adaptive(const std::function<double(double)>& f, double a, double b,
                double rel_tol, double abs_tol, int max_depth) {
    if (!(b > a)) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double scale = std::max({std::abs(whole), std::abs(fa) * (b - a) * 1e-3,
                             std::abs(fm) * (b - a) * 1e-3});
    double eps = std::max(abs_tol, rel_tol * scale);
    if (eps <= 0.0) eps = 1e-300;
    return simpson_aux(f, a, b, eps, whole, fa, fb, fm, max_depth);
}

double graded_lower(const std::function<double(double)>& f, double a, double b,
                    int order, double rel_tol, int max_levels) {
    if (!(b > a)) return 0.0;
    double width = b - a;
    double sum = 0.0;
    double prev_panel = 0.0;
    double last_rho = -1.0;
    int non_decaying = 0;
    for (int k = 0; k < max_levels; ++k) {
        double hi = a + width * std::ldexp(1.0, -k);
        double lo = a + width * std::ldexp(1.0, -k - 1);
        if (!(lo > a) || !(hi > lo)) {
            // The graded mesh has collapsed onto the endpoint: panels this
            // thin round onto `a` itself (possible when |a| >> width of the
            // remaining sliver), so stop and close the unresolvable rest
            // with the last observed decay ratio.
            if (last_rho > 0.0 && last_rho < 1.0 && std::abs(prev_panel) > 0.0)
                return sum + prev_panel * last_rho / (1.0 - last_rho);
            return sum;
        }
        double panel = gl_panel(f, lo, hi, order);
        sum += panel;
        if (k > 0 && std::abs(panel) > 0.0) {
            double rho = std::abs(panel) / std::max(std::abs(prev_panel), 1e-300);
            if (rho >= 1.0) {
                if (++non_decaying >= 4 && k >= 8)
                    throw NumericalError("graded quadrature: panel contributions do not decay "
                                         "(integrand looks non-integrable at the endpoint)",
                                         sum, sum - panel);
            } else {
                non_decaying = 0;
                last_rho = rho;
                double tail = std::abs(panel) * rho / (1.0 - rho);
                if (tail <= rel_tol * std::max(std::abs(sum), 1e-300) && k >= 4) {
                    // Close the sliver with the geometric-tail estimate.
                    return sum + (panel > 0 ? tail : -tail);
                }
            }
        }
        if (k >= 6 && panel == 0.0 && prev_panel == 0.0) return sum;
        prev_panel = panel;
    }
    throw NumericalError("graded quadrature: level cap reached before the tail converged",
                         sum, sum - prev_panel);
}

} // namespace chaoslab::quad
