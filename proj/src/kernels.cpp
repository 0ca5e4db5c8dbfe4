#include "chaoslab/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/quadrature.hpp"
#include "kernel_functors.hpp"

namespace chaoslab::kernels {

// ---------------------------------------------------------------- exponents

void ExponentPair::validate() const {
    if (!(p > 2.0)) throw ConstraintError("exponent rule violated: p > 2 required, got p = " +
                                          std::to_string(p));
    if (!(q > 2.0)) throw ConstraintError("exponent rule violated: q > 2 required, got q = " +
                                          std::to_string(q));
    if (d < 1) throw ConstraintError("exponent rule violated: d >= 1 required, got d = " +
                                     std::to_string(d));
}

namespace {

/// Continued-fraction reconstruction of x as n/m with m <= 1000, accepted
/// only when the match is exact to 1e-12 relative.
std::optional<std::pair<long, long>> small_rational(double x) {
    if (!std::isfinite(x) || !(x > 0.0)) return std::nullopt;
    long h_prev = 1, h = long(std::floor(x));
    long k_prev = 0, k = 1;
    double frac = x - std::floor(x);
    for (int it = 0; it < 64; ++it) {
        if (std::abs(x - double(h) / double(k)) <= 1e-12 * std::max(1.0, x))
            return std::make_pair(h, k);
        if (frac < 1e-15) break;
        double v = 1.0 / frac;
        double af = std::floor(v);
        if (af > 1e15) break;
        long a = long(af);
        frac = v - af;
        long h_next = a * h + h_prev, k_next = a * k + k_prev;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
        if (k > 1000) break;
    }
    return std::nullopt;
}

} // namespace

bool ExponentPair::admissible() const {
    validate();
    auto rp = small_rational(p), rq = small_rational(q);
    if (rp && rq) {
        // d/p + 2/q < 1  <=>  d*pd*qn + 2*qd*pn < pn*qn  (all integers)
        using I = __int128;
        I lhs = I(d) * rp->second * rq->first + I(2) * rq->second * rp->first;
        I rhs = I(rp->first) * rq->first;
        return lhs < rhs;
    }
    return sum() < 1.0 - 1e-12;
}

// ------------------------------------------------------------ the catalogue

namespace {

double surface_area(int d) {
    // 2 pi^{d/2} / Gamma(d/2)
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

template <class Eval>
DriftFn wrap_drift(Eval ev) {
    return [ev](double t, std::span<const double> x, std::span<const double> y,
                std::span<double> out) {
        if (!ev.eval(t, x.data(), y.data(), out.data()))
            std::fill(out.begin(), out.end(), std::numeric_limits<double>::quiet_NaN());
    };
}

SingularFn coincidence_singularity() {
    return [](double, std::span<const double> x, std::span<const double> y) {
        for (std::size_t a = 0; a < x.size(); ++a)
            if (x[a] != y[a]) return false;
        return true;
    };
}

SingularFn never_singular() {
    return [](double, std::span<const double>, std::span<const double>) { return false; };
}

DominatorFn radial_dominator(std::function<double(double, double)> profile) {
    return [profile](double t, std::span<const double> z) {
        double r2 = 0.0;
        for (double v : z) r2 += v * v;
        return profile(t, std::sqrt(r2));
    };
}

double require_param(const std::map<std::string, double>& given, const char* kernel,
                     const char* key) {
    auto it = given.find(key);
    if (it == given.end())
        throw ConstraintError(std::string(kernel) + " requires parameter '" + key + "'");
    return it->second;
}

void check_allowed_keys(const std::map<std::string, double>& given,
                        std::initializer_list<const char*> allowed, const char* kernel) {
    for (const auto& [key, value] : given) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return key == k;
            }) == allowed.end())
            throw ConstraintError(std::string("unknown parameter '") + key + "' for kernel " +
                                  kernel);
    }
}

ExponentPair exponents_from(const std::map<std::string, double>& given, double def_p,
                            double def_q, int def_d) {
    ExponentPair e;
    auto get = [&](const char* key, double def) {
        auto it = given.find(key);
        return it == given.end() ? def : it->second;
    };
    e.p = get("p", def_p);
    e.q = get("q", def_q);
    double dd = get("d", double(def_d));
    if (dd != std::floor(dd) || dd < 1.0)
        throw ConstraintError("kernel parameter d must be a positive integer");
    e.d = int(dd);
    e.validate();
    return e;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

KernelSpec builtin(const std::string& name, const std::map<std::string, double>& parameters) {
    KernelSpec spec;
    spec.name = name;

    std::string canonical = name;
    if (name == "paper-h2-example") canonical = "kappa-riesz";

    if (canonical == "zero") {
        check_allowed_keys(parameters, {"d", "p", "q"}, "zero");
        spec.exponents = exponents_from(parameters, 8, 8, 1);
        spec.id = BuiltinId::Zero;
        spec.drift = wrap_drift(detail::ZeroEval{spec.exponents.d});
        spec.singular_at = never_singular();
        spec.radial_profile = [](double, double) { return 0.0; };
        spec.tail_lp = [](double, double, double) { return 0.0; };
        spec.support_radius = 0.0;
    } else if (canonical == "linear-ou") {
        check_allowed_keys(parameters, {"d", "p", "q"}, "linear-ou");
        spec.exponents = exponents_from(parameters, 8, 8, 1);
        spec.id = BuiltinId::LinearOU;
        spec.drift = wrap_drift(detail::LinearOUEval{spec.exponents.d});
        spec.singular_at = never_singular();
        spec.radial_profile = [](double, double r) { return r; };
        // |z|^p is never integrable at infinity: no H1, and sup_{|z|>1} |z|
        // is unbounded, so no tail function either.
        spec.tail_lp = [](double, double, double) { return kInf; };
    } else if (canonical == "bounded-lipschitz") {
        check_allowed_keys(parameters, {"d", "p", "q", "c"}, "bounded-lipschitz");
        spec.exponents = exponents_from(parameters, 8, 8, 1);
        double c = parameters.count("c") ? parameters.at("c") : 1.0;
        if (!(c > 0.0)) throw ConstraintError("bounded-lipschitz requires c > 0");
        spec.id = BuiltinId::BoundedLipschitz;
        spec.params.c = c;
        spec.drift = wrap_drift(detail::BoundedLipschitzEval{spec.exponents.d, c});
        spec.singular_at = never_singular();
        spec.radial_profile = [c](double, double) { return c; };
        spec.tail_lp = [](double, double, double) { return kInf; };
        spec.h2_tail = [c](double T) { return c * c * T; };
        spec.claims_h2 = true;
        spec.parameters["c"] = c;
    } else if (canonical == "riesz" || canonical == "riesz-truncated") {
        bool truncated = canonical == "riesz-truncated";
        check_allowed_keys(parameters, {"d", "p", "q", "alpha", "s"}, canonical.c_str());
        spec.exponents = exponents_from(parameters, 8, 8, 1);
        double alpha = require_param(parameters, canonical.c_str(), "alpha");
        if (!(alpha > 0.0 && alpha < 2.0))
            throw ConstraintError("riesz parameter alpha must lie in (0, 2), got " +
                                  std::to_string(alpha));
        double s = parameters.count("s") ? parameters.at("s") : 1.0;
        if (s != 1.0 && s != -1.0)
            throw ConstraintError("riesz parameter s must be +1 or -1");
        int d = spec.exponents.d;
        spec.id = truncated ? BuiltinId::RieszTruncated : BuiltinId::Riesz;
        spec.params.alpha = alpha;
        spec.params.s = s;
        spec.drift = wrap_drift(detail::RieszEval{d, s, alpha, truncated});
        spec.singular_at = coincidence_singularity();
        if (truncated) {
            spec.radial_profile = [alpha](double, double r) {
                return r > 1.0 ? 0.0 : std::pow(r, -alpha);
            };
            spec.support_radius = 1.0;
            spec.tail_lp = [alpha, d](double, double p, double R) {
                if (R >= 1.0) return 0.0;
                // S_{d-1} * int_R^1 r^{d-1-alpha p} dr
                double e = double(d) - alpha * p;
                double body = e == 0.0 ? -std::log(R) : (1.0 - std::pow(R, e)) / e;
                return surface_area(d) * body;
            };
            spec.h2_tail = [](double) { return 0.0; };
        } else {
            spec.radial_profile = [alpha](double, double r) { return std::pow(r, -alpha); };
            spec.tail_lp = [alpha, d](double, double p, double R) {
                double e = alpha * p - double(d);
                if (e <= 0.0) return kInf;
                return surface_area(d) * std::pow(R, -e) / e;
            };
            // sup_{|z|>1} |z|^{-alpha} = 1, so H(T) = T.
            spec.h2_tail = [](double T) { return T; };
        }
        spec.claims_h2 = true;
        spec.parameters["alpha"] = alpha;
        spec.parameters["s"] = s;
    } else if (canonical == "kappa-riesz") {
        check_allowed_keys(parameters, {"d", "p", "q", "alpha", "kappa"}, "kappa-riesz");
        spec.exponents = exponents_from(parameters, 3, 8, 2);
        double alpha = parameters.count("alpha") ? parameters.at("alpha") : 1.5;
        if (!(alpha >= 1.0 && alpha < 2.0))
            throw ConstraintError("kappa-riesz parameter alpha must lie in [1, 2), got " +
                                  std::to_string(alpha));
        double kappa = parameters.count("kappa") ? parameters.at("kappa") : 1.0;
        if (!(kappa > 0.0)) throw ConstraintError("kappa-riesz requires kappa > 0");
        int d = spec.exponents.d;
        spec.id = BuiltinId::KappaRiesz;
        spec.params.alpha = alpha;
        spec.params.kappa = kappa;
        spec.drift = wrap_drift(detail::KappaRieszEval{d, kappa, alpha});
        spec.singular_at = coincidence_singularity();
        spec.radial_profile = [kappa, alpha](double, double r) {
            return kappa * std::pow(r, 1.0 - alpha);
        };
        spec.tail_lp = [kappa, alpha, d](double, double p, double R) {
            double e = (alpha - 1.0) * p - double(d);
            if (e <= 0.0) return kInf;
            return surface_area(d) * std::pow(kappa, p) * std::pow(R, -e) / e;
        };
        // sup_{|z|>1} kappa |z|^{1-alpha} = kappa (attained at |z| = 1).
        spec.h2_tail = [kappa](double T) { return kappa * kappa * T; };
        spec.claims_h2 = true;
        spec.parameters["alpha"] = alpha;
        spec.parameters["kappa"] = kappa;
    } else {
        throw UsageError("unknown kernel '" + name + "'");
    }

    spec.dominator = radial_dominator(*spec.radial_profile);
    spec.parameters["d"] = double(spec.exponents.d);
    spec.parameters["p"] = spec.exponents.p;
    spec.parameters["q"] = spec.exponents.q;
    return spec;
}

std::span<const std::string> builtin_names() {
    static const std::vector<std::string> names = {
        "zero", "linear-ou", "bounded-lipschitz", "riesz", "riesz-truncated", "kappa-riesz"};
    return names;
}

// ------------------------------------------------------------ classification

namespace {

struct IntegralProbe {
    bool finite = false;
    double value = kInf;
};

/// Radial integral S_{d-1} * int_{r in (0, r1]} h(t,r)^p r^{d-1} dr with a
/// graded mesh toward the possible singularity at r = 0.
IntegralProbe radial_local(const std::function<double(double, double)>& profile, double t,
                           double p, int d, double r1) {
    IntegralProbe res;
    if (r1 <= 0.0) return {true, 0.0};
    auto f = [&](double r) { return std::pow(profile(t, r), p) * std::pow(r, d - 1); };
    try {
        res.value = surface_area(d) * quad::graded_lower(f, 0.0, r1, 24, 1e-9);
        res.finite = std::isfinite(res.value);
    } catch (const NumericalError&) {
        res.finite = false;
    }
    return res;
}

/// Radial integral over [r0, r1] (smooth region), geometric panels.
double radial_smooth(const std::function<double(double, double)>& profile, double t, double p,
                     int d, double r0, double r1) {
    if (!(r1 > r0)) return 0.0;
    auto f = [&](double r) { return std::pow(profile(t, r), p) * std::pow(r, d - 1); };
    double acc = 0.0, lo = r0;
    while (lo < r1) {
        double hi = std::min(r1, lo * 2.0);
        if (hi <= lo) break;
        acc += quad::gl_panel(f, lo, hi, 32);
        lo = hi;
    }
    return surface_area(d) * acc;
}

/// Expanding-shell divergence probe beyond R for kernels without an
/// analytic tail: integrates shells [R 2^k, R 2^{k+1}] and extrapolates a
/// geometric tail when the shells decay.
IntegralProbe radial_tail_probe(const std::function<double(double, double)>& profile, double t,
                                double p, int d, double R) {
    double prev = 0.0, acc = 0.0;
    for (int k = 0; k < 8; ++k) {
        double lo = R * std::ldexp(1.0, k), hi = R * std::ldexp(1.0, k + 1);
        double shell = radial_smooth(profile, t, p, d, lo, hi);
        acc += shell;
        if (k > 0) {
            if (shell <= 0.0 && prev <= 0.0) return {true, acc};
            double rho = shell / std::max(prev, 1e-300);
            if (k >= 3 && rho < 0.75) return {true, acc + shell * rho / (1.0 - rho)};
            if (k >= 5 && rho >= 0.95) return {false, kInf};
        }
        prev = shell;
    }
    return {false, kInf}; // no clear decay: report divergent (best effort)
}

/// Box-shell integral of f over {b < max_axis |z_a| <= a} in d <= 3,
/// decomposed into product slabs that avoid the origin.
double box_shell(const std::function<double(const double*)>& f, double b, double a, int d) {
    double total = 0.0;
    for (int axis = 0; axis < d; ++axis) {
        for (int sign = 0; sign < 2; ++sign) {
            double lo[3], hi[3];
            for (int j = 0; j < d; ++j) {
                if (j < axis) {
                    lo[j] = -b;
                    hi[j] = b;
                } else if (j > axis) {
                    lo[j] = -a;
                    hi[j] = a;
                }
            }
            if (sign == 0) {
                lo[axis] = b;
                hi[axis] = a;
            } else {
                lo[axis] = -a;
                hi[axis] = -b;
            }
            total += quad::gl_tensor(f, lo, hi, d, 16);
        }
    }
    return total;
}

/// Best-effort local/global probing for non-radial dominators (d <= 3).
void box_classify(const KernelSpec& spec, double t, double p, double radius, IntegralProbe& local,
                  IntegralProbe& global) {
    int d = spec.exponents.d;
    if (d > 3)
        throw UsageError("classification of kernels without a radial profile is supported "
                         "only for d <= 3");
    auto f = [&](const double* z) {
        double h = spec.dominator(t, std::span<const double>(z, std::size_t(d)));
        return std::isfinite(h) ? std::pow(h, p) : kInf;
    };
    // Local part: dyadic shells shrinking to the origin.
    double acc = 0.0, prev = 0.0;
    local = {false, kInf};
    for (int k = 0; k < 48; ++k) {
        double a = std::ldexp(1.0, -k), b = std::ldexp(1.0, -k - 1);
        double shell = box_shell(f, b, a, d);
        acc += shell;
        if (k > 2) {
            if (shell <= 0.0 && prev <= 0.0) {
                local = {true, acc};
                break;
            }
            double rho = shell / std::max(prev, 1e-300);
            if (rho < 0.9 && k >= 6) {
                local = {true, acc + shell * rho / (1.0 - rho)};
                break;
            }
            if (rho >= 1.0 && k >= 10) break; // non-integrable at the origin
        }
        prev = shell;
    }
    if (!local.finite) {
        global = {false, kInf};
        return;
    }
    // Outer part out to `radius`, then expanding-shell divergence probe.
    double body = acc;
    double lo = 1.0;
    while (lo < radius) {
        double hi = std::min(radius, 2.0 * lo);
        body += box_shell(f, lo, hi, d);
        lo = hi;
    }
    prev = 0.0;
    global = {false, kInf};
    for (int k = 0; k < 8; ++k) {
        double a0 = radius * std::ldexp(1.0, k), a1 = radius * std::ldexp(1.0, k + 1);
        double shell = box_shell(f, a0, a1, d);
        body += shell;
        if (k > 0) {
            if (shell <= 0.0 && prev <= 0.0) {
                global = {true, body};
                return;
            }
            double rho = shell / std::max(prev, 1e-300);
            if (k >= 3 && rho < 0.75) {
                global = {true, body + shell * rho / (1.0 - rho)};
                return;
            }
            if (k >= 5 && rho >= 0.95) return;
        }
        prev = shell;
    }
}

} // namespace

Classification classify(const KernelSpec& spec, double radius) {
    spec.exponents.validate();
    if (!(radius > 0.0)) throw ConstraintError("classify requires radius > 0");
    if (spec.claims_h2 && !spec.h2_tail)
        throw ConstraintError("kernel '" + spec.name +
                              "' claims the local regime but provides no h2_tail");

    Classification cls;
    cls.exponent_sum = spec.exponents.sum();
    cls.exponent_ok = spec.exponents.admissible();

    if (spec.h2_tail) {
        const double grid[] = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
        double prev = 0.0;
        bool ok = true;
        for (double T : grid) {
            double v = (*spec.h2_tail)(T);
            if (!std::isfinite(v) || v < 0.0) {
                ok = false;
                break;
            }
            if (v < prev - 1e-12 * std::max(1.0, std::abs(prev)))
                throw ConstraintError("kernel '" + spec.name + "': h2_tail must be nondecreasing");
            prev = v;
        }
        cls.h2_tail_ok = ok;
    }

    const double probe_times[] = {0.25, 1.0};
    double p = spec.exponents.p;
    int d = spec.exponents.d;
    bool local_all = true, global_all = true;
    double worst_value = 0.0;

    for (double t : probe_times) {
        IntegralProbe local, global;
        if (spec.radial_profile) {
            const auto& profile = *spec.radial_profile;
            double support = spec.support_radius;
            double r_local = std::min(1.0, support);
            local = radial_local(profile, t, p, d, r_local);
            if (!local.finite) {
                global = {false, kInf};
            } else {
                double r_out = std::min(radius, support);
                double body = local.value + radial_smooth(profile, t, p, d, r_local, r_out);
                if (support <= r_out) {
                    global = {true, body};
                } else if (spec.tail_lp) {
                    double tail = (*spec.tail_lp)(t, p, r_out);
                    global = std::isfinite(tail) ? IntegralProbe{true, body + tail}
                                                 : IntegralProbe{false, kInf};
                } else {
                    cls.best_effort = true;
                    IntegralProbe probe = radial_tail_probe(profile, t, p, d, r_out);
                    global = probe.finite ? IntegralProbe{true, body + probe.value}
                                          : IntegralProbe{false, kInf};
                }
            }
        } else {
            cls.best_effort = true;
            box_classify(spec, t, p, radius, local, global);
        }
        local_all = local_all && local.finite;
        global_all = global_all && global.finite;
        worst_value = std::max(worst_value, global.finite ? global.value : kInf);
    }

    cls.local_lp_finite = local_all;
    cls.global_lp_finite = global_all;
    cls.global_lp_value = global_all ? worst_value : kInf;

    if (!cls.exponent_ok)
        cls.verdict = Admissibility::Inadmissible;
    else if (cls.global_lp_finite)
        cls.verdict = Admissibility::H1;
    else if (cls.local_lp_finite && cls.h2_tail_ok)
        cls.verdict = Admissibility::H2Only;
    else
        cls.verdict = Admissibility::Inadmissible;
    return cls;
}

// ------------------------------------------------- pairwise drift evaluators

namespace {

// Thread spawning costs more than a few thousand kernel evaluations, and
// SDE drivers call these once per time step; stay sequential on small jobs.
int auto_threads(long items, long cost_each, int requested) {
    if (requested > 0) return requested;
    return items * std::max(cost_each, 1L) < 65536 ? 1 : 0;
}

template <class Eval>
void system_drift_impl(const Eval& kern, double t, const double* pos, long n, int d,
                       long partial_r, double* out, int threads) {
    threads = auto_threads(n, n * d, threads);
    double inv_n = 1.0 / double(n);
    // The linear pull factorizes through coordinate sums:
    // (1/N) sum_{j in J, j != i} -(x_i - x_j) = (S_J - |J\{i}| x_i - [i in J] x_i) / N.
    if constexpr (std::is_same_v<Eval, detail::LinearOUEval>) {
        for (int a = 0; a < d; ++a) {
            double s = 0.0;
            for (long j = partial_r; j < n; ++j) s += pos[std::size_t(a) * n + j];
            double count = double(n - partial_r - 1);
            for (long i = 0; i < n; ++i)
                out[std::size_t(a) * n + i] =
                    i < partial_r ? 0.0
                                  : (s - pos[std::size_t(a) * n + i] -
                                     count * pos[std::size_t(a) * n + i]) *
                                        inv_n;
        }
        return;
    }
    parallel::parallel_for(std::size_t(n), [&](std::size_t lo, std::size_t hi) {
        const std::size_t dd = std::size_t(d);
        std::vector<double> xi(dd), yj(dd), b(dd), acc(dd);
        for (std::size_t i = lo; i < hi; ++i) {
            if constexpr (std::is_same_v<Eval, detail::ZeroEval>) {
                for (int a = 0; a < d; ++a) out[std::size_t(a) * n + i] = 0.0;
                continue;
            }
            if (long(i) < partial_r) {
                for (int a = 0; a < d; ++a) out[std::size_t(a) * n + i] = 0.0;
                continue;
            }
            for (int a = 0; a < d; ++a) {
                xi[std::size_t(a)] = pos[std::size_t(a) * n + i];
                acc[std::size_t(a)] = 0.0;
            }
            for (long j = partial_r; j < n; ++j) {
                if (j == long(i)) continue;
                for (int a = 0; a < d; ++a) yj[std::size_t(a)] = pos[std::size_t(a) * n + j];
                if (kern.eval(t, xi.data(), yj.data(), b.data()))
                    for (int a = 0; a < d; ++a) acc[std::size_t(a)] += b[std::size_t(a)];
            }
            for (int a = 0; a < d; ++a) out[std::size_t(a) * n + i] = acc[std::size_t(a)] * inv_n;
        }
    }, threads);
}

template <class Eval>
void beta_r_impl(const Eval& kern, double t, const double* pos, long n, int d, long r,
                 double* out, int threads) {
    threads = auto_threads(n, n * d, threads);
    double inv_n = 1.0 / double(n);
    // Same factorization as in system_drift_impl.
    if constexpr (std::is_same_v<Eval, detail::LinearOUEval>) {
        for (int a = 0; a < d; ++a) {
            double s_all = 0.0, s_r = 0.0;
            for (long j = 0; j < n; ++j) s_all += pos[std::size_t(a) * n + j];
            for (long j = 0; j < r; ++j) s_r += pos[std::size_t(a) * n + j];
            for (long i = 0; i < n; ++i) {
                double xi = pos[std::size_t(a) * n + i];
                out[std::size_t(a) * n + i] = i < r
                                                  ? (s_all - xi - double(n - 1) * xi) * inv_n
                                                  : (s_r - double(r) * xi) * inv_n;
            }
        }
        return;
    }
    parallel::parallel_for(std::size_t(n), [&](std::size_t lo, std::size_t hi) {
        const std::size_t dd = std::size_t(d);
        std::vector<double> xi(dd), yj(dd), b(dd), acc(dd);
        for (std::size_t i = lo; i < hi; ++i) {
            if constexpr (std::is_same_v<Eval, detail::ZeroEval>) {
                for (int a = 0; a < d; ++a) out[std::size_t(a) * n + i] = 0.0;
                continue;
            }
            for (int a = 0; a < d; ++a) {
                xi[std::size_t(a)] = pos[std::size_t(a) * n + i];
                acc[std::size_t(a)] = 0.0;
            }
            // First r coordinates carry the full drift; the rest couple
            // only to the first r particles.
            long j_hi = long(i) < r ? n : r;
            for (long j = 0; j < j_hi; ++j) {
                if (j == long(i)) continue;
                for (int a = 0; a < d; ++a) yj[std::size_t(a)] = pos[std::size_t(a) * n + j];
                if (kern.eval(t, xi.data(), yj.data(), b.data()))
                    for (int a = 0; a < d; ++a) acc[std::size_t(a)] += b[std::size_t(a)];
            }
            for (int a = 0; a < d; ++a) out[std::size_t(a) * n + i] = acc[std::size_t(a)] * inv_n;
        }
    }, threads);
}

template <class Eval>
void mean_drift_impl(const Eval& kern, const KernelSpec& spec, double t, const double* queries,
                     long n_q, const double* cloud, long m, int d, double* out, int threads) {
    threads = auto_threads(n_q, m * d, threads);
    double inv_m = 1.0 / double(m);
    // The linear kernel factorizes through the cloud mean: -(x - ybar).
    if (spec.id == BuiltinId::LinearOU) {
        std::vector<double> ybar(std::size_t(d), 0.0);
        for (int a = 0; a < d; ++a) {
            double s = 0.0;
            for (long j = 0; j < m; ++j) s += cloud[std::size_t(a) * m + j];
            ybar[std::size_t(a)] = s * inv_m;
        }
        parallel::parallel_for(std::size_t(n_q), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i)
                for (int a = 0; a < d; ++a)
                    out[std::size_t(a) * n_q + i] =
                        -(queries[std::size_t(a) * n_q + i] - ybar[std::size_t(a)]);
        }, threads);
        return;
    }
    parallel::parallel_for(std::size_t(n_q), [&](std::size_t lo, std::size_t hi) {
        const std::size_t dd = std::size_t(d);
        std::vector<double> xi(dd), yj(dd), b(dd), acc(dd);
        for (std::size_t i = lo; i < hi; ++i) {
            if constexpr (std::is_same_v<Eval, detail::ZeroEval>) {
                for (int a = 0; a < d; ++a) out[std::size_t(a) * n_q + i] = 0.0;
                continue;
            }
            for (int a = 0; a < d; ++a) {
                xi[std::size_t(a)] = queries[std::size_t(a) * n_q + i];
                acc[std::size_t(a)] = 0.0;
            }
            for (long j = 0; j < m; ++j) {
                for (int a = 0; a < d; ++a) yj[std::size_t(a)] = cloud[std::size_t(a) * m + j];
                if (kern.eval(t, xi.data(), yj.data(), b.data()))
                    for (int a = 0; a < d; ++a) acc[std::size_t(a)] += b[std::size_t(a)];
            }
            for (int a = 0; a < d; ++a) out[std::size_t(a) * n_q + i] = acc[std::size_t(a)] * inv_m;
        }
    }, threads);
}

} // namespace

void system_drift(const KernelSpec& spec, double t, const double* positions, long n, int d,
                  long partial_r, double* out, int threads) {
    if (partial_r < 0 || partial_r >= std::max(n, 1L))
        throw ConstraintError("partial_r must lie in [0, n)");
    detail::with_evaluator(spec, d, [&](auto kern) {
        system_drift_impl(kern, t, positions, n, d, partial_r, out, threads);
    });
}

void beta_r(const KernelSpec& spec, double t, const double* positions, long n, int d, long r,
            double* out, int threads) {
    if (r < 0 || r >= std::max(n, 1L)) throw ConstraintError("r must lie in [0, n)");
    if (r == 0) {
        system_drift(spec, t, positions, n, d, 0, out, threads);
        return;
    }
    detail::with_evaluator(spec, d, [&](auto kern) {
        beta_r_impl(kern, t, positions, n, d, r, out, threads);
    });
}

void mean_drift(const KernelSpec& spec, double t, const double* queries, long n_q,
                const double* cloud, long m, int d, double* out, int threads) {
    if (m < 1) throw UsageError("mean_drift needs a nonempty cloud");
    detail::with_evaluator(spec, d, [&](auto kern) {
        mean_drift_impl(kern, spec, t, queries, n_q, cloud, m, d, out, threads);
    });
}

} // namespace chaoslab::kernels
