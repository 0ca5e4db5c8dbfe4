#pragma once

#include <cmath>
#include <span>

#include "chaoslab/kernels.hpp"

/// Inlined per-pair evaluators behind the O(N^2) loops.  Each functor's
/// eval() writes b(t,x,y) into out[0..d) and returns false when the pair
/// is singular or the value is non-finite (caller treats that as zero
/// contribution).  Dispatch happens once per loop, not per pair.
namespace chaoslab::kernels::detail {

struct ZeroEval {
    int d;
    bool eval(double, const double*, const double*, double* out) const {
        for (int a = 0; a < d; ++a) out[a] = 0.0;
        return true;
    }
};

struct LinearOUEval {
    int d;
    bool eval(double, const double* x, const double* y, double* out) const {
        for (int a = 0; a < d; ++a) out[a] = -(x[a] - y[a]);
        return true;
    }
};

struct BoundedLipschitzEval {
    int d;
    double c;
    bool eval(double, const double* x, const double* y, double* out) const {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            out[a] = x[a] - y[a];
            r2 += out[a] * out[a];
        }
        double scale = -c / std::sqrt(1.0 + r2);
        for (int a = 0; a < d; ++a) out[a] *= scale;
        return true;
    }
};

/// s * (x-y) / |x-y|^{alpha+1}; exact coincidence is the singular set.
struct RieszEval {
    int d;
    double s;
    double alpha;
    bool truncated;
    bool eval(double, const double* x, const double* y, double* out) const {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            out[a] = x[a] - y[a];
            r2 += out[a] * out[a];
        }
        if (r2 == 0.0) return false;
        if (truncated && r2 > 1.0) {
            for (int a = 0; a < d; ++a) out[a] = 0.0;
            return true;
        }
        // |z| / |z|^{alpha+1} = |z|^{-alpha}; direction z/|z|.
        double scale = s * std::pow(r2, -0.5 * (alpha + 1.0));
        bool finite = true;
        for (int a = 0; a < d; ++a) {
            out[a] *= scale;
            finite = finite && std::isfinite(out[a]);
        }
        return finite;
    }
};

/// -kappa * (x-y) / |x-y|^alpha with alpha in [1,2): Lipschitz numerator
/// over a Riesz denominator, |b| = kappa |x-y|^{1-alpha}.
struct KappaRieszEval {
    int d;
    double kappa;
    double alpha;
    bool eval(double, const double* x, const double* y, double* out) const {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            out[a] = x[a] - y[a];
            r2 += out[a] * out[a];
        }
        if (r2 == 0.0) return false;
        double scale = -kappa * std::pow(r2, -0.5 * alpha);
        bool finite = true;
        for (int a = 0; a < d; ++a) {
            out[a] *= scale;
            finite = finite && std::isfinite(out[a]);
        }
        return finite;
    }
};

struct CustomEval {
    const KernelSpec* spec;
    int d;
    bool eval(double t, const double* x, const double* y, double* out) const {
        std::span<const double> xs(x, std::size_t(d)), ys(y, std::size_t(d));
        if (spec->singular_at && spec->singular_at(t, xs, ys)) return false;
        spec->drift(t, xs, ys, std::span<double>(out, std::size_t(d)));
        for (int a = 0; a < d; ++a)
            if (!std::isfinite(out[a])) return false;
        return true;
    }
};

/// Call f with the concrete evaluator for `spec` (d is the runtime
/// dimension of the positions being processed).
template <class F>
decltype(auto) with_evaluator(const KernelSpec& spec, int d, F&& f) {
    switch (spec.id) {
    case BuiltinId::Zero:
        return f(ZeroEval{d});
    case BuiltinId::LinearOU:
        return f(LinearOUEval{d});
    case BuiltinId::BoundedLipschitz:
        return f(BoundedLipschitzEval{d, spec.params.c});
    case BuiltinId::Riesz:
        return f(RieszEval{d, spec.params.s, spec.params.alpha, false});
    case BuiltinId::RieszTruncated:
        return f(RieszEval{d, spec.params.s, spec.params.alpha, true});
    case BuiltinId::KappaRiesz:
        return f(KappaRieszEval{d, spec.params.kappa, spec.params.alpha});
    case BuiltinId::Custom:
        break;
    }
    return f(CustomEval{&spec, d});
}

} // namespace chaoslab::kernels::detail
