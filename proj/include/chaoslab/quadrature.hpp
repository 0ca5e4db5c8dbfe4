#pragma once

#include <functional>
#include <vector>

/// 1-d and small-d quadrature used by the kernel classifier and the
/// Gaussian bound oracle: Gauss–Legendre panels, adaptive Simpson for
/// smooth integrands, and graded geometric panels with power-law tail
/// extrapolation for endpoint singularities r^{-s}, s < 1.
namespace chaoslab::quad {

/// Gauss–Legendre nodes on [-1, 1], cached per order (order >= 1).
const std::vector<double>& gl_nodes(int order);
const std::vector<double>& gl_weights(int order);

/// Single Gauss–Legendre panel over [a, b].
double gl_panel(const std::function<double(double)>& f, double a, double b, int order);

/// Tensor-product Gauss–Legendre over the box [lo, hi]^dim (dim <= 3).
double gl_tensor(const std::function<double(const double*)>& f,
                 const double* lo, const double* hi, int dim, int order);

/// Adaptive Simpson for integrands that are smooth on [a, b].
/// Throws NumericalError when the depth limit is hit before the local
/// error estimate drops below max(abs_tol, rel_tol * |coarse estimate|).
double adaptive(const std::function<double(double)>& f, double a, double b,
                double rel_tol, double abs_tol = 0.0, int max_depth = 40);

/// Integral over [a, b] of an f that may blow up at the lower endpoint
/// like (x - a)^{-s} with s < 1.  Geometric panels shrink toward a; once
/// the panel ratio stabilises below 1 the remaining sliver is summed as a
/// geometric tail.  Throws NumericalError when panel contributions fail
/// to decay (non-integrable singularity) or the level cap is reached.
double graded_lower(const std::function<double(double)>& f, double a, double b,
                    int order = 24, double rel_tol = 1e-10, int max_levels = 2000);

} // namespace chaoslab::quad
