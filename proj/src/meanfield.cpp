#include "chaoslab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaoslab/errors.hpp"
#include "chaoslab/gauss_oracle.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab::meanfield {

// ------------------------------------------------------------------ grids

void GridSpec::validate() const {
    if (dim < 1 || dim > 3) throw ConstraintError("grid dimension must be 1..3");
    if (long(lo.size()) != dim || long(hi.size()) != dim || long(cells.size()) != dim)
        throw ConstraintError("grid corner/cell arrays must have the grid dimension");
    for (int a = 0; a < dim; ++a) {
        if (!(hi[std::size_t(a)] > lo[std::size_t(a)]))
            throw ConstraintError("grid box must have positive extent on every axis");
        if (cells[std::size_t(a)] < 2) throw ConstraintError("grids need at least 2 cells per axis");
    }
}

long GridSpec::n_cells() const {
    long total = 1;
    for (long c : cells) total *= c;
    return total;
}

double GridSpec::width(int axis) const {
    return (hi[std::size_t(axis)] - lo[std::size_t(axis)]) / double(cells[std::size_t(axis)]);
}

double GridSpec::center(int axis, long i) const {
    return lo[std::size_t(axis)] + (double(i) + 0.5) * width(axis);
}

double GridSpec::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= width(a);
    return v;
}

namespace {

// Decompose a row-major flat cell index (axis 0 fastest).
void cell_coords(const GridSpec& g, long flat, long* coords) {
    for (int a = 0; a < g.dim; ++a) {
        coords[a] = flat % g.cells[std::size_t(a)];
        flat /= g.cells[std::size_t(a)];
    }
}

double broadcast_at(const std::vector<double>& v, int axis) {
    if (v.empty()) return 0.0;
    return v.size() == 1 ? v[0] : v[std::size_t(axis)];
}

std::vector<double> resolved_bandwidths(const DensityEstimate& s) {
    std::vector<double> h(std::size_t(s.dim));
    for (int a = 0; a < s.dim; ++a) {
        if (s.bandwidth > 0.0) {
            h[std::size_t(a)] = s.bandwidth;
        } else {
            std::span<const double> axis(s.samples.data() + std::size_t(a) * s.n_samples,
                                         std::size_t(s.n_samples));
            h[std::size_t(a)] = silverman_bandwidth(axis);
        }
    }
    return h;
}

// Automatic projection grid for norm evaluation of sample-based estimates.
GridSpec auto_grid(const DensityEstimate& s, const std::vector<double>& h) {
    GridSpec g;
    g.dim = s.dim;
    long per_axis = s.dim == 1 ? 4096 : (s.dim == 2 ? 256 : 64);
    for (int a = 0; a < s.dim; ++a) {
        auto begin = s.samples.begin() + long(std::size_t(a) * s.n_samples);
        auto [mn, mx] = std::minmax_element(begin, begin + s.n_samples);
        double pad = 5.0 * h[std::size_t(a)];
        g.lo.push_back(*mn - pad);
        g.hi.push_back(*mx + pad);
        g.cells.push_back(per_axis);
    }
    return g;
}

DensityEstimate kde_impl(const DensityEstimate& s, const GridSpec& grid,
                         const std::vector<double>& h) {
    DensityEstimate out;
    out.kind = DensityKind::Grid;
    out.time = s.time;
    out.dim = s.dim;
    out.grid = grid;
    out.bandwidth = h[0];
    out.values.assign(std::size_t(grid.n_cells()), 0.0);

    long n_cells = grid.n_cells();
    long n = s.n_samples;
    int d = s.dim;
    const std::size_t dd = std::size_t(d);
    std::vector<double> inv_h(dd), norm(dd);
    for (int a = 0; a < d; ++a) {
        inv_h[std::size_t(a)] = 1.0 / h[std::size_t(a)];
        norm[std::size_t(a)] = inv_h[std::size_t(a)] / std::sqrt(2.0 * M_PI);
    }
    int threads = n_cells * n < 65536 ? 1 : 0;
    parallel::parallel_for(std::size_t(n_cells), [&](std::size_t lo_c, std::size_t hi_c) {
        std::vector<long> coords(static_cast<std::size_t>(d));
        std::vector<double> x(static_cast<std::size_t>(d));
        for (std::size_t c = lo_c; c < hi_c; ++c) {
            cell_coords(grid, long(c), coords.data());
            for (int a = 0; a < d; ++a) x[std::size_t(a)] = grid.center(a, coords[std::size_t(a)]);
            double acc = 0.0;
            for (long i = 0; i < n; ++i) {
                double k = 1.0;
                for (int a = 0; a < d; ++a) {
                    double z = (x[std::size_t(a)] - s.samples[std::size_t(a) * n + i]) *
                               inv_h[std::size_t(a)];
                    k *= norm[std::size_t(a)] * std::exp(-0.5 * z * z);
                }
                acc += k;
            }
            out.values[c] = acc / double(n);
        }
    }, threads);
    return out;
}

} // namespace

// -------------------------------------------------------------- densities

double DensityEstimate::mass() const {
    switch (kind) {
    case DensityKind::Grid: {
        double s = std::accumulate(values.begin(), values.end(), 0.0);
        return s * grid.cell_volume();
    }
    case DensityKind::Samples:
    case DensityKind::Gaussian:
        return 1.0;
    }
    return 1.0;
}

double DensityEstimate::lr_norm(double r) const {
    if (r < 1.0) throw ConstraintError("L^r norms need r >= 1");
    switch (kind) {
    case DensityKind::Grid: {
        double s = 0.0;
        for (double v : values) s += std::pow(std::max(v, 0.0), r);
        return std::pow(s * grid.cell_volume(), 1.0 / r);
    }
    case DensityKind::Gaussian:
        if (var <= 0.0) throw ConstraintError("degenerate Gaussian has no finite L^r norm");
        return gauss::heat_kernel_lp_norm(var, r, dim);
    case DensityKind::Samples: {
        auto h = resolved_bandwidths(*this);
        return kde_impl(*this, auto_grid(*this, h), h).lr_norm(r);
    }
    }
    throw UsageError("unknown density kind");
}

double DensityEstimate::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw ConstraintError("quantile argument must lie in (0,1)");
    if (dim != 1) throw UsageError("quantile is defined for 1-d densities only");
    switch (kind) {
    case DensityKind::Gaussian:
        return broadcast_at(mean, 0) + std::sqrt(var) * stats::normal_quantile(u);
    case DensityKind::Samples: {
        std::vector<double> sorted(samples.begin(), samples.begin() + n_samples);
        std::sort(sorted.begin(), sorted.end());
        double pos = u * double(n_samples) - 0.5;
        if (pos <= 0.0) return sorted.front();
        if (pos >= double(n_samples - 1)) return sorted.back();
        long i = long(pos);
        double frac = pos - double(i);
        return sorted[std::size_t(i)] * (1.0 - frac) + sorted[std::size_t(i) + 1] * frac;
    }
    case DensityKind::Grid: {
        double dx = grid.width(0);
        double total = mass();
        double target = u * total;
        double cum = 0.0;
        for (long i = 0; i < grid.cells[0]; ++i) {
            double cell_mass = std::max(values[std::size_t(i)], 0.0) * dx;
            if (cum + cell_mass >= target && cell_mass > 0.0) {
                double frac = (target - cum) / cell_mass;
                return grid.lo[0] + (double(i) + frac) * dx;
            }
            cum += cell_mass;
        }
        return grid.hi[0];
    }
    }
    throw UsageError("unknown density kind");
}

std::vector<double> DensityEstimate::draw_samples(long n, uint64_t seed) const {
    if (n < 1) throw UsageError("draw_samples needs n >= 1");
    std::vector<double> out(std::size_t(n) * dim);
    switch (kind) {
    case DensityKind::Gaussian: {
        double sd = std::sqrt(var);
        for (long i = 0; i < n; ++i)
            for (int a = 0; a < dim; ++a)
                out[std::size_t(a) * n + i] =
                    broadcast_at(mean, a) +
                    sd * rng::normal(seed, rng::Stream::Reference, uint32_t(i), 0, uint32_t(a));
        return out;
    }
    case DensityKind::Grid: {
        if (dim != 1) throw UsageError("grid sampling is supported in 1-d only");
        for (long i = 0; i < n; ++i) {
            double u = rng::uniform(seed, rng::Stream::Reference, uint32_t(i), 0, 0);
            out[std::size_t(i)] = quantile(std::clamp(u, 1e-12, 1.0 - 1e-12));
        }
        return out;
    }
    case DensityKind::Samples:
        throw UsageError("sample-based densities are already samples; resampling is not supported");
    }
    throw UsageError("unknown density kind");
}

// ------------------------------------------------------------- closed form

DensityEstimate exact_ou_density(double t, std::span<const double> mean0, double var0,
                                 double sigma) {
    if (t < 0.0) throw ConstraintError("time must be nonnegative");
    if (var0 < 0.0) throw ConstraintError("initial variance must be nonnegative");
    if (sigma <= 0.0) throw ConstraintError("diffusion must be positive");
    if (mean0.empty()) throw ConstraintError("mean vector must be nonempty");
    DensityEstimate out;
    out.kind = DensityKind::Gaussian;
    out.time = t;
    out.dim = int(mean0.size());
    out.mean.assign(mean0.begin(), mean0.end());
    double half_s2 = 0.5 * sigma * sigma;
    out.var = half_s2 + (var0 - half_s2) * std::exp(-2.0 * t);
    return out;
}

// -------------------------------------------------------------------- KDE

double silverman_bandwidth(std::span<const double> samples) {
    if (samples.size() < 2) throw UsageError("bandwidth selection needs at least 2 samples");
    auto m = stats::moments(samples);
    double sd = std::sqrt(m.var);
    if (!(sd > 0.0)) throw EstimationError("degenerate sample: zero spread, no bandwidth");
    return sd * std::pow(4.0 / (3.0 * double(samples.size())), 0.2);
}

DensityEstimate kde_on_grid(const DensityEstimate& samples_density, const GridSpec& grid) {
    grid.validate();
    if (samples_density.kind != DensityKind::Samples)
        throw UsageError("kde_on_grid expects a sample-based density");
    if (samples_density.dim != grid.dim)
        throw UsageError("sample and grid dimensions disagree");
    if (samples_density.n_samples < 2) throw UsageError("KDE needs at least 2 samples");
    return kde_impl(samples_density, grid, resolved_bandwidths(samples_density));
}

// ------------------------------------------------------------------ Picard

PicardResult picard_solve(const sde::SimConfig& config, long iterations, long n_ref,
                          BandwidthRule bandwidth_rule, double tolerance) {
    config.validate();
    if (iterations < 1) throw ConstraintError("at least one iteration is required");
    if (n_ref < 1000) throw UsageError("the law needs n_ref >= 1000 samples");
    if (tolerance <= 0.0) throw ConstraintError("tolerance must be positive");

    sde::SimConfig lin = config;
    lin.n_particles = n_ref;
    lin.partial_r = 0;
    long steps = lin.steps();
    int d = lin.dim;

    // Iterate 0: the initial law, frozen in time.
    std::vector<std::vector<double>> prev(std::size_t(steps) + 1,
                                          sde::sample_initial(lin).positions);

    PicardResult result;
    result.times.resize(std::size_t(steps) + 1);
    for (long k = 0; k <= steps; ++k) result.times[std::size_t(k)] = double(k) * lin.dt;

    int slices = d == 1 ? 1 : 16;
    for (long it = 0; it < iterations; ++it) {
        sde::FieldDrift field = [&](double t, std::span<const double> positions,
                                    std::span<double> out) {
            auto k = std::size_t(std::lround(t / lin.dt));
            k = std::min(k, prev.size() - 1);
            kernels::mean_drift(config.kernel, t, positions.data(), n_ref, prev[k].data(),
                                n_ref, d, out.data());
        };
        sde::TrajectoryBlock traj = sde::run_linear(lin, field, 1, false);

        std::vector<double> per_time(prev.size(), 0.0);
        parallel::parallel_for(prev.size(), [&](std::size_t lo, std::size_t hi) {
            for (std::size_t k = lo; k < hi; ++k) {
                stats::Cloud a{prev[k].data(), std::size_t(n_ref), d};
                stats::Cloud b{traj.snapshots[k].data(), std::size_t(n_ref), d};
                per_time[k] = d == 1 ? stats::w1_empirical(
                                           {a.data, a.n}, {b.data, b.n})
                                     : stats::sliced_w1(a, b, slices, config.seed);
            }
        });
        double dist = *std::max_element(per_time.begin(), per_time.end());
        result.successive_distance.push_back(dist);
        prev = std::move(traj.snapshots);
        result.iterations_run = it + 1;
        if (dist < tolerance) {
            result.converged = true;
            break;
        }
    }

    result.densities.reserve(prev.size());
    for (std::size_t k = 0; k < prev.size(); ++k) {
        DensityEstimate est;
        est.kind = DensityKind::Samples;
        est.time = result.times[k];
        est.dim = d;
        est.n_samples = n_ref;
        est.samples = std::move(prev[k]);
        est.bandwidth = bandwidth_rule.kind == BandwidthRule::Kind::Fixed ? bandwidth_rule.h : 0.0;
        result.densities.push_back(std::move(est));
    }
    return result;
}

// ------------------------------------------------------------ 1-d forward

FokkerPlanckResult fokker_planck_1d(const kernels::KernelSpec& kernel, const GridSpec& grid,
                                    const DensityEstimate& initial, double sigma,
                                    double horizon, double dt_pde, int n_snapshots) {
    grid.validate();
    if (grid.dim != 1) throw UsageError("the forward solver is 1-d only");
    if (sigma <= 0.0 || horizon <= 0.0 || dt_pde <= 0.0)
        throw ConstraintError("sigma, horizon, and dt_pde must be positive");
    if (n_snapshots < 2) throw UsageError("need at least 2 snapshots");
    long macro_steps = std::lround(horizon / dt_pde);
    if (macro_steps < 1 ||
        std::abs(double(macro_steps) * dt_pde - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ConstraintError("horizon must be an integer number of dt_pde steps");

    long m = grid.cells[0];
    double dx = grid.width(0);

    // Project the initial density onto the grid and normalize exactly.
    std::vector<double> rho(static_cast<std::size_t>(m));
    switch (initial.kind) {
    case DensityKind::Grid: {
        if (initial.grid.cells != grid.cells || initial.grid.lo != grid.lo ||
            initial.grid.hi != grid.hi)
            throw UsageError("initial grid density must live on the solver grid");
        rho = initial.values;
        break;
    }
    case DensityKind::Gaussian: {
        if (initial.dim != 1) throw UsageError("initial density must be 1-d");
        if (initial.var <= 0.0)
            throw ConstraintError("point-mass initial data needs a positive-variance mollification");
        double mu = broadcast_at(initial.mean, 0);
        for (long i = 0; i < m; ++i) {
            double z = grid.center(0, i) - mu;
            rho[std::size_t(i)] =
                std::exp(-0.5 * z * z / initial.var) / std::sqrt(2.0 * M_PI * initial.var);
        }
        break;
    }
    case DensityKind::Samples:
        rho = kde_on_grid(initial, grid).values;
        break;
    }
    double mass0 = std::accumulate(rho.begin(), rho.end(), 0.0) * dx;
    if (!(mass0 > 0.0)) throw ConstraintError("initial density carries no mass on the grid");
    for (double& v : rho) v /= mass0;

    // Tabulate the convolution kernel k(z) on the difference lattice,
    // masking the singular cell z = 0 and non-finite values to 0.
    std::vector<double> k_tab(std::size_t(2 * m - 1), 0.0);
    std::vector<double> zx(1), zy(1, 0.0), zb(1);
    for (long off = -(m - 1); off <= m - 1; ++off) {
        if (off == 0) continue;
        zx[0] = double(off) * dx;
        if (kernel.singular_at(0.0, zx, zy)) continue;
        kernel.drift(0.0, zx, zy, zb);
        if (std::isfinite(zb[0])) k_tab[std::size_t(off + m - 1)] = zb[0];
    }

    FokkerPlanckResult result;
    result.grid = grid;
    long total_substeps = 0;
    double half_s2 = 0.5 * sigma * sigma;

    auto record = [&](double t) {
        DensityEstimate est;
        est.kind = DensityKind::Grid;
        est.time = t;
        est.dim = 1;
        est.grid = grid;
        est.values = rho;
        result.times.push_back(t);
        result.densities.push_back(std::move(est));
    };

    std::vector<long> record_at(static_cast<std::size_t>(n_snapshots));
    for (int s = 0; s < n_snapshots; ++s)
        record_at[std::size_t(s)] =
            std::lround(double(s) * double(macro_steps) / double(n_snapshots - 1));
    record(0.0);
    std::size_t next_record = 1;

    const std::size_t mm = std::size_t(m);
    std::vector<double> a(mm), flux(mm + 1, 0.0), next(mm);
    for (long step = 0; step < macro_steps; ++step) {
        double remaining = dt_pde;
        long substeps_here = 0;
        while (remaining > 1e-15 * dt_pde) {
            // a = (k * rho) by direct midpoint quadrature
            double amax = 0.0;
            for (long i = 0; i < m; ++i) {
                double acc = 0.0;
                for (long j = 0; j < m; ++j)
                    acc += k_tab[std::size_t(i - j + m - 1)] * rho[std::size_t(j)];
                a[std::size_t(i)] = acc * dx;
                amax = std::max(amax, std::abs(a[std::size_t(i)]));
            }
            double dt_limit = 0.4 * dx * dx / (sigma * sigma);
            if (amax > 0.0) dt_limit = std::min(dt_limit, 0.4 * dx / amax);
            double h = std::min(remaining, dt_limit);
            if (++substeps_here > 65536)
                throw NumericalError("stability forced more than 65536 substeps per dt_pde; "
                                     "refine the grid or shrink dt_pde",
                                     h, dt_limit);

            flux[0] = flux[std::size_t(m)] = 0.0; // no-flux walls
            for (long f = 1; f < m; ++f) {
                double u = 0.5 * (a[std::size_t(f - 1)] + a[std::size_t(f)]);
                double upwind = u >= 0.0 ? rho[std::size_t(f - 1)] : rho[std::size_t(f)];
                flux[std::size_t(f)] =
                    u * upwind - half_s2 * (rho[std::size_t(f)] - rho[std::size_t(f - 1)]) / dx;
            }
            for (long i = 0; i < m; ++i)
                next[std::size_t(i)] =
                    rho[std::size_t(i)] -
                    (h / dx) * (flux[std::size_t(i) + 1] - flux[std::size_t(i)]);
            rho.swap(next);
            remaining -= h;
        }
        total_substeps += substeps_here;
        if (next_record < record_at.size() && step + 1 == record_at[next_record]) {
            record(double(step + 1) * dt_pde);
            ++next_record;
        }
    }
    result.total_substeps = total_substeps;
    return result;
}

// ------------------------------------------------------------ decay series

std::vector<DecayPoint> density_decay_check(std::span<const DensityEstimate> estimates,
                                            double r) {
    if (r < 1.0) throw ConstraintError("the decay exponent needs r >= 1");
    if (estimates.size() < 4)
        throw ConstraintError("the decay check needs at least 4 time slices");
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        if (!(estimates[k].time > 0.0))
            throw ConstraintError("decay-check times must be positive");
        if (k > 0 && estimates[k].time <= estimates[k - 1].time)
            throw ConstraintError("decay-check times must be strictly increasing");
    }
    if (estimates.back().time < 10.0 * estimates.front().time * (1.0 - 1e-9))
        throw ConstraintError("decay-check times must span at least a decade");

    std::vector<DecayPoint> series;
    series.reserve(estimates.size());
    for (const auto& est : estimates) {
        DecayPoint pt;
        pt.t = est.time;
        double expo = 0.5 * double(est.dim) * (1.0 - 1.0 / r);
        pt.value = est.lr_norm(r) * std::pow(est.time, expo);
        pt.projected = est.kind == DensityKind::Samples;
        series.push_back(pt);
    }
    return series;
}

} // namespace chaoslab::meanfield
