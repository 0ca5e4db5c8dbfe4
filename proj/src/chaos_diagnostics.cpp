#include "chaoslab/chaos_diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab::chaos {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void validate_n_list(const std::vector<long>& n_list) {
    if (n_list.empty()) throw ConstraintError("the N sweep needs at least one size");
    for (std::size_t k = 0; k < n_list.size(); ++k) {
        if (n_list[k] < 2) throw ConstraintError("each N must be at least 2");
        if (k > 0 && n_list[k] <= n_list[k - 1])
            throw ConstraintError("the N sweep must be strictly increasing");
    }
}

// Final-snapshot-only run of `base` resized to n particles and horizon t.
sde::TrajectoryBlock run_to(const sde::SimConfig& base, long n, double t, uint64_t seed,
                            long record_every = 0) {
    sde::SimConfig cfg = base;
    cfg.n_particles = n;
    cfg.horizon = t;
    cfg.seed = seed;
    if (record_every == 0) record_every = std::max(cfg.steps(), 1L);
    return sde::run(cfg, record_every, false);
}

std::optional<double> loglog_slope(std::span<const SeriesEntry> series) {
    std::vector<double> xs, ys;
    for (const auto& e : series) {
        if (e.x > 0.0 && e.value > 0.0) {
            xs.push_back(e.x);
            ys.push_back(e.value);
        }
    }
    if (xs.size() < 2) return std::nullopt;
    return stats::fit_loglog(xs, ys).slope;
}

std::string join_longs(std::span<const long> v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace

// ---------------------------------------------------------- test functions

TestFunction test_function(const std::string& name, std::span<const double> frequency) {
    if (name == "cos") {
        std::vector<double> a(frequency.begin(), frequency.end());
        TestFunction f;
        f.name = "cos";
        f.value = [a](std::span<const double> x) {
            double p = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) p += (a.empty() ? 1.0 : a[i]) * x[i];
            return std::cos(p);
        };
        f.gradient = [a](std::span<const double> x, std::span<double> out) {
            double p = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) p += (a.empty() ? 1.0 : a[i]) * x[i];
            double s = -std::sin(p);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * (a.empty() ? 1.0 : a[i]);
        };
        f.laplacian = [a](std::span<const double> x) {
            double p = 0.0, norm2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double ai = a.empty() ? 1.0 : a[i];
                p += ai * x[i];
                norm2 += ai * ai;
            }
            return -std::cos(p) * norm2;
        };
        return f;
    }
    if (name == "inverse-quadratic") {
        if (!frequency.empty())
            throw UsageError("inverse-quadratic takes no frequency parameter");
        TestFunction f;
        f.name = "inverse-quadratic";
        f.value = [](std::span<const double> x) { return 1.0 / (1.0 + dot(x, x)); };
        f.gradient = [](std::span<const double> x, std::span<double> out) {
            double u = 1.0 + dot(x, x);
            double c = -2.0 / (u * u);
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i];
        };
        f.laplacian = [](std::span<const double> x) {
            double n2 = dot(x, x);
            double u = 1.0 + n2;
            return -2.0 * double(x.size()) / (u * u) + 8.0 * n2 / (u * u * u);
        };
        return f;
    }
    throw UsageError("unknown test function '" + name +
                     "'; available: cos, inverse-quadratic");
}

std::vector<std::string> test_function_names() { return {"cos", "inverse-quadratic"}; }

PathWeight path_weight(const std::string& name) {
    if (name == "one")
        return [](std::span<const std::vector<double>>) { return 1.0; };
    if (name == "zero")
        return [](std::span<const std::vector<double>>) { return 0.0; };
    if (name == "tanh")
        return [](std::span<const std::vector<double>> early) {
            double p = 1.0;
            for (const auto& x : early) p *= std::tanh(x.empty() ? 0.0 : x[0]);
            return p;
        };
    throw UsageError("unknown path weight '" + name + "'; available: one, zero, tanh");
}

std::function<double(std::span<const double>)> scalar_observable(const std::string& name) {
    if (name == "one") return [](std::span<const double>) { return 1.0; };
    if (name == "tanh") return [](std::span<const double> x) { return std::tanh(x[0]); };
    if (name == "cos") return [](std::span<const double> x) { return std::cos(x[0]); };
    throw UsageError("unknown observable '" + name + "'; available: one, tanh, cos");
}

// -------------------------------------------------------- marginal distance

DiagnosticsReport marginal_distance(const sde::SimConfig& base,
                                    const MarginalStudyParams& params,
                                    const meanfield::DensityEstimate& reference) {
    validate_n_list(params.n_list);
    if (params.n_runs < 1) throw UsageError("at least one run per N is required");
    if (!(params.t > 0.0)) throw ConstraintError("evaluation time must be positive");
    if (std::abs(reference.time - params.t) > 1e-9 * std::max(1.0, params.t))
        throw UsageError("reference density is at time " + std::to_string(reference.time) +
                         ", not at the requested t");
    if (params.method == DistanceMethod::ExactW1 && base.dim != 1)
        throw UsageError("the exact-W1 method needs d = 1");

    // Reference draws for the cloud-to-cloud methods, shared by all runs.
    std::vector<double> ref_draws;
    if (params.method != DistanceMethod::ExactW1) {
        if (params.reference_samples < 2)
            throw UsageError("cloud methods need at least 2 reference draws");
        ref_draws = reference.draw_samples(params.reference_samples,
                                           rng::mix(base.seed, 0x9d5f));
    }
    stats::Cloud ref_cloud{ref_draws.data(), std::size_t(params.reference_samples), base.dim};

    std::size_t n_sizes = params.n_list.size();
    std::size_t runs = std::size_t(params.n_runs);
    std::vector<double> distances(n_sizes * runs);
    parallel::parallel_for(n_sizes * runs, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t task = lo; task < hi; ++task) {
            long n = params.n_list[task / runs];
            std::size_t run = task % runs;
            auto traj = run_to(base, n, params.t,
                               rng::mix(rng::mix(base.seed, uint64_t(n)), run));
            const auto& emp = traj.snapshots.back();
            double dist = 0.0;
            switch (params.method) {
            case DistanceMethod::ExactW1:
                dist = stats::w1_vs_quantile(
                    emp, [&](double u) { return reference.quantile(u); });
                break;
            case DistanceMethod::SlicedW1:
                dist = stats::sliced_w1({emp.data(), std::size_t(n), base.dim}, ref_cloud,
                                        params.n_slices, base.seed);
                break;
            case DistanceMethod::EnergyDistance:
                dist = stats::energy_distance({emp.data(), std::size_t(n), base.dim},
                                              ref_cloud);
                break;
            }
            distances[task] = dist;
        }
    });

    DiagnosticsReport report;
    report.name = "marginal-distance";
    for (std::size_t k = 0; k < n_sizes; ++k) {
        std::span<const double> vals(distances.data() + k * runs, runs);
        SeriesEntry e;
        e.x = double(params.n_list[k]);
        e.value = std::accumulate(vals.begin(), vals.end(), 0.0) / double(runs);
        if (runs >= 2) {
            auto ci = stats::bootstrap_mean_ci(vals, 2000, rng::mix(base.seed, k));
            e.ci_low = ci.lo;
            e.ci_high = ci.hi;
        } else {
            e.ci_low = e.ci_high = e.value;
        }
        report.series.push_back(e);
    }
    report.fitted_slope = loglog_slope(report.series);
    report.metadata["n_list"] = join_longs(params.n_list);
    report.metadata["t"] = std::to_string(params.t);
    report.metadata["n_runs"] = std::to_string(params.n_runs);
    report.metadata["method"] = params.method == DistanceMethod::ExactW1 ? "exact-w1-1d"
                                : params.method == DistanceMethod::SlicedW1 ? "sliced-w1"
                                                                            : "energy-distance";
    return report;
}

// -------------------------------------------------------- tightness moment

DiagnosticsReport tightness_moment(const sde::TrajectoryBlock& traj,
                                   std::span<const TimePair> pairs) {
    if (pairs.empty()) throw UsageError("no time pairs supplied");
    DiagnosticsReport report;
    report.name = "tightness-moment";
    std::string skipped;

    long n = traj.n;
    int d = traj.dim;
    std::vector<double> ratios(static_cast<std::size_t>(n));
    for (const auto& pair : pairs) {
        if (pair.s == pair.t) {
            if (!skipped.empty()) skipped += ",";
            skipped += std::to_string(pair.s);
            continue;
        }
        auto ks = traj.index_at(pair.s);
        auto kt = traj.index_at(pair.t);
        double gap = pair.t - pair.s;
        for (long i = 0; i < n; ++i) {
            double norm2 = 0.0;
            for (int a = 0; a < d; ++a) {
                double diff = traj.snapshots[kt][std::size_t(a) * n + i] -
                              traj.snapshots[ks][std::size_t(a) * n + i];
                norm2 += diff * diff;
            }
            ratios[std::size_t(i)] = norm2 * norm2 / (gap * gap);
        }
        SeriesEntry e;
        e.x = std::abs(gap);
        e.value = std::accumulate(ratios.begin(), ratios.end(), 0.0) / double(n);
        auto ci = stats::bootstrap_mean_ci(ratios, 2000, traj.seed ^ 0x7161);
        e.ci_low = ci.lo;
        e.ci_high = ci.hi;
        report.series.push_back(e);
    }
    if (report.series.empty())
        throw UsageError("every requested pair had s = t; nothing to estimate");
    std::sort(report.series.begin(), report.series.end(),
              [](const SeriesEntry& a, const SeriesEntry& b) { return a.x < b.x; });
    report.fitted_slope = loglog_slope(report.series);
    if (!skipped.empty()) report.metadata["skipped_pairs_at"] = skipped;
    report.metadata["n_particles"] = std::to_string(n);
    return report;
}

// ------------------------------------------------------------ G functional

double g_of_trajectory(const sde::TrajectoryBlock& traj, const kernels::KernelSpec& kernel,
                       const TestFunction& f, const PathWeight& phi,
                       std::span<const double> early_times, double s, double t) {
    if (!(s < t)) throw UsageError("the window needs s < t");
    for (std::size_t k = 0; k < early_times.size(); ++k) {
        if (early_times[k] > s)
            throw UsageError("early times must not exceed s");
        if (k > 0 && early_times[k] < early_times[k - 1])
            throw UsageError("early times must be nondecreasing");
    }

    long n = traj.n;
    int d = traj.dim;
    auto ks = traj.index_at(s);
    auto kt = traj.index_at(t);
    std::vector<std::size_t> early_idx;
    for (double u : early_times) early_idx.push_back(traj.index_at(u));

    // Per-particle time integral of (σ²/2)Δf + ∇f·(b ⋆ μ^N), left endpoints.
    std::vector<double> integral(std::size_t(n), 0.0);
    const std::size_t dd = std::size_t(d);
    std::vector<double> drift(std::size_t(n) * dd), grad(dd), x(dd);
    double half_s2 = 0.5 * traj.diffusion * traj.diffusion;
    for (std::size_t k = ks; k < kt; ++k) {
        const auto& snap = traj.snapshots[k];
        double du = traj.times[k + 1] - traj.times[k];
        kernels::mean_drift(kernel, traj.times[k], snap.data(), n, snap.data(), n, d,
                            drift.data());
        for (long i = 0; i < n; ++i) {
            for (int a = 0; a < d; ++a) x[std::size_t(a)] = snap[std::size_t(a) * n + i];
            f.gradient(x, grad);
            double dot_gb = 0.0;
            for (int a = 0; a < d; ++a) dot_gb += grad[std::size_t(a)] * drift[std::size_t(a) * n + i];
            integral[std::size_t(i)] += (half_s2 * f.laplacian(x) + dot_gb) * du;
        }
    }

    std::vector<std::vector<double>> early(early_idx.size(), std::vector<double>(std::size_t(d)));
    double g_sum = 0.0;
    for (long i = 0; i < n; ++i) {
        for (std::size_t e = 0; e < early_idx.size(); ++e)
            for (int a = 0; a < d; ++a)
                early[e][std::size_t(a)] = traj.snapshots[early_idx[e]][std::size_t(a) * n + i];
        double w = phi(early);
        for (int a = 0; a < d; ++a) x[std::size_t(a)] = traj.snapshots[kt][std::size_t(a) * n + i];
        double ft = f.value(x);
        for (int a = 0; a < d; ++a) x[std::size_t(a)] = traj.snapshots[ks][std::size_t(a) * n + i];
        double fs = f.value(x);
        g_sum += w * (ft - fs - integral[std::size_t(i)]);
    }
    return g_sum / double(n);
}

DiagnosticsReport g_functional_study(const sde::SimConfig& base, const GStudyParams& params) {
    validate_n_list(params.n_list);
    if (params.n_runs < 2) throw UsageError("the residual study needs at least 2 runs per N");
    TestFunction f = test_function(params.f, params.frequency);
    PathWeight phi = path_weight(params.phi);

    std::size_t n_sizes = params.n_list.size();
    std::size_t runs = std::size_t(params.n_runs);
    std::vector<double> g2(n_sizes * runs);
    parallel::parallel_for(n_sizes * runs, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t task = lo; task < hi; ++task) {
            long n = params.n_list[task / runs];
            std::size_t run = task % runs;
            auto traj = run_to(base, n, params.t,
                               rng::mix(rng::mix(base.seed, uint64_t(n)), run), 1);
            double g = g_of_trajectory(traj, base.kernel, f, phi, params.early_times,
                                       params.s, params.t);
            g2[task] = g * g;
        }
    });

    DiagnosticsReport report;
    report.name = "g-functional";
    for (std::size_t k = 0; k < n_sizes; ++k) {
        std::span<const double> vals(g2.data() + k * runs, runs);
        SeriesEntry e;
        e.x = double(params.n_list[k]);
        e.value = std::accumulate(vals.begin(), vals.end(), 0.0) / double(runs);
        auto ci = stats::bootstrap_mean_ci(vals, 2000, rng::mix(base.seed, k + 17));
        e.ci_low = ci.lo;
        e.ci_high = ci.hi;
        report.series.push_back(e);
    }
    report.fitted_slope = loglog_slope(report.series);
    report.metadata["n_list"] = join_longs(params.n_list);
    report.metadata["f"] = f.name;
    report.metadata["phi"] = params.phi;
    report.metadata["window"] = std::to_string(params.s) + ".." + std::to_string(params.t);
    report.metadata["n_runs"] = std::to_string(params.n_runs);
    return report;
}

// ----------------------------------------------------- tagged independence

DiagnosticsReport independence_study(const sde::SimConfig& base,
                                     const IndependenceParams& params) {
    validate_n_list(params.n_list);
    if (params.n_runs < 1) throw UsageError("at least one run per N is required");
    auto g_fn = scalar_observable(params.g);
    auto h_fn = scalar_observable(params.h);

    std::size_t n_sizes = params.n_list.size();
    std::size_t runs = std::size_t(params.n_runs);
    // Per run: pair moment P = (S_g S_h − Σ g_i h_i)/(N(N−1)) and the two
    // single-particle means.
    std::vector<double> pair_moment(n_sizes * runs), g_mean(n_sizes * runs),
        h_mean(n_sizes * runs);
    parallel::parallel_for(n_sizes * runs, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> x;
        for (std::size_t task = lo; task < hi; ++task) {
            long n = params.n_list[task / runs];
            std::size_t run = task % runs;
            auto traj = run_to(base, n, params.t,
                               rng::mix(rng::mix(base.seed, uint64_t(n) * 31), run));
            const auto& snap = traj.snapshots.back();
            int d = traj.dim;
            x.resize(std::size_t(d));
            double sg = 0.0, sh = 0.0, sgh = 0.0;
            for (long i = 0; i < n; ++i) {
                for (int a = 0; a < d; ++a) x[std::size_t(a)] = snap[std::size_t(a) * n + i];
                double gi = g_fn(x);
                double hi_v = h_fn(x);
                sg += gi;
                sh += hi_v;
                sgh += gi * hi_v;
            }
            pair_moment[task] = (sg * sh - sgh) / (double(n) * double(n - 1));
            g_mean[task] = sg / double(n);
            h_mean[task] = sh / double(n);
        }
    });

    // |Cov| from a subset of run indices: mean pair moment minus the
    // cross-run product of means ((Σḡ)(Σh̄) − Σḡh̄)/(R(R−1)).
    auto cov_abs = [&](std::span<const std::size_t> idx, std::size_t base_off) {
        double mp = 0.0, sg = 0.0, sh = 0.0, sgh = 0.0;
        for (std::size_t r : idx) {
            mp += pair_moment[base_off + r];
            sg += g_mean[base_off + r];
            sh += h_mean[base_off + r];
            sgh += g_mean[base_off + r] * h_mean[base_off + r];
        }
        double R = double(idx.size());
        mp /= R;
        double prod = R > 1.5 ? (sg * sh - sgh) / (R * (R - 1.0)) : sg * sh;
        return std::abs(mp - prod);
    };

    DiagnosticsReport report;
    report.name = "tagged-independence";
    std::vector<std::size_t> idx(runs);
    for (std::size_t k = 0; k < n_sizes; ++k) {
        std::size_t off = k * runs;
        std::iota(idx.begin(), idx.end(), std::size_t(0));
        SeriesEntry e;
        e.x = double(params.n_list[k]);
        e.value = cov_abs(idx, off);
        if (runs >= 2) {
            // percentile bootstrap over runs, widened to the point estimate
            std::vector<double> boot(2000);
            std::vector<std::size_t> resample(runs);
            for (std::size_t b = 0; b < boot.size(); ++b) {
                for (std::size_t i = 0; i < runs; ++i)
                    resample[i] = std::size_t(rng::uniform_index(
                        base.seed ^ (k + 1), rng::Stream::Bootstrap, uint32_t(b), uint32_t(i),
                        runs));
                boot[b] = cov_abs(resample, off);
            }
            std::sort(boot.begin(), boot.end());
            auto pick = [&](double q) {
                double pos = q * double(boot.size() - 1);
                std::size_t i = std::size_t(pos);
                double frac = pos - double(i);
                return i + 1 < boot.size() ? boot[i] * (1 - frac) + boot[i + 1] * frac
                                           : boot.back();
            };
            e.ci_low = std::min(pick(0.025), e.value);
            e.ci_high = std::max(pick(0.975), e.value);
        } else {
            e.ci_low = e.ci_high = e.value;
            report.metadata["warning"] = "single run: biased within-run covariance, no CI";
        }
        report.series.push_back(e);
    }
    report.fitted_slope = loglog_slope(report.series);
    report.metadata["n_list"] = join_longs(params.n_list);
    report.metadata["g"] = params.g;
    report.metadata["h"] = params.h;
    report.metadata["t"] = std::to_string(params.t);
    report.metadata["n_runs"] = std::to_string(params.n_runs);
    return report;
}

} // namespace chaoslab::chaos
