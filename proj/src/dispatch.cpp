#include "chaoslab/dispatch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "chaoslab/chaos_diagnostics.hpp"
#include "chaoslab/csv.hpp"
#include "chaoslab/errors.hpp"
#include "chaoslab/gauss_oracle.hpp"
#include "chaoslab/girsanov.hpp"
#include "chaoslab/meanfield.hpp"
#include "chaoslab/sde_engine.hpp"

namespace chaoslab::cli {

namespace {

using nlohmann::json;

std::string iso8601_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot re-open output for hashing: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    return hex64(config::fnv1a64(
        {reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()}));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Context shared by the per-subcommand runners.
struct Sink {
    const config::Config& cfg;
    std::filesystem::path outdir;
    std::vector<OutputRecord> outputs;
    std::string summary;

    void note(const std::string& filename, const std::string& kind, long rows) {
        outputs.push_back({filename, kind, rows, hash_file(outdir / filename)});
    }

    void write_json(const std::string& filename, const json& j) {
        std::ofstream out(outdir / filename);
        if (!out) throw UsageError("cannot write " + (outdir / filename).string());
        out << j.dump(2) << "\n";
        out.close();
        note(filename, "json", 1);
    }
};

json series_json(const chaos::DiagnosticsReport& report) {
    json meta = json::object();
    for (const auto& [k, v] : report.metadata) meta[k] = v;
    json j{{"name", report.name}, {"metadata", meta}};
    j["fitted_slope"] =
        report.fitted_slope ? finite_or_null(*report.fitted_slope) : json(nullptr);
    return j;
}

void write_report_csv(Sink& sink, const std::string& filename,
                      const chaos::DiagnosticsReport& report) {
    io::CsvWriter csv(sink.outdir / filename, {"x", "value", "ci_low", "ci_high"});
    for (const auto& e : report.series)
        csv.write_row(std::vector<double>{e.x, e.value, e.ci_low, e.ci_high});
    sink.note(filename, "csv", csv.rows());
}

std::vector<long> default_n_list(const config::Config& cfg) {
    if (!cfg.experiment.n_list.empty()) return cfg.experiment.n_list;
    return {cfg.sim.n_particles};
}

double default_time(const config::Config& cfg) {
    return cfg.experiment.t > 0.0 ? cfg.experiment.t : cfg.sim.horizon;
}

// ------------------------------------------------------------ check-kernel

void run_check_kernel(Sink& sink) {
    const auto& spec = sink.cfg.sim.kernel;
    auto cls = kernels::classify(spec);
    const char* verdict = cls.verdict == kernels::Admissibility::H1        ? "h1"
                          : cls.verdict == kernels::Admissibility::H2Only ? "h2-only"
                                                                          : "inadmissible";
    json j{{"kernel", spec.name},
           {"verdict", verdict},
           {"exponents",
            {{"d", spec.exponents.d}, {"p", spec.exponents.p}, {"q", spec.exponents.q}}},
           {"exponent_sum", cls.exponent_sum},
           {"exponent_ok", cls.exponent_ok},
           {"global_lp_finite", cls.global_lp_finite},
           {"local_lp_finite", cls.local_lp_finite},
           {"h2_tail_ok", cls.h2_tail_ok},
           {"best_effort", cls.best_effort},
           {"global_lp_value", finite_or_null(cls.global_lp_value)}};
    sink.write_json("kernel_report.json", j);

    std::ostringstream s;
    s << "kernel '" << spec.name << "' (d=" << spec.exponents.d << ", p=" << spec.exponents.p
      << ", q=" << spec.exponents.q << "): " << verdict
      << "  [d/p + 2/q = " << io::format_number(cls.exponent_sum) << "]";
    sink.summary = s.str();
}

// ---------------------------------------------------------------- simulate

void run_simulate(Sink& sink) {
    const auto& e = sink.cfg.experiment;
    auto traj = sde::run(sink.cfg.sim, e.record_every, e.keep_increments);
    sde::write_trajectory(sink.outdir / "trajectory.bin", traj);
    sink.note("trajectory.bin", "binary", long(traj.times.size()));
    if (!e.marginals.empty()) {
        sde::export_marginals_csv(sink.outdir / "marginals.csv", traj, e.marginals);
        sink.note("marginals.csv", "csv", long(traj.times.size()));
    }
    std::ostringstream s;
    s << "simulated " << traj.n << " particles in d=" << traj.dim << " over "
      << traj.n_steps() << " steps; " << traj.times.size() << " snapshots";
    sink.summary = s.str();
}

// --------------------------------------------------------------- meanfield

/// Grid for projecting sample-based densities: explicit [experiment]
/// bounds when given, else the sample/Gaussian extent padded by three
/// standard deviations.
meanfield::GridSpec projection_grid(const config::Config& cfg,
                                    std::span<const meanfield::DensityEstimate> densities,
                                    int dim) {
    const auto& e = cfg.experiment;
    meanfield::GridSpec grid;
    grid.dim = dim;
    auto broadcast = [dim](const std::vector<double>& v, const char* key) {
        if (v.size() != 1 && v.size() != std::size_t(dim))
            throw UsageError(std::string(key) + " needs 1 or d entries");
        std::vector<double> out(static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) out[std::size_t(a)] = v.size() == 1 ? v[0] : v[std::size_t(a)];
        return out;
    };
    long default_cells = dim == 1 ? 256 : 64;
    std::vector<double> cells_raw(e.grid_cells.begin(), e.grid_cells.end());
    if (e.grid_lo.empty() != e.grid_hi.empty())
        throw UsageError("grid_lo and grid_hi must be given together");
    if (!e.grid_lo.empty()) {
        grid.lo = broadcast(e.grid_lo, "grid_lo");
        grid.hi = broadcast(e.grid_hi, "grid_hi");
    } else {
        std::vector<double> lo(std::size_t(dim), std::numeric_limits<double>::infinity());
        std::vector<double> hi(std::size_t(dim), -std::numeric_limits<double>::infinity());
        for (const auto& den : densities) {
            for (int a = 0; a < dim; ++a) {
                auto& l = lo[std::size_t(a)];
                auto& h = hi[std::size_t(a)];
                if (den.kind == meanfield::DensityKind::Samples) {
                    const double* col = den.samples.data() + std::size_t(a) * den.n_samples;
                    double mn = col[0], mx = col[0], m = 0.0, m2 = 0.0;
                    for (long i = 0; i < den.n_samples; ++i) {
                        mn = std::min(mn, col[i]);
                        mx = std::max(mx, col[i]);
                        m += col[i];
                        m2 += col[i] * col[i];
                    }
                    m /= double(den.n_samples);
                    double sd = std::sqrt(std::max(m2 / double(den.n_samples) - m * m, 0.0));
                    l = std::min(l, mn - 3.0 * sd);
                    h = std::max(h, mx + 3.0 * sd);
                } else if (den.kind == meanfield::DensityKind::Gaussian) {
                    double mu = den.mean.size() == 1 ? den.mean[0] : den.mean.at(std::size_t(a));
                    double sd = std::sqrt(den.var);
                    l = std::min(l, mu - 6.0 * sd);
                    h = std::max(h, mu + 6.0 * sd);
                } else {
                    l = std::min(l, den.grid.lo.at(std::size_t(a)));
                    h = std::max(h, den.grid.hi.at(std::size_t(a)));
                }
            }
        }
        grid.lo = lo;
        grid.hi = hi;
    }
    if (cells_raw.empty())
        grid.cells.assign(std::size_t(dim), default_cells);
    else {
        grid.cells.clear();
        for (int a = 0; a < dim; ++a)
            grid.cells.push_back(cells_raw.size() == 1 ? std::lround(cells_raw[0])
                                                       : std::lround(cells_raw.at(std::size_t(a))));
    }
    grid.validate();
    return grid;
}

/// Thin a per-step time grid down to the snapshot indices the CSV keeps:
/// experiment.times mapped to the nearest step when given, else
/// n_snapshots evenly spaced indices.
std::vector<std::size_t> snapshot_indices(const config::Config& cfg, std::size_t n_times,
                                          double dt) {
    const auto& e = cfg.experiment;
    std::vector<std::size_t> idx;
    if (!e.times.empty()) {
        for (double t : e.times) {
            long k = std::lround(t / dt);
            idx.push_back(std::size_t(std::clamp(k, 0L, long(n_times) - 1)));
        }
    } else {
        long want = std::max<long>(2, e.n_snapshots);
        for (long s = 0; s < want; ++s)
            idx.push_back(std::size_t(
                std::lround(double(s) * double(n_times - 1) / double(want - 1))));
    }
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    return idx;
}

/// One row per grid cell: cell-center coordinates then one density column
/// per time slice.
long write_density_grid_csv(Sink& sink, const std::string& filename,
                            const meanfield::GridSpec& grid,
                            std::span<const meanfield::DensityEstimate> slices) {
    std::vector<std::string> header;
    for (int a = 0; a < grid.dim; ++a) header.push_back("x" + std::to_string(a));
    for (const auto& den : slices) header.push_back("rho_t" + io::format_number(den.time));
    io::CsvWriter csv(sink.outdir / filename, header);
    long total = grid.n_cells();
    std::vector<double> row(header.size());
    for (long cell = 0; cell < total; ++cell) {
        long rest = cell;
        for (int a = 0; a < grid.dim; ++a) {
            row[std::size_t(a)] = grid.center(a, rest % grid.cells[std::size_t(a)]);
            rest /= grid.cells[std::size_t(a)];
        }
        for (std::size_t s = 0; s < slices.size(); ++s)
            row[std::size_t(grid.dim) + s] = slices[s].values[std::size_t(cell)];
        csv.write_row(row);
    }
    sink.note(filename, "csv", csv.rows());
    return csv.rows();
}

void run_meanfield(Sink& sink) {
    const auto& cfg = sink.cfg;
    const auto& e = cfg.experiment;
    std::string study = e.study.empty() ? "picard" : e.study;
    int dim = cfg.sim.dim;

    if (study == "picard" || study == "decay") {
        auto bw = e.bandwidth > 0.0 ? meanfield::BandwidthRule::fixed(e.bandwidth)
                                    : meanfield::BandwidthRule::silverman();
        auto res = meanfield::picard_solve(cfg.sim, e.iterations, e.n_ref, bw);

        if (study == "decay") {
            // Log-spaced positive times unless the config pins them.
            std::vector<std::size_t> idx;
            if (!e.times.empty()) {
                for (double t : e.times)
                    idx.push_back(std::size_t(std::clamp(
                        std::lround(t / cfg.sim.dt), 1L, long(res.times.size()) - 1)));
            } else {
                long last = long(res.times.size()) - 1;
                for (int s = 0; s < 8; ++s)
                    idx.push_back(std::size_t(std::lround(
                        std::pow(double(last), double(s) / 7.0))));
            }
            std::sort(idx.begin(), idx.end());
            idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
            std::vector<meanfield::DensityEstimate> picked;
            for (auto k : idx) picked.push_back(res.densities[k]);
            auto series = meanfield::density_decay_check(picked, e.decay_r);

            io::CsvWriter csv(sink.outdir / "decay.csv",
                              {"t", "normalized_norm", "projected"});
            double worst = 0.0;
            for (const auto& pt : series) {
                csv.write_row(std::vector<double>{pt.t, pt.value, pt.projected ? 1.0 : 0.0});
                worst = std::max(worst, pt.value);
            }
            sink.note("decay.csv", "csv", csv.rows());
            sink.write_json("decay.json",
                            json{{"study", "decay"},
                                 {"r", e.decay_r},
                                 {"max_normalized_norm", finite_or_null(worst)},
                                 {"converged", res.converged},
                                 {"iterations_run", res.iterations_run}});
            std::ostringstream s;
            s << "decay check at r=" << io::format_number(e.decay_r) << ": max t^γ‖ρ_t‖_r = "
              << io::format_number(worst) << " over " << series.size() << " times";
            sink.summary = s.str();
            return;
        }

        if (dim > 2)
            throw UsageError("density export supports d <= 2; use the library API for d = 3");
        auto idx = snapshot_indices(cfg, res.times.size(), cfg.sim.dt);
        // A point mass has no t = 0 kernel density estimate.
        if (cfg.sim.initial_law.kind == sde::InitialLawKind::PointMass)
            std::erase(idx, std::size_t(0));
        std::vector<meanfield::DensityEstimate> picked;
        for (auto k : idx) picked.push_back(res.densities[k]);
        auto grid = projection_grid(cfg, picked, dim);
        std::vector<meanfield::DensityEstimate> on_grid;
        json slices = json::array();
        for (const auto& den : picked) {
            on_grid.push_back(meanfield::kde_on_grid(den, grid));
            slices.push_back({{"time", den.time},
                              {"bandwidth", den.bandwidth},
                              {"n_samples", den.n_samples}});
        }
        write_density_grid_csv(sink, "densities.csv", grid, on_grid);
        json distances = json::array();
        for (double v : res.successive_distance) distances.push_back(v);
        sink.write_json("densities.json",
                        json{{"study", "picard"},
                             {"converged", res.converged},
                             {"iterations_run", res.iterations_run},
                             {"successive_distance", distances},
                             {"n_ref", e.n_ref},
                             {"slices", slices}});
        std::ostringstream s;
        s << "picard " << (res.converged ? "converged" : "did NOT converge") << " after "
          << res.iterations_run << " iterations";
        if (!res.successive_distance.empty())
            s << " (last successive sliced-W1 "
              << io::format_number(res.successive_distance.back()) << ")";
        sink.summary = s.str();
        return;
    }

    if (study == "fokker-planck") {
        if (dim != 1) throw UsageError("the forward solver is 1-d only");
        meanfield::GridSpec grid;
        grid.dim = 1;
        grid.lo = {e.grid_lo.empty() ? -8.0 : e.grid_lo[0]};
        grid.hi = {e.grid_hi.empty() ? 8.0 : e.grid_hi[0]};
        grid.cells = {e.grid_cells.empty() ? 512 : e.grid_cells[0]};

        meanfield::DensityEstimate initial;
        initial.dim = 1;
        const auto& law = cfg.sim.initial_law;
        switch (law.kind) {
        case sde::InitialLawKind::Gaussian:
            initial.kind = meanfield::DensityKind::Gaussian;
            initial.mean = law.mean;
            initial.var = law.var.empty() ? 1.0 : law.var[0];
            break;
        case sde::InitialLawKind::PointMass:
            initial.kind = meanfield::DensityKind::Gaussian;
            initial.mean = law.mean;
            initial.var = 0.0; // rejected downstream: needs mollification
            break;
        case sde::InitialLawKind::UniformBox: {
            initial.kind = meanfield::DensityKind::Grid;
            initial.grid = grid;
            initial.values.assign(std::size_t(grid.cells[0]), 0.0);
            double lo = law.lo[0], hi = law.hi[0];
            for (long i = 0; i < grid.cells[0]; ++i) {
                double x = grid.center(0, i);
                if (x >= lo && x <= hi) initial.values[std::size_t(i)] = 1.0 / (hi - lo);
            }
            break;
        }
        }
        double dt_pde = e.dt_pde > 0.0 ? e.dt_pde : cfg.sim.dt;
        auto res = meanfield::fokker_planck_1d(cfg.sim.kernel, grid, initial,
                                               cfg.sim.diffusion, cfg.sim.horizon, dt_pde,
                                               int(e.n_snapshots));
        write_density_grid_csv(sink, "densities.csv", grid, res.densities);
        json slices = json::array();
        for (const auto& den : res.densities)
            slices.push_back({{"time", den.time}, {"mass", den.mass()}});
        sink.write_json("densities.json", json{{"study", "fokker-planck"},
                                               {"dt_pde", dt_pde},
                                               {"total_substeps", res.total_substeps},
                                               {"slices", slices}});
        std::ostringstream s;
        s << "forward solve: " << res.densities.size() << " slices on " << grid.cells[0]
          << " cells, " << res.total_substeps << " substeps, final mass "
          << io::format_number(res.densities.back().mass());
        sink.summary = s.str();
        return;
    }

    throw UsageError("unknown meanfield study '" + study +
                     "'; expected picard, fokker-planck, or decay");
}

// ---------------------------------------------------------------- girsanov

void run_girsanov(Sink& sink) {
    const auto& cfg = sink.cfg;
    auto n_list = default_n_list(cfg);
    auto study = girsanov::novikov_scaling_study(cfg.sim.kernel, n_list, cfg.sim.horizon,
                                                 cfg.sim.dt, cfg.experiment.alpha,
                                                 cfg.experiment.n_paths, cfg.sim.seed);

    io::CsvWriter csv(sink.outdir / "girsanov.csv",
                      {"n", "r", "alpha", "energy_mean", "log_mean_exp", "ci_low", "ci_high",
                       "diverged_fraction"});
    double nan = std::numeric_limits<double>::quiet_NaN();
    json errors = json::object();
    for (const auto& row : study.rows) {
        if (!row.error.empty()) {
            errors[std::to_string(row.n)] = row.error;
            continue;
        }
        auto emit = [&](long r, double energy,
                        const std::optional<girsanov::ExpMomentEstimate>& em) {
            csv.write_row(std::vector<double>{double(row.n), double(r), study.alpha, energy,
                                              em ? em->log_mean_exp : nan,
                                              em ? em->ci_low : nan, em ? em->ci_high : nan,
                                              em ? em->diverged_fraction : nan});
        };
        emit(0, row.full_energy_mean, row.full_exp_moment);
        emit(1, row.partial_energy_mean, row.partial_exp_moment);
    }
    sink.note("girsanov.csv", "csv", csv.rows());
    sink.write_json("girsanov.json", json{{"horizon", study.horizon},
                                          {"dt", study.dt},
                                          {"alpha", study.alpha},
                                          {"n_paths", study.n_paths},
                                          {"errors", errors}});

    std::ostringstream s;
    const auto& first = study.rows.front();
    const auto& last = study.rows.back();
    s << "girsanov sweep over " << study.rows.size() << " system sizes";
    if (first.error.empty() && last.error.empty() && study.rows.size() > 1)
        s << "; full-drift energy grew x"
          << io::format_number(last.full_energy_mean / first.full_energy_mean) << " from N="
          << first.n << " to N=" << last.n;
    sink.summary = s.str();
}

// ------------------------------------------------------------------- chaos

/// Reference marginal at time t: closed forms for the driftless and
/// linear-pull kernels (Gaussian initial law), a Picard fixed point
/// otherwise (1-d; converted to a grid so it can be both sampled and
/// inverted).
meanfield::DensityEstimate chaos_reference(const config::Config& cfg, double t) {
    const auto& sim = cfg.sim;
    const auto& law = sim.initial_law;
    bool gaussian_init = law.kind == sde::InitialLawKind::Gaussian;
    bool isotropic =
        gaussian_init &&
        std::all_of(law.var.begin(), law.var.end(), [&](double v) { return v == law.var[0]; });

    if (isotropic && sim.kernel.id == kernels::BuiltinId::Zero) {
        meanfield::DensityEstimate ref;
        ref.kind = meanfield::DensityKind::Gaussian;
        ref.time = t;
        ref.dim = sim.dim;
        ref.mean = law.mean;
        ref.var = law.var[0] + sim.diffusion * sim.diffusion * t;
        return ref;
    }
    if (isotropic && sim.kernel.id == kernels::BuiltinId::LinearOU) {
        auto ref = meanfield::exact_ou_density(t, law.mean, law.var[0], sim.diffusion);
        ref.dim = sim.dim;
        return ref;
    }

    if (sim.dim != 1)
        throw UsageError("no closed-form reference for kernel '" + sim.kernel.name +
                         "' in d >= 2; chaos studies against a Picard reference are 1-d");
    sde::SimConfig ref_cfg = sim;
    ref_cfg.horizon = t;
    ref_cfg.validate();
    auto picard = meanfield::picard_solve(ref_cfg, cfg.experiment.iterations,
                                          std::max<long>(cfg.experiment.n_ref, 1000));
    auto grid = projection_grid(cfg, {&picard.densities.back(), 1}, 1);
    auto ref = meanfield::kde_on_grid(picard.densities.back(), grid);
    ref.time = picard.densities.back().time;
    return ref;
}

void run_chaos(Sink& sink) {
    const auto& cfg = sink.cfg;
    const auto& e = cfg.experiment;
    std::string study = e.study.empty() ? "marginal" : e.study;
    chaos::DiagnosticsReport report;

    if (study == "marginal") {
        chaos::MarginalStudyParams p;
        p.n_list = default_n_list(cfg);
        p.t = default_time(cfg);
        if (e.method == "exact-w1-1d")
            p.method = chaos::DistanceMethod::ExactW1;
        else if (e.method == "sliced-w1")
            p.method = chaos::DistanceMethod::SlicedW1;
        else if (e.method == "energy-distance")
            p.method = chaos::DistanceMethod::EnergyDistance;
        else
            throw UsageError("unknown distance method '" + e.method +
                             "'; expected exact-w1-1d, sliced-w1, or energy-distance");
        p.n_slices = e.n_slices;
        p.n_runs = e.n_runs;
        p.reference_samples = e.reference_samples;
        report = chaos::marginal_distance(cfg.sim, p, chaos_reference(cfg, p.t));
    } else if (study == "tightness") {
        if (e.times.empty())
            throw UsageError("the tightness study needs experiment.times (list of gaps)");
        auto traj = sde::run(cfg.sim, 1, false);
        std::vector<chaos::TimePair> pairs;
        for (double gap : e.times) pairs.push_back({e.s, e.s + gap});
        report = chaos::tightness_moment(traj, pairs);
    } else if (study == "g-functional") {
        chaos::GStudyParams p;
        p.n_list = default_n_list(cfg);
        p.f = e.f;
        p.frequency = e.frequency;
        p.phi = e.phi;
        p.early_times = e.early_times;
        p.t = default_time(cfg);
        p.s = e.s > 0.0 ? e.s : p.t / 2.0;
        p.n_runs = e.n_runs;
        report = chaos::g_functional_study(cfg.sim, p);
    } else if (study == "independence") {
        chaos::IndependenceParams p;
        p.n_list = default_n_list(cfg);
        p.g = e.g;
        p.h = e.h;
        p.t = default_time(cfg);
        p.n_runs = e.n_runs;
        report = chaos::independence_study(cfg.sim, p);
    } else {
        throw UsageError("unknown chaos study '" + study +
                         "'; expected marginal, tightness, g-functional, or independence");
    }

    write_report_csv(sink, "report.csv", report);
    sink.write_json("report.json", series_json(report));
    std::ostringstream s;
    s << report.name << ": " << report.series.size() << " points";
    if (report.fitted_slope)
        s << ", log-log slope " << io::format_number(*report.fitted_slope);
    sink.summary = s.str();
}

// ------------------------------------------------------------ bound-oracle

void run_bound_oracle(Sink& sink) {
    const auto& cfg = sink.cfg;
    const auto& e = cfg.experiment;
    if (e.windows.empty())
        throw UsageError("bound-oracle needs experiment.windows (list of window widths)");

    std::vector<gauss::Window> windows;
    for (double w : e.windows) windows.push_back({0.0, w});
    std::vector<std::vector<double>> shifts;
    for (double s : e.shifts) {
        std::vector<double> shift(std::size_t(cfg.sim.dim), 0.0);
        shift[0] = s;
        shifts.push_back(std::move(shift));
    }

    auto sweep = gauss::lemma1_sweep(cfg.sim.kernel, windows, shifts);

    io::CsvWriter csv(sink.outdir / "bound.csv",
                      {"window_width", "shift_norm", "integral", "bound"});
    for (const auto& pt : sweep.points)
        csv.write_row(std::vector<double>{pt.width, pt.shift_norm, pt.integral, pt.bound});
    sink.note("bound.csv", "csv", csv.rows());

    json j{{"exponent", sweep.exponent},
           {"fitted_slope", finite_or_null(sweep.fitted_slope)},
           {"c0_estimate", sweep.c0_estimate}};
    double kappa = cfg.sim.kernel.params.kappa > 0.0 ? cfg.sim.kernel.params.kappa : 1.0;
    try {
        auto cond = gauss::conditioning_windows(sweep.c0_estimate, kappa, cfg.sim.horizon,
                                                cfg.sim.kernel.exponents, e.alpha);
        j["conditioning"] = {{"window", cond.lemma3_window},
                             {"delta", cond.est1_delta},
                             {"n_windows", cond.n_windows}};
    } catch (const ConstraintError& err) {
        j["conditioning"] = nullptr;
        j["conditioning_error"] = err.what();
    }
    sink.write_json("bound.json", j);

    std::ostringstream s;
    s << "windowed bound over " << sweep.points.size() << " widths: fitted slope "
      << io::format_number(sweep.fitted_slope) << " (exponent "
      << io::format_number(sweep.exponent) << "), c0 = "
      << io::format_number(sweep.c0_estimate);
    sink.summary = s.str();
}

const std::array<std::string, 6> kSubcommands = {"check-kernel", "simulate", "meanfield",
                                                 "girsanov",     "chaos",    "bound-oracle"};

} // namespace

std::span<const std::string> subcommands() { return kSubcommands; }

std::string module_for(const std::string& subcommand) {
    if (subcommand == "check-kernel") return "kernels";
    if (subcommand == "simulate") return "sde_engine";
    if (subcommand == "meanfield") return "meanfield";
    if (subcommand == "girsanov") return "girsanov";
    if (subcommand == "chaos") return "chaos_diagnostics";
    if (subcommand == "bound-oracle") return "gauss_oracle";
    return "cli";
}

std::string error_type_name(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const ConstraintError*>(&e)) return "constraint";
    if (dynamic_cast<const UsageError*>(&e)) return "usage";
    if (dynamic_cast<const NumericalError*>(&e)) return "numerical";
    if (dynamic_cast<const BlowUpError*>(&e)) return "blow-up";
    if (dynamic_cast<const EstimationError*>(&e)) return "estimation";
    if (dynamic_cast<const Error*>(&e)) return "error";
    return "internal";
}

RunManifest dispatch(const std::string& subcommand, const config::Config& cfg,
                     const std::filesystem::path& outdir) {
    if (std::find(kSubcommands.begin(), kSubcommands.end(), subcommand) == kSubcommands.end())
        throw UsageError("unknown subcommand '" + subcommand + "'");
    std::filesystem::create_directories(outdir);

    RunManifest manifest;
    manifest.config_hash = hex64(config::config_hash(cfg));
    manifest.seed = cfg.sim.seed;
    manifest.subcommand = subcommand;
    manifest.started = iso8601_now();

    Sink sink{cfg, outdir, {}, {}};
    {
        std::ofstream out(outdir / "config.ini");
        if (!out) throw UsageError("cannot write " + (outdir / "config.ini").string());
        out << config::render(cfg);
    }
    sink.note("config.ini", "config", 0);

    if (subcommand == "check-kernel")
        run_check_kernel(sink);
    else if (subcommand == "simulate")
        run_simulate(sink);
    else if (subcommand == "meanfield")
        run_meanfield(sink);
    else if (subcommand == "girsanov")
        run_girsanov(sink);
    else if (subcommand == "chaos")
        run_chaos(sink);
    else
        run_bound_oracle(sink);

    manifest.finished = iso8601_now();
    manifest.outputs = std::move(sink.outputs);
    manifest.summary = std::move(sink.summary);

    json outputs = json::array();
    for (const auto& rec : manifest.outputs)
        outputs.push_back({{"path", rec.path},
                           {"kind", rec.kind},
                           {"rows", rec.rows},
                           {"content_hash", rec.content_hash}});
    json j{{"tool_version", manifest.tool_version},
           {"config_hash", manifest.config_hash},
           {"seed", manifest.seed},
           {"subcommand", manifest.subcommand},
           {"started", manifest.started},
           {"finished", manifest.finished},
           {"outputs", outputs},
           {"summary", manifest.summary}};
    std::ofstream out(outdir / "manifest.json");
    if (!out) throw UsageError("cannot write " + (outdir / "manifest.json").string());
    out << j.dump(2) << "\n";
    return manifest;
}

void write_error_report(const std::filesystem::path& outdir, const std::string& module,
                        const std::string& error_type, const std::string& message,
                        const std::string& config_hash_hex) noexcept {
    try {
        std::filesystem::create_directories(outdir);
        json j{{"module", module},
               {"error_type", error_type},
               {"message", message},
               {"config_hash",
                config_hash_hex.empty() ? json(nullptr) : json(config_hash_hex)}};
        std::ofstream out(outdir / "error.json");
        out << j.dump(2) << "\n";
    } catch (...) {
        // diagnostics only; never mask the original failure
    }
}

} // namespace chaoslab::cli
