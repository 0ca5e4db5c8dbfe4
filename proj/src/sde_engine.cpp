#include "chaoslab/sde_engine.hpp"

#include <algorithm>
#include <cmath>

#include "chaoslab/errors.hpp"
#include "chaoslab/parallel.hpp"
#include "chaoslab/rng.hpp"

namespace chaoslab::sde {

// ------------------------------------------------------------- initial law

void InitialLaw::validate(int dim) const {
    auto check_size = [&](const std::vector<double>& v, const char* what) {
        if (v.size() != 1 && v.size() != std::size_t(dim))
            throw ConstraintError(std::string("initial law: ") + what +
                                  " must have 1 (broadcast) or dim entries");
    };
    switch (kind) {
    case InitialLawKind::PointMass:
        if (!mean.empty()) check_size(mean, "mean");
        break;
    case InitialLawKind::Gaussian:
        if (!mean.empty()) check_size(mean, "mean");
        if (!var.empty()) check_size(var, "var");
        for (double v : var)
            if (!(v >= 0.0)) throw ConstraintError("initial law: variances must be >= 0");
        break;
    case InitialLawKind::UniformBox: {
        if (lo.empty() || hi.empty())
            throw ConstraintError("initial law: uniform box needs lo and hi");
        check_size(lo, "lo");
        check_size(hi, "hi");
        for (int a = 0; a < dim; ++a) {
            double l = lo[lo.size() == 1 ? 0 : std::size_t(a)];
            double h = hi[hi.size() == 1 ? 0 : std::size_t(a)];
            if (!(h > l)) throw ConstraintError("initial law: box needs hi > lo per axis");
        }
        break;
    }
    }
}

namespace {
double broadcast(const std::vector<double>& v, int axis, double def) {
    if (v.empty()) return def;
    return v.size() == 1 ? v[0] : v[std::size_t(axis)];
}
} // namespace

double InitialLaw::sample(uint64_t seed, uint32_t stream, int axis, int dim) const {
    (void)dim;
    switch (kind) {
    case InitialLawKind::PointMass:
        return broadcast(mean, axis, 0.0);
    case InitialLawKind::Gaussian: {
        double m = broadcast(mean, axis, 0.0);
        double v = broadcast(var, axis, 1.0);
        return m + std::sqrt(v) * rng::normal(seed, rng::Stream::Init, stream, 0, uint32_t(axis));
    }
    case InitialLawKind::UniformBox: {
        double l = broadcast(lo, axis, 0.0);
        double h = broadcast(hi, axis, 1.0);
        return l + (h - l) * rng::uniform(seed, rng::Stream::Init, stream, 0, uint32_t(axis));
    }
    }
    return 0.0;
}

// ------------------------------------------------------------------ config

long SimConfig::steps() const { return std::lround(horizon / dt); }

void SimConfig::validate() const {
    if (n_particles < 1) throw ConstraintError("n_particles >= 1 required");
    if (dim < 1) throw ConstraintError("dim >= 1 required");
    if (!(horizon > 0.0)) throw ConstraintError("horizon > 0 required");
    if (!(dt > 0.0)) throw ConstraintError("dt > 0 required");
    if (!(diffusion > 0.0)) throw ConstraintError("diffusion > 0 required");
    long k = steps();
    if (k < 1 || std::abs(double(k) * dt - horizon) > 1e-9 * std::max(1.0, horizon))
        throw ConstraintError("dt must divide horizon to within one part in 1e9");
    if (partial_r < 0 || partial_r >= n_particles)
        throw ConstraintError("partial_r must lie in [0, n_particles)");
    if (taming && !(*taming > 0.0)) throw ConstraintError("taming must be > 0 when set");
    initial_law.validate(dim);
}

// ------------------------------------------------------------------ engine

ParticleEnsemble sample_initial(const SimConfig& config) {
    config.validate();
    ParticleEnsemble state;
    state.n = config.n_particles;
    state.dim = config.dim;
    state.positions.resize(std::size_t(state.n) * config.dim);
    state.streams.resize(std::size_t(state.n));
    for (long i = 0; i < state.n; ++i) state.streams[std::size_t(i)] = uint32_t(i);
    for (int a = 0; a < config.dim; ++a)
        for (long i = 0; i < state.n; ++i)
            state.at(i, a) =
                config.initial_law.sample(config.seed, state.streams[std::size_t(i)], a,
                                          config.dim);
    return state;
}

namespace {

void normalize_streams(ParticleEnsemble& state) {
    if (state.streams.empty()) {
        state.streams.resize(std::size_t(state.n));
        for (long i = 0; i < state.n; ++i) state.streams[std::size_t(i)] = uint32_t(i);
    } else if (state.streams.size() != std::size_t(state.n)) {
        throw UsageError("ensemble stream table must have one entry per particle");
    }
}

void check_finite(const ParticleEnsemble& state, double time) {
    for (long i = 0; i < state.n; ++i)
        for (int a = 0; a < state.dim; ++a)
            if (!std::isfinite(state.at(i, a)))
                throw BlowUpError("particle position turned non-finite (blow-up) at t = " +
                                      std::to_string(time) + ", particle " + std::to_string(i),
                                  i, time);
}

/// Core update shared by the interacting and the linear dynamics: the
/// drift is already in `drift` (axis-major), possibly tamed; adds
/// drift*dt + sigma*sqrt(dt)*xi and optionally stores the raw increments.
void apply_update(const SimConfig& config, const ParticleEnsemble& in, ParticleEnsemble& out,
                  std::vector<double>& drift, double* increments) {
    long n = in.n;
    int d = in.dim;
    double sdt = std::sqrt(config.dt);
    double cap = config.taming ? *config.taming / sdt : 0.0;
    // position updates are O(d) per particle; threading pays off only for
    // large ensembles (drift evaluation parallelizes separately)
    int threads = n * d < 16384 ? 1 : 0;
    parallel::parallel_for(std::size_t(n), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            if (config.taming) {
                double norm2 = 0.0;
                for (int a = 0; a < d; ++a) {
                    double v = drift[std::size_t(a) * n + i];
                    norm2 += v * v;
                }
                if (norm2 > cap * cap) {
                    double scale = cap / std::sqrt(norm2);
                    for (int a = 0; a < d; ++a) drift[std::size_t(a) * n + i] *= scale;
                }
            }
            for (int a = 0; a < d; ++a) {
                double dw = sdt * rng::normal(config.seed, rng::Stream::StepNoise,
                                              in.streams[i], uint32_t(in.step_index),
                                              uint32_t(a));
                if (increments) increments[std::size_t(a) * n + i] = dw;
                out.positions[std::size_t(a) * n + i] =
                    in.positions[std::size_t(a) * n + i] +
                    drift[std::size_t(a) * n + i] * config.dt + config.diffusion * dw;
            }
        }
    }, threads);
    out.time = double(in.step_index + 1) * config.dt;
    out.step_index = in.step_index + 1;
    out.n = n;
    out.dim = d;
    out.streams = in.streams;
    check_finite(out, out.time);
}

void step_into(const SimConfig& config, const ParticleEnsemble& in, ParticleEnsemble& out,
               std::vector<double>& drift, double* increments) {
    if (in.time + config.dt > config.horizon + 0.5 * config.dt)
        throw UsageError("step would pass the horizon");
    drift.resize(in.positions.size());
    kernels::system_drift(config.kernel, in.time, in.positions.data(), in.n, in.dim,
                          config.partial_r, drift.data());
    out.positions.resize(in.positions.size());
    apply_update(config, in, out, drift, increments);
}

void linear_step_into(const SimConfig& config, const FieldDrift& field,
                      const ParticleEnsemble& in, ParticleEnsemble& out,
                      std::vector<double>& drift, double* increments) {
    if (in.time + config.dt > config.horizon + 0.5 * config.dt)
        throw UsageError("step would pass the horizon");
    long n = in.n;
    drift.assign(in.positions.size(), 0.0);
    field(in.time, in.positions, drift);
    for (std::size_t idx = 0; idx < drift.size(); ++idx)
        if (!std::isfinite(drift[idx])) {
            long i = long(idx % std::size_t(n));
            throw BlowUpError("linear drift field returned a non-finite value at t = " +
                                  std::to_string(in.time) + ", particle " + std::to_string(i),
                              i, in.time);
        }
    out.positions.resize(in.positions.size());
    apply_update(config, in, out, drift, increments);
}

TrajectoryBlock run_impl(const SimConfig& config, ParticleEnsemble state, long record_every,
                         bool keep_increments, const FieldDrift* field) {
    config.validate();
    if (record_every < 1) throw ConstraintError("record_every >= 1 required");
    if (keep_increments && record_every != 1)
        throw ConstraintError("keep_increments requires record_every == 1 "
                              "(weight functionals need every grid point)");
    normalize_streams(state);
    check_finite(state, state.time);

    TrajectoryBlock traj;
    traj.n = state.n;
    traj.dim = state.dim;
    traj.dt = config.dt;
    traj.diffusion = config.diffusion;
    traj.seed = config.seed;
    traj.record_every = record_every;
    traj.kernel_name = config.kernel.name;
    traj.has_increments = keep_increments;

    long k_total = config.steps();
    traj.times.reserve(std::size_t(k_total / record_every + 2));
    traj.snapshots.reserve(std::size_t(k_total / record_every + 2));
    traj.times.push_back(state.time);
    traj.snapshots.push_back(state.positions);

    ParticleEnsemble next;
    std::vector<double> drift;
    std::vector<double> incr(keep_increments ? state.positions.size() : 0);
    for (long k = state.step_index; k < k_total; ++k) {
        double* incr_ptr = keep_increments ? incr.data() : nullptr;
        if (field)
            linear_step_into(config, *field, state, next, drift, incr_ptr);
        else
            step_into(config, state, next, drift, incr_ptr);
        std::swap(state, next);
        if (keep_increments) traj.increments.push_back(incr);
        if ((state.step_index % record_every) == 0 || state.step_index == k_total) {
            traj.times.push_back(state.time);
            traj.snapshots.push_back(state.positions);
        }
    }
    return traj;
}

} // namespace

ParticleEnsemble step(const SimConfig& config, const ParticleEnsemble& state) {
    config.validate();
    ParticleEnsemble in = state;
    normalize_streams(in);
    ParticleEnsemble out;
    std::vector<double> drift;
    step_into(config, in, out, drift, nullptr);
    return out;
}

TrajectoryBlock run(const SimConfig& config, long record_every, bool keep_increments) {
    return run_impl(config, sample_initial(config), record_every, keep_increments, nullptr);
}

TrajectoryBlock run_from(const SimConfig& config, ParticleEnsemble state, long record_every,
                         bool keep_increments) {
    config.validate();
    if (state.n != config.n_particles || state.dim != config.dim)
        throw UsageError("run_from: ensemble shape does not match the config");
    return run_impl(config, std::move(state), record_every, keep_increments, nullptr);
}

TrajectoryBlock run_linear(const SimConfig& config, const FieldDrift& drift, long record_every,
                           bool keep_increments) {
    return run_impl(config, sample_initial(config), record_every, keep_increments, &drift);
}

std::size_t TrajectoryBlock::index_at(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= 0.5 * dt) return k;
    throw UsageError("no snapshot recorded at t = " + std::to_string(t) +
                     "; re-run with a denser record_every");
}

} // namespace chaoslab::sde
