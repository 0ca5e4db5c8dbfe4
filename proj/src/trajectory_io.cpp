#include "chaoslab/sde_engine.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "chaoslab/csv.hpp"
#include "chaoslab/errors.hpp"

namespace chaoslab::sde {

namespace {

// Layout (all integers little-endian):
//   magic   8 bytes "CHLBTRJ1"
//   version u32 (currently 1)
//   flags   u32 (bit 0: Brownian increments present)
//   n       u64   dim     u64
//   dt      f64   sigma   f64
//   seed    u64   record_every u64
//   n_snapshots u64   n_steps u64
//   kernel name: u64 byte count + raw bytes
//   times:       n_snapshots f64
//   snapshots:   n_snapshots blocks of n*dim f64, row-major (particle, axis)
//   increments:  when flagged, n_steps blocks of n*dim f64, row-major
constexpr char kMagic[8] = {'C', 'H', 'L', 'B', 'T', 'R', 'J', '1'};
constexpr uint32_t kVersion = 1;

template <class T>
void put(std::ofstream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
    } else {
        out.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }
}

template <class T>
T get(std::ifstream& in) {
    std::array<unsigned char, sizeof(T)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
    if (!in) throw UsageError("trajectory file truncated");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

// in-memory layout is axis-major; the file stores (particle, axis) rows
void put_row_major(std::ofstream& out, const std::vector<double>& axis_major, long n,
                   int dim) {
    for (long i = 0; i < n; ++i)
        for (int a = 0; a < dim; ++a) put(out, axis_major[std::size_t(a) * n + i]);
}

std::vector<double> get_row_major(std::ifstream& in, long n, int dim) {
    std::vector<double> axis_major(std::size_t(n) * dim);
    for (long i = 0; i < n; ++i)
        for (int a = 0; a < dim; ++a) axis_major[std::size_t(a) * n + i] = get<double>(in);
    return axis_major;
}

} // namespace

void write_trajectory(const std::filesystem::path& path, const TrajectoryBlock& traj) {
    if (traj.n <= 0 || traj.dim <= 0)
        throw UsageError("cannot persist an empty trajectory block");
    if (traj.times.size() != traj.snapshots.size())
        throw UsageError("trajectory block has mismatched times and snapshots");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot open trajectory file for writing: " + path.string());

    out.write(kMagic, sizeof(kMagic));
    put(out, kVersion);
    put(out, uint32_t(traj.has_increments ? 1 : 0));
    put(out, uint64_t(traj.n));
    put(out, uint64_t(traj.dim));
    put(out, traj.dt);
    put(out, traj.diffusion);
    put(out, traj.seed);
    put(out, uint64_t(traj.record_every));
    put(out, uint64_t(traj.times.size()));
    put(out, uint64_t(traj.increments.size()));
    put(out, uint64_t(traj.kernel_name.size()));
    out.write(traj.kernel_name.data(), std::streamsize(traj.kernel_name.size()));

    for (double t : traj.times) put(out, t);
    for (const auto& snap : traj.snapshots) {
        if (snap.size() != std::size_t(traj.n) * traj.dim)
            throw UsageError("trajectory snapshot has the wrong size");
        put_row_major(out, snap, traj.n, traj.dim);
    }
    if (traj.has_increments)
        for (const auto& inc : traj.increments) put_row_major(out, inc, traj.n, traj.dim);
    if (!out) throw UsageError("short write while persisting trajectory: " + path.string());
}

TrajectoryBlock read_trajectory(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open trajectory file: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw UsageError("not a trajectory file (bad magic): " + path.string());
    uint32_t version = get<uint32_t>(in);
    if (version != kVersion)
        throw UsageError("unsupported trajectory file version " + std::to_string(version));
    uint32_t flags = get<uint32_t>(in);

    TrajectoryBlock traj;
    traj.has_increments = (flags & 1u) != 0;
    traj.n = long(get<uint64_t>(in));
    traj.dim = int(get<uint64_t>(in));
    traj.dt = get<double>(in);
    traj.diffusion = get<double>(in);
    traj.seed = get<uint64_t>(in);
    traj.record_every = long(get<uint64_t>(in));
    auto n_snapshots = get<uint64_t>(in);
    auto n_steps = get<uint64_t>(in);
    auto name_len = get<uint64_t>(in);
    if (traj.n <= 0 || traj.dim <= 0 || name_len > (1u << 20))
        throw UsageError("corrupt trajectory header: " + path.string());
    traj.kernel_name.resize(name_len);
    in.read(traj.kernel_name.data(), std::streamsize(name_len));

    traj.times.reserve(n_snapshots);
    for (uint64_t k = 0; k < n_snapshots; ++k) traj.times.push_back(get<double>(in));
    traj.snapshots.reserve(n_snapshots);
    for (uint64_t k = 0; k < n_snapshots; ++k)
        traj.snapshots.push_back(get_row_major(in, traj.n, traj.dim));
    if (traj.has_increments) {
        traj.increments.reserve(n_steps);
        for (uint64_t k = 0; k < n_steps; ++k)
            traj.increments.push_back(get_row_major(in, traj.n, traj.dim));
    }
    if (!in) throw UsageError("trajectory file truncated: " + path.string());
    return traj;
}

void export_marginals_csv(const std::filesystem::path& path, const TrajectoryBlock& traj,
                          std::span<const long> particles) {
    for (long p : particles)
        if (p < 0 || p >= traj.n)
            throw UsageError("marginal export: particle index out of range");
    std::vector<std::string> header{"time"};
    for (long p : particles)
        for (int a = 0; a < traj.dim; ++a)
            header.push_back("p" + std::to_string(p) + "_x" + std::to_string(a));
    io::CsvWriter csv(path, header);
    std::vector<double> row;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        row.clear();
        row.push_back(traj.times[k]);
        for (long p : particles)
            for (int a = 0; a < traj.dim; ++a)
                row.push_back(traj.snapshots[k][std::size_t(a) * traj.n + p]);
        csv.write_row(row);
    }
}

} // namespace chaoslab::sde
