#include "chaoslab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chaoslab/csv.hpp"
#include "chaoslab/errors.hpp"

namespace chaoslab::config {

namespace {

struct RawValue {
    std::string text;
    int line = 0;
    int column = 0; ///< 1-based column of the value text
};

using Section = std::map<std::string, RawValue>;

const std::set<std::string> kKernelKeys = {"name", "d", "p", "q", "alpha", "s", "c", "kappa"};
const std::set<std::string> kSimKeys = {"n",      "horizon",   "dt",      "sigma",
                                        "seed",   "taming",    "partial_r", "init",
                                        "init_mean", "init_var", "init_lo", "init_hi"};
const std::set<std::string> kExperimentKeys = {
    "record_every", "keep_increments", "marginals", "n_list", "alpha", "n_paths",
    "n_runs", "study", "method", "n_slices", "iterations", "n_ref", "bandwidth",
    "grid_lo", "grid_hi", "grid_cells", "dt_pde", "n_snapshots", "times", "t", "s",
    "early_times", "f", "frequency", "phi", "g", "h", "decay_r", "windows", "shifts",
    "reference_samples"};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const RawValue& v, const std::string& key) {
    double out = 0.0;
    const char* begin = v.text.data();
    const char* end = begin + v.text.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("value of '" + key + "' is not a number: '" + v.text + "' (line " +
                              std::to_string(v.line) + ", column " + std::to_string(v.column) +
                              ")",
                          v.line, v.column);
    return out;
}

long parse_integer(const RawValue& v, const std::string& key) {
    double d = parse_number(v, key);
    long l = std::lround(d);
    if (std::abs(d - double(l)) > 1e-9)
        throw ConfigError("value of '" + key + "' must be an integer: '" + v.text + "' (line " +
                              std::to_string(v.line) + ")",
                          v.line, v.column);
    return l;
}

uint64_t parse_seed(const RawValue& v, const std::string& key) {
    uint64_t out = 0;
    const char* begin = v.text.data();
    const char* end = begin + v.text.size();
    auto res = std::from_chars(begin, end, out);
    if (res.ec != std::errc() || res.ptr != end)
        throw ConfigError("value of '" + key + "' is not an unsigned integer: '" + v.text +
                              "' (line " + std::to_string(v.line) + ")",
                          v.line, v.column);
    return out;
}

bool parse_bool(const RawValue& v, const std::string& key) {
    if (v.text == "true") return true;
    if (v.text == "false") return false;
    throw ConfigError("value of '" + key + "' must be true or false, got '" + v.text +
                          "' (line " + std::to_string(v.line) + ")",
                      v.line, v.column);
}

std::vector<double> parse_list(const RawValue& v, const std::string& key) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= v.text.size()) {
        auto comma = v.text.find(',', pos);
        std::string item = trim(v.text.substr(pos, comma == std::string::npos
                                                       ? std::string::npos
                                                       : comma - pos));
        if (item.empty())
            throw ConfigError("empty element in list '" + key + "' (line " +
                                  std::to_string(v.line) + ")",
                              v.line, v.column);
        RawValue item_v{item, v.line, v.column + int(pos)};
        out.push_back(parse_number(item_v, key));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<long> parse_long_list(const RawValue& v, const std::string& key) {
    std::vector<long> out;
    for (double d : parse_list(v, key)) {
        long l = std::lround(d);
        if (std::abs(d - double(l)) > 1e-9)
            throw ConfigError("list '" + key + "' must contain integers (line " +
                                  std::to_string(v.line) + ")",
                              v.line, v.column);
        out.push_back(l);
    }
    return out;
}

std::map<std::string, Section> tokenize(const std::string& text) {
    std::map<std::string, Section> sections;
    std::istringstream in(text);
    std::string raw_line;
    std::string current;
    int line_no = 0;
    while (std::getline(in, raw_line)) {
        ++line_no;
        std::string line = raw_line;
        if (auto hash = line.find('#'); hash != std::string::npos) line = line.substr(0, hash);
        std::string stripped = trim(line);
        if (stripped.empty()) continue;

        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                throw ConfigError("unterminated section header (line " +
                                      std::to_string(line_no) + ")",
                                  line_no, int(line.find('[')) + 1);
            current = trim(stripped.substr(1, stripped.size() - 2));
            if (current != "kernel" && current != "sim" && current != "experiment")
                throw ConfigError("unknown section [" + current + "] (line " +
                                      std::to_string(line_no) +
                                      "); expected [kernel], [sim], or [experiment]",
                                  line_no, int(line.find('[')) + 1);
            sections[current]; // materialize (possibly empty) section
            continue;
        }

        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value' (line " + std::to_string(line_no) + ")",
                              line_no, int(line.find_first_not_of(" \t")) + 1);
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("missing key before '=' (line " + std::to_string(line_no) + ")",
                              line_no, 1);
        for (char ch : key)
            if (!(std::islower(static_cast<unsigned char>(ch)) ||
                  std::isdigit(static_cast<unsigned char>(ch)) || ch == '_'))
                throw ConfigError("keys are lowercase [a-z0-9_], got '" + key + "' (line " +
                                      std::to_string(line_no) + ")",
                                  line_no, int(line.find(key)) + 1);
        if (value.empty())
            throw ConfigError("key '" + key + "' has an empty value (line " +
                                  std::to_string(line_no) + ")",
                              line_no, int(line.find('=')) + 2);
        if (current.empty())
            throw ConfigError("key '" + key + "' appears before any section header (line " +
                                  std::to_string(line_no) + ")",
                              line_no, 1);

        const std::set<std::string>& allowed = current == "kernel" ? kKernelKeys
                                               : current == "sim"  ? kSimKeys
                                                                   : kExperimentKeys;
        if (!allowed.count(key))
            throw ConfigError("unknown key '" + key + "' in [" + current + "] (line " +
                                  std::to_string(line_no) + ")",
                              line_no, int(line.find(key)) + 1);

        auto [it, inserted] = sections[current].emplace(
            key, RawValue{value, line_no, int(line.find(value, eq)) + 1});
        if (!inserted)
            throw ConfigError("duplicate key '" + key + "' in [" + current + "] (lines " +
                                  std::to_string(it->second.line) + " and " +
                                  std::to_string(line_no) + ")",
                              line_no);
    }
    return sections;
}

const RawValue* find(const Section& s, const std::string& key) {
    auto it = s.find(key);
    return it == s.end() ? nullptr : &it->second;
}

const RawValue& require(const Section& s, const std::string& section_name,
                        const std::string& key) {
    if (auto* v = find(s, key)) return *v;
    throw ConfigError("missing required key '" + key + "' in [" + section_name + "]");
}

} // namespace

Config parse_config(const std::string& text) {
    auto sections = tokenize(text);
    if (!sections.count("kernel")) throw ConfigError("missing [kernel] section");
    if (!sections.count("sim")) throw ConfigError("missing [sim] section");
    const Section& kern = sections["kernel"];
    const Section& sim = sections["sim"];
    const Section empty;
    const Section& exp = sections.count("experiment") ? sections["experiment"] : empty;

    Config cfg;

    // [kernel]
    std::string kernel_name = require(kern, "kernel", "name").text;
    std::map<std::string, double> params;
    for (const auto& [key, raw] : kern)
        if (key != "name") params[key] = parse_number(raw, key);
    cfg.sim.kernel = kernels::builtin(kernel_name, params);

    // [sim]
    cfg.sim.dim = cfg.sim.kernel.exponents.d;
    cfg.sim.n_particles = parse_integer(require(sim, "sim", "n"), "n");
    cfg.sim.horizon = parse_number(require(sim, "sim", "horizon"), "horizon");
    cfg.sim.dt = parse_number(require(sim, "sim", "dt"), "dt");
    if (auto* v = find(sim, "sigma")) cfg.sim.diffusion = parse_number(*v, "sigma");
    if (auto* v = find(sim, "seed")) cfg.sim.seed = parse_seed(*v, "seed");
    if (auto* v = find(sim, "taming")) cfg.sim.taming = parse_number(*v, "taming");
    if (auto* v = find(sim, "partial_r")) cfg.sim.partial_r = parse_integer(*v, "partial_r");

    std::string init = "gaussian";
    if (auto* v = find(sim, "init")) init = v->text;
    if (init == "point-mass")
        cfg.sim.initial_law.kind = sde::InitialLawKind::PointMass;
    else if (init == "gaussian")
        cfg.sim.initial_law.kind = sde::InitialLawKind::Gaussian;
    else if (init == "uniform")
        cfg.sim.initial_law.kind = sde::InitialLawKind::UniformBox;
    else {
        const RawValue* v = find(sim, "init");
        throw ConfigError("unknown initial law '" + init +
                              "'; expected point-mass, gaussian, or uniform" +
                              (v ? " (line " + std::to_string(v->line) + ")" : ""),
                          v ? v->line : 0, v ? v->column : 0);
    }
    cfg.sim.initial_law.mean = {0.0};
    cfg.sim.initial_law.var = {1.0};
    cfg.sim.initial_law.lo = {-1.0};
    cfg.sim.initial_law.hi = {1.0};
    if (auto* v = find(sim, "init_mean")) cfg.sim.initial_law.mean = parse_list(*v, "init_mean");
    if (auto* v = find(sim, "init_var")) cfg.sim.initial_law.var = parse_list(*v, "init_var");
    if (auto* v = find(sim, "init_lo")) cfg.sim.initial_law.lo = parse_list(*v, "init_lo");
    if (auto* v = find(sim, "init_hi")) cfg.sim.initial_law.hi = parse_list(*v, "init_hi");

    // [experiment]
    ExperimentPlan& e = cfg.experiment;
    if (auto* v = find(exp, "record_every")) e.record_every = parse_integer(*v, "record_every");
    if (auto* v = find(exp, "keep_increments"))
        e.keep_increments = parse_bool(*v, "keep_increments");
    if (auto* v = find(exp, "marginals")) e.marginals = parse_long_list(*v, "marginals");
    if (auto* v = find(exp, "n_list")) e.n_list = parse_long_list(*v, "n_list");
    if (auto* v = find(exp, "alpha")) e.alpha = parse_number(*v, "alpha");
    if (auto* v = find(exp, "n_paths")) e.n_paths = parse_integer(*v, "n_paths");
    if (auto* v = find(exp, "n_runs")) e.n_runs = parse_integer(*v, "n_runs");
    if (auto* v = find(exp, "study")) e.study = v->text;
    if (auto* v = find(exp, "method")) e.method = v->text;
    if (auto* v = find(exp, "n_slices")) e.n_slices = int(parse_integer(*v, "n_slices"));
    if (auto* v = find(exp, "iterations")) e.iterations = parse_integer(*v, "iterations");
    if (auto* v = find(exp, "n_ref")) e.n_ref = parse_integer(*v, "n_ref");
    if (auto* v = find(exp, "bandwidth")) e.bandwidth = parse_number(*v, "bandwidth");
    if (auto* v = find(exp, "grid_lo")) e.grid_lo = parse_list(*v, "grid_lo");
    if (auto* v = find(exp, "grid_hi")) e.grid_hi = parse_list(*v, "grid_hi");
    if (auto* v = find(exp, "grid_cells")) e.grid_cells = parse_long_list(*v, "grid_cells");
    if (auto* v = find(exp, "dt_pde")) e.dt_pde = parse_number(*v, "dt_pde");
    if (auto* v = find(exp, "n_snapshots")) e.n_snapshots = parse_integer(*v, "n_snapshots");
    if (auto* v = find(exp, "times")) e.times = parse_list(*v, "times");
    if (auto* v = find(exp, "t")) e.t = parse_number(*v, "t");
    if (auto* v = find(exp, "s")) e.s = parse_number(*v, "s");
    if (auto* v = find(exp, "early_times")) e.early_times = parse_list(*v, "early_times");
    if (auto* v = find(exp, "f")) e.f = v->text;
    if (auto* v = find(exp, "frequency")) e.frequency = parse_list(*v, "frequency");
    if (auto* v = find(exp, "phi")) e.phi = v->text;
    if (auto* v = find(exp, "g")) e.g = v->text;
    if (auto* v = find(exp, "h")) e.h = v->text;
    if (auto* v = find(exp, "decay_r")) e.decay_r = parse_number(*v, "decay_r");
    if (auto* v = find(exp, "windows")) e.windows = parse_list(*v, "windows");
    if (auto* v = find(exp, "shifts")) e.shifts = parse_list(*v, "shifts");
    if (auto* v = find(exp, "reference_samples"))
        e.reference_samples = parse_integer(*v, "reference_samples");

    if (e.record_every < 1)
        throw ConstraintError("record_every must be at least 1");
    cfg.sim.validate();
    return cfg;
}

Config parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

void emit(std::ostringstream& out, const char* key, double v) {
    out << key << " = " << io::format_number(v) << "\n";
}

void emit(std::ostringstream& out, const char* key, long v) {
    out << key << " = " << v << "\n";
}

void emit(std::ostringstream& out, const char* key, const std::string& v) {
    if (!v.empty()) out << key << " = " << v << "\n";
}

void emit_list(std::ostringstream& out, const char* key, std::span<const double> v) {
    if (v.empty()) return;
    out << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ", ";
        out << io::format_number(v[i]);
    }
    out << "\n";
}

void emit_list(std::ostringstream& out, const char* key, std::span<const long> v) {
    if (v.empty()) return;
    out << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ", ";
        out << v[i];
    }
    out << "\n";
}

} // namespace

std::string render(const Config& cfg) {
    std::ostringstream out;
    out << "[kernel]\n";
    out << "name = " << cfg.sim.kernel.name << "\n";
    for (const auto& [key, value] : cfg.sim.kernel.parameters) emit(out, key.c_str(), value);

    out << "\n[sim]\n";
    emit(out, "n", cfg.sim.n_particles);
    emit(out, "horizon", cfg.sim.horizon);
    emit(out, "dt", cfg.sim.dt);
    emit(out, "sigma", cfg.sim.diffusion);
    out << "seed = " << cfg.sim.seed << "\n";
    emit(out, "partial_r", cfg.sim.partial_r);
    if (cfg.sim.taming) emit(out, "taming", *cfg.sim.taming);
    const auto& law = cfg.sim.initial_law;
    switch (law.kind) {
    case sde::InitialLawKind::PointMass:
        out << "init = point-mass\n";
        emit_list(out, "init_mean", law.mean);
        break;
    case sde::InitialLawKind::Gaussian:
        out << "init = gaussian\n";
        emit_list(out, "init_mean", law.mean);
        emit_list(out, "init_var", law.var);
        break;
    case sde::InitialLawKind::UniformBox:
        out << "init = uniform\n";
        emit_list(out, "init_lo", law.lo);
        emit_list(out, "init_hi", law.hi);
        break;
    }

    const ExperimentPlan& e = cfg.experiment;
    out << "\n[experiment]\n";
    emit(out, "record_every", e.record_every);
    out << "keep_increments = " << (e.keep_increments ? "true" : "false") << "\n";
    emit_list(out, "marginals", e.marginals);
    emit_list(out, "n_list", e.n_list);
    emit(out, "alpha", e.alpha);
    emit(out, "n_paths", e.n_paths);
    emit(out, "n_runs", e.n_runs);
    emit(out, "study", e.study);
    emit(out, "method", e.method);
    emit(out, "n_slices", long(e.n_slices));
    emit(out, "iterations", e.iterations);
    emit(out, "n_ref", e.n_ref);
    emit(out, "bandwidth", e.bandwidth);
    emit_list(out, "grid_lo", e.grid_lo);
    emit_list(out, "grid_hi", e.grid_hi);
    emit_list(out, "grid_cells", e.grid_cells);
    emit(out, "dt_pde", e.dt_pde);
    emit(out, "n_snapshots", e.n_snapshots);
    emit_list(out, "times", e.times);
    emit(out, "t", e.t);
    emit(out, "s", e.s);
    emit_list(out, "early_times", e.early_times);
    emit(out, "f", e.f);
    emit_list(out, "frequency", e.frequency);
    emit(out, "phi", e.phi);
    emit(out, "g", e.g);
    emit(out, "h", e.h);
    emit(out, "decay_r", e.decay_r);
    emit_list(out, "windows", e.windows);
    emit_list(out, "shifts", e.shifts);
    emit(out, "reference_samples", e.reference_samples);
    return out.str();
}

uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    uint64_t hash = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
    }
    return hash;
}

uint64_t config_hash(const Config& cfg) {
    std::string text = render(cfg);
    return fnv1a64({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

} // namespace chaoslab::config
