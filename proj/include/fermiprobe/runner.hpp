// runner.hpp — configuration-driven experiment orchestration: INI configs,
// figure presets, sweep execution with worker pool, basis caching and a
// JSON manifest of every product.

#pragma once

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fermiprobe/channel.hpp"
#include "fermiprobe/io.hpp"
#include "fermiprobe/metrology.hpp"
#include "fermiprobe/protocol.hpp"
#include "fermiprobe/spectrum.hpp"
#include "fermiprobe/version.hpp"

namespace fermiprobe::runner {

namespace fs = std::filesystem;
using nlohmann::json;

struct GeometrySpec {
    basis::GeometryKind kind = basis::GeometryKind::Box3D_sWave;
    int shells = 100;
    int harmonic_basis_size = 0; // 0: automatic

    basis::Geometry build() const {
        switch (kind) {
            case basis::GeometryKind::Box3D_sWave: return basis::Geometry::box3d(shells);
            case basis::GeometryKind::Box1D_even: return basis::Geometry::box1d(shells);
            case basis::GeometryKind::Harmonic1D_even:
                return basis::Geometry::harmonic1d(shells);
        }
        throw ConfigError("geometry: bad kind");
    }
};

struct ExperimentConfig {
    std::string name = "experiment";
    std::vector<GeometrySpec> geometries;
    std::vector<double> couplings;    // kFa, all < 0
    std::vector<double> temperatures; // T / T_F
    double t_start = 0.0, t_stop = 300.0, t_step = 0.1;
    std::string channel = "exact"; // exact | weak | both
    std::vector<std::string> outputs{"trace"};
    std::uint64_t seed = 1;
    int workers = 0;
    std::string out_dir = "out";
    std::string cache_dir; // default: <out_dir>/cache
    double epsilon = 1e-4;
    bool force = false;
    // spectrum
    double eta = 0.005;
    double omega_start = -3.0, omega_stop = 3.0, omega_step = 0.002;
    // metrology
    double deltaT_rel = 1e-2;
    // protocol
    int shots = 500;
    int replicas = 200;
    int theta_count = 16;
    double readout_time = -1.0; // <0: half the grid
    double bracket_lo_frac = 0.5, bracket_hi_frac = 1.6;
};

// ---------------------------------------------------------------------------
// INI parsing: flat sectioned key-value text with explicit units in key names.

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline double parse_double(const std::string& s, const std::string& where, int line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": " + where +
                          ": not a number: '" + s + "'");
    }
}

inline long parse_int(const std::string& s, const std::string& where, int line) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw ConfigError("line " + std::to_string(line) + ": " + where +
                          ": not an integer: '" + s + "'");
    }
}

inline bool parse_bool(const std::string& s, const std::string& where, int line) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("line " + std::to_string(line) + ": " + where +
                      ": not a boolean: '" + s + "'");
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "config") {
    ExperimentConfig cfg;
    cfg.geometries.clear();
    std::vector<int> shells_list;
    std::vector<int> basis_size_list;
    std::vector<std::string> kind_list;

    std::string section, line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string where = section + "." + key;

        if (section == "geometry") {
            if (key == "kind") kind_list = detail::split_list(value);
            else if (key == "shells") {
                for (const auto& v : detail::split_list(value))
                    shells_list.push_back(static_cast<int>(detail::parse_int(v, where, lineno)));
            } else if (key == "basis_size") {
                for (const auto& v : detail::split_list(value))
                    basis_size_list.push_back(
                        static_cast<int>(detail::parse_int(v, where, lineno)));
            } else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "coupling") {
            if (key == "kFa") {
                for (const auto& v : detail::split_list(value))
                    cfg.couplings.push_back(detail::parse_double(v, where, lineno));
            } else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "temperature") {
            if (key == "T_over_TF") {
                for (const auto& v : detail::split_list(value))
                    cfg.temperatures.push_back(detail::parse_double(v, where, lineno));
            } else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "time") {
            if (key == "start_tauF") cfg.t_start = detail::parse_double(value, where, lineno);
            else if (key == "stop_tauF") cfg.t_stop = detail::parse_double(value, where, lineno);
            else if (key == "step_tauF") cfg.t_step = detail::parse_double(value, where, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "run") {
            if (key == "channel") cfg.channel = value;
            else if (key == "outputs") cfg.outputs = detail::split_list(value);
            else if (key == "seed")
                cfg.seed = static_cast<std::uint64_t>(detail::parse_int(value, where, lineno));
            else if (key == "workers")
                cfg.workers = static_cast<int>(detail::parse_int(value, where, lineno));
            else if (key == "out_dir") cfg.out_dir = value;
            else if (key == "cache_dir") cfg.cache_dir = value;
            else if (key == "epsilon") cfg.epsilon = detail::parse_double(value, where, lineno);
            else if (key == "force") cfg.force = detail::parse_bool(value, where, lineno);
            else if (key == "name") cfg.name = value;
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "spectrum") {
            if (key == "eta_EF") cfg.eta = detail::parse_double(value, where, lineno);
            else if (key == "omega_start_EF")
                cfg.omega_start = detail::parse_double(value, where, lineno);
            else if (key == "omega_stop_EF")
                cfg.omega_stop = detail::parse_double(value, where, lineno);
            else if (key == "omega_step_EF")
                cfg.omega_step = detail::parse_double(value, where, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "metrology") {
            if (key == "deltaT_rel") cfg.deltaT_rel = detail::parse_double(value, where, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else if (section == "protocol") {
            if (key == "shots")
                cfg.shots = static_cast<int>(detail::parse_int(value, where, lineno));
            else if (key == "replicas")
                cfg.replicas = static_cast<int>(detail::parse_int(value, where, lineno));
            else if (key == "theta_count")
                cfg.theta_count = static_cast<int>(detail::parse_int(value, where, lineno));
            else if (key == "readout_time_tauF")
                cfg.readout_time = detail::parse_double(value, where, lineno);
            else if (key == "bracket_lo_frac")
                cfg.bracket_lo_frac = detail::parse_double(value, where, lineno);
            else if (key == "bracket_hi_frac")
                cfg.bracket_hi_frac = detail::parse_double(value, where, lineno);
            else
                throw ConfigError("line " + std::to_string(lineno) + ": unknown key " + where);
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" +
                              section + "]");
        }
    }

    for (std::size_t i = 0; i < kind_list.size(); ++i) {
        GeometrySpec g;
        g.kind = basis::geometry_kind_from_string(kind_list[i]);
        if (!shells_list.empty())
            g.shells = shells_list[std::min(i, shells_list.size() - 1)];
        if (!basis_size_list.empty())
            g.harmonic_basis_size = basis_size_list[std::min(i, basis_size_list.size() - 1)];
        cfg.geometries.push_back(g);
    }
    if (cfg.name == "experiment") cfg.name = origin;
    return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in, fs::path(path).stem().string());
}

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.geometries.empty()) throw ConfigError("geometry.kind: list must be non-empty");
    if (cfg.couplings.empty()) throw ConfigError("coupling.kFa: list must be non-empty");
    if (cfg.temperatures.empty())
        throw ConfigError("temperature.T_over_TF: list must be non-empty");
    for (const double a : cfg.couplings)
        if (!(a < 0.0)) throw ConfigError("coupling.kFa: values must be < 0");
    if (!(cfg.t_step > 0.0)) throw ConfigError("time.step_tauF: must be > 0");
    if (!(cfg.t_stop > cfg.t_start)) throw ConfigError("time.stop_tauF: must exceed start");
    if (cfg.channel != "exact" && cfg.channel != "weak" && cfg.channel != "both")
        throw ConfigError("run.channel: must be exact, weak or both");
    for (const auto& o : cfg.outputs)
        if (o != "trace" && o != "spectrum" && o != "metrology" && o != "protocol")
            throw ConfigError("run.outputs: unknown product '" + o + "'");
    for (const auto& g : cfg.geometries)
        if (g.shells < 1) throw ConfigError("geometry.shells: must be >= 1");
    if (cfg.channel == "weak" && !cfg.force)
        for (const double a : cfg.couplings)
            if (std::abs(a) > 0.5)
                throw ConfigError("run.channel: weak channel rejects |kFa| > 0.5 "
                                  "(pass force = true or --force to override)");
}

inline std::string config_to_ini(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[geometry]\nkind = ";
    for (std::size_t i = 0; i < cfg.geometries.size(); ++i)
        out << (i ? ", " : "") << basis::to_string(cfg.geometries[i].kind);
    out << "\nshells = ";
    for (std::size_t i = 0; i < cfg.geometries.size(); ++i)
        out << (i ? ", " : "") << cfg.geometries[i].shells;
    out << "\n";
    bool any_bs = false;
    for (const auto& g : cfg.geometries) any_bs |= g.harmonic_basis_size > 0;
    if (any_bs) {
        out << "basis_size = ";
        for (std::size_t i = 0; i < cfg.geometries.size(); ++i)
            out << (i ? ", " : "") << cfg.geometries[i].harmonic_basis_size;
        out << "\n";
    }
    out << "\n[coupling]\nkFa = ";
    for (std::size_t i = 0; i < cfg.couplings.size(); ++i)
        out << (i ? ", " : "") << io::fmt12(cfg.couplings[i]);
    out << "\n\n[temperature]\nT_over_TF = ";
    for (std::size_t i = 0; i < cfg.temperatures.size(); ++i)
        out << (i ? ", " : "") << io::fmt12(cfg.temperatures[i]);
    out << "\n\n[time]\nstart_tauF = " << io::fmt12(cfg.t_start)
        << "\nstop_tauF = " << io::fmt12(cfg.t_stop)
        << "\nstep_tauF = " << io::fmt12(cfg.t_step);
    out << "\n\n[run]\nname = " << cfg.name << "\nchannel = " << cfg.channel
        << "\noutputs = ";
    for (std::size_t i = 0; i < cfg.outputs.size(); ++i)
        out << (i ? ", " : "") << cfg.outputs[i];
    out << "\nseed = " << cfg.seed << "\nworkers = " << cfg.workers
        << "\nout_dir = " << cfg.out_dir << "\nepsilon = " << io::fmt12(cfg.epsilon)
        << "\nforce = " << (cfg.force ? "true" : "false");
    out << "\n\n[spectrum]\neta_EF = " << io::fmt12(cfg.eta)
        << "\nomega_start_EF = " << io::fmt12(cfg.omega_start)
        << "\nomega_stop_EF = " << io::fmt12(cfg.omega_stop)
        << "\nomega_step_EF = " << io::fmt12(cfg.omega_step);
    out << "\n\n[metrology]\ndeltaT_rel = " << io::fmt12(cfg.deltaT_rel);
    out << "\n\n[protocol]\nshots = " << cfg.shots << "\nreplicas = " << cfg.replicas
        << "\ntheta_count = " << cfg.theta_count
        << "\nreadout_time_tauF = " << io::fmt12(cfg.readout_time)
        << "\nbracket_lo_frac = " << io::fmt12(cfg.bracket_lo_frac)
        << "\nbracket_hi_frac = " << io::fmt12(cfg.bracket_hi_frac) << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Presets regenerating the data behind the figures (desk-scale grids; the
// exact grid densities are recorded in the manifest).

inline std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i)
        v[i] = lo * std::pow(hi / lo, i / (n - 1.0));
    return v;
}

inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    c.geometries = {GeometrySpec{basis::GeometryKind::Box3D_sWave, 100, 0}};
    if (name == "fig2") {
        c.couplings = {-0.5, -1.5, -6.0};
        c.temperatures = {1e-3, 0.01, 0.1}; // T = 0 approximated by 1e-3
        c.t_stop = 800.0;
        c.t_step = 0.5;
        c.outputs = {"trace", "spectrum"};
        c.eta = 0.02;
        c.omega_start = -2.0;
        c.omega_stop = 2.0;
    } else if (name == "fig3") {
        c.geometries[0].shells = 200;
        c.couplings = {-0.5};
        c.temperatures = log_spaced(0.02, 1.0, 9);
        c.t_stop = 300.0;
        c.t_step = 0.5;
        c.outputs = {"metrology"};
    } else if (name == "fig4a") {
        c.couplings = {-0.5, -1.5, -6.0};
        c.temperatures = {0.2};
        c.t_stop = 120.0;
        c.t_step = 0.4;
        c.outputs = {"metrology"};
    } else if (name == "fig4b") {
        c.couplings = {-0.5, -1.5};
        c.temperatures = {0.2, 0.22};
        c.t_stop = 60.0;
        c.t_step = 0.2;
        c.outputs = {"trace"};
    } else if (name == "fig4c") {
        c.couplings = {-0.5, -1.5, -6.0};
        c.temperatures = {0.05, 0.08, 0.12, 0.2, 0.3, 0.5};
        c.t_stop = 800.0;
        c.t_step = 2.0;
        c.outputs = {"metrology"};
    } else if (name == "fig4d") {
        c.geometries[0].shells = 150;
        c.couplings = {-6.0, -3.0, -1.5, -0.8, -0.5, -0.35, -0.2, -0.1, -0.05};
        c.temperatures = {0.1};
        c.t_stop = 400.0;
        c.t_step = 1.0;
        c.channel = "both";
        c.outputs = {"metrology"};
    } else if (name == "figS1") {
        c.couplings = {-0.5, -0.2, -0.1};
        c.temperatures = {0.2};
        c.t_stop = 200.0;
        c.t_step = 0.25;
        c.channel = "both";
        c.outputs = {"trace"};
    } else if (name == "figS2") {
        c.couplings = {-0.5, -1.5, -6.0};
        c.temperatures = {0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
        c.t_stop = 45.0;
        c.t_step = 0.5;
        c.outputs = {"trace"};
    } else if (name == "figS3") {
        c.geometries = {GeometrySpec{basis::GeometryKind::Box1D_even, 320, 0},
                        GeometrySpec{basis::GeometryKind::Harmonic1D_even, 201, 4096}};
        c.couplings = {-1.0, -0.01};
        c.temperatures = {0.01, 0.1};
        c.t_stop = 900.0;
        c.t_step = 1.0;
        c.outputs = {"trace"};
    } else if (name == "figS4") {
        c.geometries = {GeometrySpec{basis::GeometryKind::Box1D_even, 320, 0},
                        GeometrySpec{basis::GeometryKind::Harmonic1D_even, 201, 4096}};
        c.couplings = {-1.0, -0.01};
        c.temperatures = {0.1};
        c.t_stop = 150.0;
        c.t_step = 0.5;
        c.outputs = {"metrology"};
    } else {
        throw UnknownPreset("unknown preset: " + name);
    }
    return c;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2", "fig3", "fig4a", "fig4b", "fig4c",
                                                "fig4d", "figS1", "figS2", "figS3", "figS4"};
    return names;
}

// ---------------------------------------------------------------------------
// Execution

namespace detail {

inline std::string sanitize_number(double x) {
    std::string s = io::fmt12(x);
    // shorten: %.6g is plenty for file names
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    s = buf;
    std::string out;
    for (char ch : s) {
        if (ch == '-') out += 'm';
        else if (ch == '.') out += 'p';
        else if (ch == '+') continue;
        else out += ch;
    }
    return out;
}

struct PointKey {
    int geometry_index = 0;
    double temperature = 0.0;
    double kFa = 0.0;
    std::string channel;
};

struct PointResult {
    std::string status = "ok"; // ok | failed
    std::string error;
    std::vector<std::pair<std::string, std::string>> files;   // product -> filename
    std::vector<std::pair<std::string, std::string>> skipped; // product -> reason
    long wall_ms = 0;
};

} // namespace detail

struct RunReport {
    json manifest;
    std::string manifest_path;
    int n_failed = 0;
    int n_points = 0;
};

class Runner {
  public:
    explicit Runner(ExperimentConfig cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

    RunReport run() {
        const auto t0 = std::chrono::steady_clock::now();
        fs::create_directories(cfg_.out_dir);
        cache_dir_ = cfg_.cache_dir.empty() ? (fs::path(cfg_.out_dir) / "cache").string()
                                            : cfg_.cache_dir;
        fs::create_directories(cache_dir_);

        grid_ = num::uniform_grid(cfg_.t_start, cfg_.t_stop, cfg_.t_step);
        omega_grid_ = num::uniform_grid(cfg_.omega_start, cfg_.omega_stop, cfg_.omega_step);

        std::vector<detail::PointKey> points;
        for (std::size_t g = 0; g < cfg_.geometries.size(); ++g)
            for (const double a : cfg_.couplings)
                for (const double T : cfg_.temperatures) {
                    const double Teff = std::max(T, 1e-3); // T = 0 curves are limits
                    if (cfg_.channel == "exact" || cfg_.channel == "both")
                        points.push_back({static_cast<int>(g), Teff, a, "exact"});
                    if (cfg_.channel == "weak" || cfg_.channel == "both")
                        points.push_back({static_cast<int>(g), Teff, a, "weak"});
                }

        // exact bases built serially up front (cache hits are reloads)
        for (const auto& p : points)
            if (p.channel == "exact") ensure_base(p.geometry_index, p.kFa);

        std::vector<detail::PointResult> results(points.size());
        std::atomic<std::size_t> next{0};
        int workers = cfg_.workers > 0 ? cfg_.workers : levitov::default_workers();
        workers = std::min<std::size_t>(workers, points.size());
        auto body = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= points.size()) break;
                results[i] = run_point(points[i], i);
            }
        };
        if (workers <= 1) {
            body();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(body);
            for (auto& t : pool) t.join();
        }

        json manifest;
        manifest["tool"] = version_string;
        manifest["name"] = cfg_.name;
        manifest["config_ini"] = config_to_ini(cfg_);
        manifest["time_grid"] = {{"start", cfg_.t_start}, {"stop", cfg_.t_stop},
                                 {"step", cfg_.t_step}};
        json jpoints = json::array();
        int failed = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            const auto& r = results[i];
            json jp;
            const auto& gs = cfg_.geometries[p.geometry_index];
            jp["geometry"] = basis::to_string(gs.kind);
            jp["shells"] = gs.shells;
            jp["T_over_TF"] = p.temperature;
            jp["kFa"] = p.kFa;
            jp["channel"] = p.channel;
            jp["status"] = r.status;
            if (!r.error.empty()) jp["error"] = r.error;
            json jf = json::object();
            for (const auto& [k, v] : r.files) jf[k] = v;
            jp["files"] = jf;
            if (!r.skipped.empty()) {
                json js = json::object();
                for (const auto& [k, v] : r.skipped) js[k] = v;
                jp["skipped"] = js;
            }
            jp["wall_ms"] = r.wall_ms;
            jpoints.push_back(jp);
            if (r.status != "ok") ++failed;
        }
        manifest["points"] = jpoints;
        manifest["total_wall_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::steady_clock::now() - t0)
                                        .count();

        RunReport rep;
        rep.manifest = manifest;
        rep.n_failed = failed;
        rep.n_points = static_cast<int>(points.size());
        rep.manifest_path = (fs::path(cfg_.out_dir) / "manifest.json").string();
        std::ofstream mo(rep.manifest_path);
        mo << manifest.dump(2) << "\n";
        return rep;
    }

  private:
    using BasePtr = std::shared_ptr<const basis::BasisSet>;

    // Reference temperature for sizing cached bases: truncations at any swept
    // temperature (and its finite-difference neighbours) must fit.
    double reference_temperature() const {
        double tmax = 1e-3;
        for (const double T : cfg_.temperatures) tmax = std::max(tmax, std::max(T, 1e-3));
        return tmax * (1.0 + 3.0 * cfg_.deltaT_rel);
    }

    std::string cache_path(const basis::Geometry& g, double kFa) const {
        std::ostringstream key;
        key << basis::to_string(g.kind) << '|' << num::double_bits(g.size_parameter) << '|'
            << g.shell_count << '|' << num::double_bits(kFa) << '|'
            << num::double_bits(cfg_.epsilon);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(num::fnv1a64(key.str())));
        return (fs::path(cache_dir_) / (std::string("basis_") + buf + ".txt")).string();
    }

    BasePtr ensure_base(int geometry_index, double kFa) {
        const std::uint64_t id =
            static_cast<std::uint64_t>(geometry_index) * 0x9e3779b97f4a7c15ull ^
            num::double_bits(kFa);
        if (auto it = bases_.find(id); it != bases_.end()) return it->second;

        const auto& gs = cfg_.geometries[geometry_index];
        const basis::Geometry geom = gs.build();
        const basis::CouplingSpec coupling(kFa);
        const double Tref = reference_temperature();
        const std::string path = cache_path(geom, kFa);

        BasePtr base;
        if (fs::exists(path)) {
            try {
                basis::BasisSet loaded = basis::load_basis(path);
                // usable only if the reference-temperature truncation fits
                basis::ThermalState th = basis::solve_chemical_potential(loaded, Tref);
                basis::truncate(loaded, th, cfg_.epsilon);
                base = std::make_shared<basis::BasisSet>(std::move(loaded));
            } catch (const Error&) {
                base.reset(); // stale or undersized cache entry: rebuild
            }
        }
        if (!base) {
            levitov::ExactSystem sys = levitov::ExactSystem::prepare(
                geom, coupling, Tref, cfg_.epsilon, 0, gs.harmonic_basis_size);
            basis::BasisSet built = std::move(sys.truncated_basis);
            basis::save_basis(built, path);
            base = std::make_shared<basis::BasisSet>(std::move(built));
        }
        bases_.emplace(id, base);
        return base;
    }

    detail::PointResult run_point(const detail::PointKey& p, std::size_t index) {
        const auto t0 = std::chrono::steady_clock::now();
        detail::PointResult res;
        try {
            const auto& gs = cfg_.geometries[p.geometry_index];
            std::unique_ptr<channel::Channel> ch;
            if (p.channel == "weak") {
                if (std::abs(p.kFa) > 0.5 && !cfg_.force) {
                    res.skipped.emplace_back("all", "weak channel limited to |kFa| <= 0.5");
                    res.wall_ms = elapsed_ms(t0);
                    return res;
                }
                ch = std::make_unique<channel::WeakChannel>(p.kFa);
            } else {
                BasePtr base;
                {
                    std::lock_guard<std::mutex> lock(base_mutex_);
                    base = ensure_base(p.geometry_index, p.kFa);
                }
                ch = std::make_unique<BaseChannel>(base, cfg_.epsilon, 1);
            }

            const std::string tag = std::string(basis::to_string(gs.kind)) + "_T" +
                                    detail::sanitize_number(p.temperature) + "_a" +
                                    detail::sanitize_number(p.kFa);

            const bool want_trace = contains("trace");
            const bool want_spectrum = contains("spectrum");
            const bool want_metrology = contains("metrology") || contains("protocol");

            std::optional<levitov::DecoherenceTrace> trace;
            if (want_trace || want_spectrum) {
                ch->prepare(p.temperature);
                trace = ch->trace(p.temperature, grid_);
            }
            if (want_trace) {
                const std::string fn = "trace_" + p.channel + "_" + tag + ".csv";
                write_file(fn, [&](std::ostream& os) { io::write_trace_csv(os, *trace); });
                res.files.emplace_back("trace", fn);
            }
            if (want_spectrum) {
                try {
                    const spectrum::Spectrum sp =
                        spectrum::absorption_spectrum(*trace, cfg_.eta, omega_grid_);
                    const std::string fn = "spectrum_" + p.channel + "_" + tag + ".csv";
                    write_file(fn,
                               [&](std::ostream& os) { io::write_spectrum_csv(os, sp); });
                    res.files.emplace_back("spectrum", fn);
                } catch (const WindowTooWeak& e) {
                    res.skipped.emplace_back("spectrum", e.what());
                }
            }
            if (want_metrology) {
                metrology::MetrologyResult mr =
                    metrology::analyze(*ch, p.temperature, grid_, cfg_.deltaT_rel, false);
                bool peak_covered = true;
                try {
                    const auto m = metrology::maximize_qsnr(mr.times, mr.QSNR);
                    mr.t_max = m.t_refined;
                    mr.Q_max = m.q_refined;
                    mr.t_max_grid = m.t_grid;
                    mr.Q_max_grid = m.q_grid;
                } catch (const ExtendGrid&) {
                    peak_covered = false;
                }
                if (contains("metrology")) {
                    const std::string fn = "metrology_" + p.channel + "_" + tag + ".csv";
                    write_file(fn,
                               [&](std::ostream& os) { io::write_metrology_csv(os, mr); });
                    res.files.emplace_back("metrology", fn);
                    json summary;
                    summary["T"] = p.temperature;
                    summary["kFa"] = p.kFa;
                    summary["channel"] = p.channel;
                    if (peak_covered) {
                        summary["t_max"] = mr.t_max;
                        summary["Q_max"] = mr.Q_max;
                    } else {
                        summary["t_max"] = nullptr;
                        summary["Q_max"] = nullptr;
                        summary["note"] = "QSNR peak beyond the time grid";
                    }
                    const std::string sfn = "summary_" + p.channel + "_" + tag + ".json";
                    write_file(sfn, [&](std::ostream& os) { os << summary.dump(2) << "\n"; });
                    res.files.emplace_back("summary", sfn);
                }
                if (contains("protocol")) {
                    const double t_read = cfg_.readout_time > 0.0
                                              ? cfg_.readout_time
                                              : (peak_covered ? mr.t_max
                                                              : 0.5 * cfg_.t_stop);
                    std::vector<double> thetas(cfg_.theta_count);
                    for (int i = 0; i < cfg_.theta_count; ++i)
                        thetas[i] = num::pi * i / cfg_.theta_count;
                    const auto rows = protocol::estimator_benchmark(
                        thetas, cfg_.shots, p.temperature, *ch, t_read,
                        cfg_.bracket_lo_frac * p.temperature,
                        cfg_.bracket_hi_frac * p.temperature, cfg_.replicas,
                        cfg_.seed + 1000003ull * index, cfg_.deltaT_rel);
                    const std::string fn = "benchmark_" + p.channel + "_" + tag + ".csv";
                    write_file(fn,
                               [&](std::ostream& os) { io::write_benchmark_csv(os, rows); });
                    res.files.emplace_back("protocol", fn);
                }
            }
        } catch (const std::exception& e) {
            res.status = "failed";
            res.error = e.what();
        }
        res.wall_ms = elapsed_ms(t0);
        return res;
    }

    // Exact channel over a shared prebuilt basis (re-truncated per pin).
    class BaseChannel : public channel::Channel {
      public:
        BaseChannel(BasePtr base, double epsilon, int workers)
            : base_(std::move(base)), epsilon_(epsilon), workers_(workers) {}
        std::string name() const override { return "exact"; }
        void prepare(double T) override {
            if (sys_ && pinned_ == T) return;
            sys_ = levitov::ExactSystem::from_basis(*base_, T, epsilon_);
            pinned_ = T;
        }
        levitov::DecoherenceTrace trace(double T, const std::vector<double>& grid) override {
            if (!sys_) prepare(T);
            return sys_->trace_at(T, grid, workers_);
        }
        std::complex<double> value(double T, double t) override {
            if (!sys_) prepare(T);
            return sys_->value_at(T, t);
        }

      private:
        BasePtr base_;
        double epsilon_;
        int workers_;
        std::optional<levitov::ExactSystem> sys_;
        double pinned_ = -1.0;
    };

    bool contains(const std::string& product) const {
        for (const auto& o : cfg_.outputs)
            if (o == product) return true;
        return false;
    }

    template <typename F>
    void write_file(const std::string& filename, F&& writer) {
        const std::string path = (fs::path(cfg_.out_dir) / filename).string();
        std::ofstream os(path);
        if (!os) throw Error("cannot open output file " + path);
        writer(os);
        if (!os) throw Error("write failed for " + path);
    }

    static long elapsed_ms(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    }

    ExperimentConfig cfg_;
    std::string cache_dir_;
    std::vector<double> grid_;
    std::vector<double> omega_grid_;
    std::mutex base_mutex_;
    std::map<std::uint64_t, BasePtr> bases_;
};

inline RunReport run(const ExperimentConfig& cfg) { return Runner(cfg).run(); }

} // namespace fermiprobe::runner
