// cli_app.hpp - The polaroptics command line: configuration schema,
// subcommands, emitted artifacts and run manifests

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/version.hpp>
#include <json.hpp>

#include "polaroptics/polaroptics.hpp"

#ifndef POLAROPTICS_VERSION
#define POLAROPTICS_VERSION "0.0.0"
#endif

namespace polaroptics::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_config = 2, exit_data = 3, exit_numeric = 4 };

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"bcf", "thin-film", "cavity", "fit-thin-film", "fit-cavity", "errors"};
    return names;
}

// ---------------------------------------------------------------- schema

namespace detail {

inline json bath_keys(double temperature_K) {
    return json{{"a", 1.0}, {"u", 3}, {"xi_eV", 0.09}, {"temperature_K", temperature_K}};
}

inline void append(json& into, const json& more) {
    for (const auto& [k, v] : more.items()) into[k] = v;
}

inline json cavity_keys() {
    json c{{"n_mol", 30},
           {"eps_s_eV", 3.6},
           {"gamma_eV", 5e-5},
           {"rabi_eV", 0.92},
           {"e0_eV", 3.42},
           {"n_r", 2.0},
           {"kappa_eV", 0.21},
           {"mu_c_ratio", 2.0},
           {"n_modes", 21},
           {"kz_grid", "probe_centered"},
           {"kz_span_deg", 70.0},
           {"z_offset_nm", 0.0}};
    append(c, bath_keys(300.0));
    append(c, json{{"scale", 0.02},
                   {"effective_thickness_nm", 105.0},
                   {"eps_bg_re", 1.5},
                   {"eps_bg_im", 0.015},
                   {"mirror_thickness_nm", 100.0},
                   {"mirror_material", "aluminium"},
                   {"substrate_material", "quartz"},
                   {"include_lif", false},
                   {"lif_thickness_nm", 1.0},
                   {"polarization", "s"},
                   {"e_min_eV", 2.6},
                   {"e_max_eV", 4.6},
                   {"n_energies", 100},
                   {"dt_eV_inv", 0.02},
                   {"t_max_eV_inv", 500.0},
                   {"tail_tolerance", 1e-7}});
    return c;
}

inline json thin_film_keys() {
    json c{{"eps_s_eV", 3.6}, {"sigma_eV", 0.14}, {"gamma_eV", 5e-5}};
    append(c, bath_keys(0.0));
    append(c, json{{"eps_bg_re", 1.5},
                   {"eps_bg_im", 0.015},
                   {"scale", 0.1},
                   {"thickness_nm", 60.0},
                   {"theta_deg", 15.0},
                   {"polarization", "s"},
                   {"substrate_n_re", 1.46},
                   {"substrate_n_im", 0.0},
                   {"e_min_eV", 2.8},
                   {"e_max_eV", 4.6},
                   {"n_energies", 181},
                   {"dt_eV_inv", 0.01}});
    return c;
}

inline json default_angles() {
    json a = json::array();
    for (int t = 15; t <= 65; t += 5) a.push_back(static_cast<double>(t));
    return a;
}

inline json fit_keys() {
    return json{{"data_file", ""}, {"max_evaluations", 2000}, {"tolerance", 1e-6}};
}

} // namespace detail

// Every key a command accepts, with its default.
inline json defaults(const std::string& command) {
    json c{{"seed", 0}, {"workers", 0}};
    if (command == "bcf") {
        detail::append(c, detail::bath_keys(0.0));
        detail::append(c, json{{"dt_eV_inv", 0.1}, {"t_max_eV_inv", 200.0}, {"omega_max_eV", 1.5},
                               {"n_omega", 301}});
    } else if (command == "thin-film") {
        detail::append(c, detail::thin_film_keys());
    } else if (command == "cavity") {
        detail::append(c, detail::cavity_keys());
        c["angles_deg"] = detail::default_angles();
    } else if (command == "fit-thin-film") {
        detail::append(c, detail::thin_film_keys());
        detail::append(c, detail::fit_keys());
        c["free"] = json{{"eps_s_eV", {3.3, 3.9, 3.6}}, {"sigma_eV", {0.05, 0.3, 0.14}},
                         {"xi_eV", {0.03, 0.2, 0.09}}, {"scale", {0.0, 1.0, 0.1}}};
    } else if (command == "fit-cavity") {
        detail::append(c, detail::cavity_keys());
        detail::append(c, detail::fit_keys());
        detail::append(c, json{{"position_unit_eV", 0.01}, {"depth_unit", 0.01}, {"depth_weight", 1.0},
                               {"missing_penalty", 1e6}});
        c["free"] = json{{"n_r", {1.2, 3.5, 2.0}}, {"e0_eV", {3.0, 3.8, 3.42}}, {"rabi_eV", {0.3, 1.5, 0.92}},
                         {"mu_c_ratio", {0.0, 4.0, 2.0}}};
    } else if (command == "errors") {
        detail::append(c, detail::cavity_keys());
        c["angles_deg"] = detail::default_angles();
        detail::append(c, json{{"sigma_E_eV", 1e-6}, {"sigma_theta_deg", 1e-3}, {"sigma_d_nm", 1.0},
                               {"sigma_n_amp", 1e-2}, {"omega0_eV", nullptr}, {"n_samples", 200}});
    } else {
        throw ConfigError("unknown command '" + command + "'");
    }
    return c;
}

// Parameters a fit may free, by config key, with the fit's internal name.
inline const std::map<std::string, std::string>& fit_parameter_names(const std::string& command) {
    static const std::map<std::string, std::string> film{{"eps_s_eV", "eps_s"}, {"sigma_eV", "sigma"},
                                                         {"xi_eV", "xi"},       {"scale", "scale"},
                                                         {"a", "a"},            {"gamma_eV", "gamma"}};
    static const std::map<std::string, std::string> cavity{
        {"n_r", "n_r"},           {"e0_eV", "e0"},         {"rabi_eV", "rabi"}, {"mu_c_ratio", "mu_c_ratio"},
        {"kappa_eV", "kappa"},    {"eps_s_eV", "eps_s"},   {"scale", "scale"}};
    return command == "fit-thin-film" ? film : cavity;
}

namespace detail {

inline const std::vector<std::string>& unit_suffixes() {
    static const std::vector<std::string> s{"eV_inv", "meV", "eV", "nm", "um", "mm", "m", "deg", "rad",
                                            "mK", "K", "fs", "ps"};
    return s;
}

// Key with its unit suffix removed ("xi_eV" -> "xi"), or the key itself.
inline std::string key_stem(const std::string& key) {
    for (const auto& u : unit_suffixes()) {
        const std::string tail = "_" + u;
        if (key.size() > tail.size() && key.compare(key.size() - tail.size(), tail.size(), tail) == 0)
            return key.substr(0, key.size() - tail.size());
    }
    return key;
}

inline std::string unknown_key_message(const json& schema, const std::string& key, const std::string& where) {
    const auto stem = key_stem(key);
    for (const auto& [k, v] : schema.items())
        if (k != key && key_stem(k) == stem)
            return "unit mismatch: '" + key + "' " + where + "; this key is '" + k + "'";
    return "unknown key '" + key + "' " + where;
}

inline bool same_kind(const json& def, const json& v) {
    if (def.is_null()) return v.is_null() || v.is_number();
    if (def.is_number_integer()) return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (def.is_number()) return v.is_number();
    if (def.is_string()) return v.is_string();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_array()) {
        if (!v.is_array()) return false;
        for (const auto& e : v)
            if (!e.is_number()) return false;
        return true;
    }
    if (def.is_object()) return v.is_object();
    return false;
}

inline std::string kind_name(const json& def) {
    if (def.is_null()) return "a number or null";
    if (def.is_number_integer()) return "an integer";
    if (def.is_number()) return "a number";
    if (def.is_string()) return "a string";
    if (def.is_boolean()) return "true or false";
    if (def.is_array()) return "an array of numbers";
    return "an object";
}

inline void check_free(const std::string& command, const json& free) {
    const auto& names = fit_parameter_names(command);
    for (const auto& [k, v] : free.items()) {
        if (!names.count(k)) {
            json schema = json::object();
            for (const auto& [n, _] : names) schema[n] = 0;
            throw ConfigError(unknown_key_message(schema, k, "in 'free'"));
        }
        if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
            throw ConfigError("free parameter '" + k + "' needs [lower, upper, initial]");
    }
    if (free.empty()) throw ConfigError("'free' must name at least one parameter");
}

} // namespace detail

// Defaults overridden by `user`; unknown keys and wrong value kinds are errors.
inline json effective_config(const std::string& command, const json& user) {
    if (!user.is_object()) throw ConfigError("configuration must be a JSON object");
    json c = defaults(command);
    for (const auto& [k, v] : user.items()) {
        if (!c.contains(k)) throw ConfigError(detail::unknown_key_message(c, k, "for '" + command + "'"));
        if (!detail::same_kind(c[k], v))
            throw ConfigError("key '" + k + "' must be " + detail::kind_name(c[k]));
        c[k] = v;
    }
    if (c.contains("free")) detail::check_free(command, c["free"]);
    return c;
}

// ---------------------------------------------------------------- typed access

namespace detail {

inline double num(const json& c, const char* key) { return c.at(key).get<double>(); }

inline std::size_t count(const json& c, const char* key) {
    const auto v = c.at(key).get<double>();
    if (v < 0.0) throw ConfigError(std::string("'") + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
}

inline std::string str(const json& c, const char* key) { return c.at(key).get<std::string>(); }

inline std::vector<double> energy_grid(const json& c) {
    const double lo = num(c, "e_min_eV"), hi = num(c, "e_max_eV");
    const std::size_t n = count(c, "n_energies");
    if (n < 2 || !(hi > lo) || !(lo > 0.0)) throw ConfigError("energy grid needs 0 < e_min_eV < e_max_eV and n_energies >= 2");
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return e;
}

inline tmm::Polarization polarization(const json& c) {
    const auto p = str(c, "polarization");
    if (p == "s") return tmm::Polarization::s;
    if (p == "p") return tmm::Polarization::p;
    throw ConfigError("polarization must be \"s\" or \"p\"");
}

inline bath::BathParams bath_params(const json& c) {
    const auto u = c.at("u").get<int>();
    return {num(c, "a"), u, num(c, "xi_eV"), bath::InverseTemperature::from_kelvin(num(c, "temperature_K"))};
}

inline std::complex<double> n_background(const json& c) {
    return std::sqrt(std::complex<double>(num(c, "eps_bg_re"), num(c, "eps_bg_im")));
}

inline holstein::ThinFilmParams thin_film_params(const json& c) {
    holstein::ThinFilmParams p;
    p.eps_s = num(c, "eps_s_eV");
    p.sigma = num(c, "sigma_eV");
    p.gamma = num(c, "gamma_eV");
    p.bath = bath_params(c);
    p.n_bg = n_background(c);
    p.scale = num(c, "scale");
    holstein::validate(p);
    return p;
}

inline holstein::FilmGeometry film_geometry(const json& c) {
    holstein::FilmGeometry g;
    g.thickness_nm = num(c, "thickness_nm");
    g.theta_deg = num(c, "theta_deg");
    g.pol = polarization(c);
    g.substrate = std::complex<double>(num(c, "substrate_n_re"), num(c, "substrate_n_im"));
    return g;
}

inline fit::CavityModelConfig cavity_model(const json& c) {
    fit::CavityModelConfig m;
    auto& mol = m.setup.molecules;
    mol.n_mol = count(c, "n_mol");
    mol.eps_s = num(c, "eps_s_eV");
    mol.gamma = num(c, "gamma_eV");
    mol.rabi = num(c, "rabi_eV");
    mol.bath = bath_params(c);
    auto& cav = m.setup.cavity;
    cav.e0 = num(c, "e0_eV");
    cav.n_r = num(c, "n_r");
    cav.kappa = num(c, "kappa_eV");
    cav.mu_c_ratio = num(c, "mu_c_ratio");
    m.setup.n_modes = count(c, "n_modes");
    const auto grid = str(c, "kz_grid");
    if (grid == "probe_centered") m.setup.grid = htc::GridMode::probe_centered;
    else if (grid == "span") m.setup.grid = htc::GridMode::span;
    else throw ConfigError("kz_grid must be \"probe_centered\" or \"span\"");
    m.setup.theta_max_deg = num(c, "kz_span_deg");
    m.setup.z_offset_nm = num(c, "z_offset_nm");
    m.scale = num(c, "scale");
    m.stack.effective_thickness_nm = num(c, "effective_thickness_nm");
    m.stack.n_bg = n_background(c);
    m.stack.mirror_thickness_nm = num(c, "mirror_thickness_nm");
    m.stack.mirror_material = str(c, "mirror_material");
    m.stack.substrate_material = str(c, "substrate_material");
    m.stack.include_lif = c.at("include_lif").get<bool>();
    m.stack.lif_thickness_nm = num(c, "lif_thickness_nm");
    m.pol = polarization(c);
    m.energies = energy_grid(c);
    m.evolution.dt = num(c, "dt_eV_inv");
    m.evolution.t_max = num(c, "t_max_eV_inv");
    m.evolution.tail_tolerance = num(c, "tail_tolerance");
    m.workers = count(c, "workers");
    nmqsd::validate(m.evolution);
    return m;
}

inline std::vector<double> angles(const json& c) {
    auto a = c.at("angles_deg").get<std::vector<double>>();
    if (a.empty()) throw ConfigError("angles_deg must not be empty");
    for (double t : a)
        if (!(t >= 0.0 && t < 90.0)) throw ConfigError("angles must lie in [0, 90) degrees");
    return a;
}

inline fit::FitProblem fit_problem(const std::string& command, const json& c) {
    fit::FitProblem p;
    const auto& names = fit_parameter_names(command);
    for (const auto& [k, v] : c.at("free").items())
        p.free.push_back({names.at(k), v[0].get<double>(), v[1].get<double>(), v[2].get<double>()});
    p.objective = command == "fit-cavity" ? fit::Objective::minima_chi2 : fit::Objective::pointwise_chi2;
    p.options.max_evaluations = count(c, "max_evaluations");
    p.options.tolerance = num(c, "tolerance");
    fit::validate(p);
    return p;
}

inline std::string data_file(const json& c) {
    const auto path = str(c, "data_file");
    if (path.empty()) throw ConfigError("data_file is required (set it in the config or with --data)");
    return path;
}

} // namespace detail

// ---------------------------------------------------------------- hashing

inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex(std::uint64_t h) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

inline std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

namespace detail {

inline std::string material_path(const std::string& name_or_path) {
    const fs::path p(name_or_path);
    if (p.extension() == ".csv" || p.has_parent_path()) return name_or_path;
    return materials::data_dir() + "/materials/" + name_or_path + ".csv";
}

} // namespace detail

// Files whose contents feed the run, keyed as they appear in the config.
inline std::vector<std::pair<std::string, std::string>> input_files(const std::string& command, const json& c) {
    std::vector<std::pair<std::string, std::string>> files;
    if (c.contains("data_file") && !c["data_file"].get<std::string>().empty())
        files.emplace_back(c["data_file"].get<std::string>(), c["data_file"].get<std::string>());
    if (command == "cavity" || command == "fit-cavity" || command == "errors") {
        for (const char* key : {"mirror_material", "substrate_material"}) {
            const auto name = c[key].get<std::string>();
            files.emplace_back(name, detail::material_path(name));
        }
        if (c["include_lif"].get<bool>()) files.emplace_back("lif", detail::material_path("lif"));
    }
    return files;
}

inline std::string inputs_hash(const std::string& command, const json& c) {
    std::uint64_t h = fnv1a(command + "\n" + c.dump() + "\n");
    for (const auto& [name, path] : input_files(command, c)) {
        if (!fs::exists(path)) throw DataError("input file not found: " + path);
        h = fnv1a(name + "\n", h);
        h = fnv1a(read_bytes(path), h);
    }
    return hex(h);
}

// ---------------------------------------------------------------- outputs

struct Output {
    fs::path dir;
    std::ostream* log{&std::cout};
    std::vector<std::string> files;

    void table(const std::string& name, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
        csv::write_table((dir / name).string(), header, rows);
        files.push_back(name);
    }
    void text(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw DataError("cannot write '" + (dir / name).string() + "'");
        out << content;
        files.push_back(name);
    }
};

namespace detail {

inline std::string fmt(double v) { return csv::format_double(v); }

inline std::string plot_header(const std::string& xlabel, const std::string& ylabel) {
    return "set datafile separator ','\nset key autotitle columnhead\nset xlabel '" + xlabel +
           "'\nset ylabel '" + ylabel + "'\n";
}

inline std::string matrix_plot(const std::string& file, std::size_t columns, const std::string& ylabel) {
    return plot_header("E (eV)", ylabel) + "plot for [i=2:" + std::to_string(columns + 1) + "] '" + file +
           "' using 1:i with lines\n";
}

} // namespace detail

// ---------------------------------------------------------------- commands

inline int run_bcf(const json& c, Output& out) {
    const auto p = detail::bath_params(c);
    bath::validate(p);
    const double dt = detail::num(c, "dt_eV_inv"), t_max = detail::num(c, "t_max_eV_inv");
    if (!(dt > 0.0) || !(t_max >= dt)) throw ConfigError("need dt_eV_inv > 0 and t_max_eV_inv >= dt_eV_inv");
    const auto n = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9)) + 1;
    const auto alpha = bath::tabulate_bcf(p, dt, n);
    const auto g = bath::tabulate_lineshape(p, dt, n);
    std::vector<std::vector<double>> ra, rg, rj;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = dt * static_cast<double>(k);
        ra.push_back({t, alpha.values[k].real(), alpha.values[k].imag()});
        rg.push_back({t, g[k].real(), g[k].imag()});
    }
    const double w_max = detail::num(c, "omega_max_eV");
    const std::size_t nw = detail::count(c, "n_omega");
    if (nw < 2 || !(w_max > 0.0)) throw ConfigError("need omega_max_eV > 0 and n_omega >= 2");
    for (std::size_t k = 0; k < nw; ++k) {
        const double w = w_max * static_cast<double>(k) / static_cast<double>(nw - 1);
        rj.push_back({w, bath::spectral_density(p, w), 0.0});
    }
    const std::vector<std::string> header{"t_or_omega", "re", "im"};
    out.table("bcf.csv", header, ra);
    out.table("lineshape.csv", header, rg);
    out.table("spectral_density.csv", header, rj);
    out.text("bcf.gp", detail::plot_header("t (1/eV)", "alpha(t)") +
                           "plot 'bcf.csv' using 1:2 with lines, '' using 1:3 with lines\n"
                           "pause -1\n" +
                           "set xlabel 'omega (eV)'\nset ylabel 'J(omega)'\n"
                           "plot 'spectral_density.csv' using 1:2 with lines\n");
    *out.log << "reorganization energy " << detail::fmt(bath::reorganization_energy(p)) << " eV\n";
    return exit_ok;
}

struct FilmResult {
    std::vector<double> energies;
    response::Spectrum chi, eps, n;
    std::vector<double> A, R, T;
};

inline FilmResult compute_film(const holstein::ThinFilmParams& p, const holstein::FilmGeometry& geo,
                               const std::vector<double>& energies, double dt) {
    FilmResult f;
    f.energies = energies;
    f.chi = holstein::thin_film_susceptibility(p, energies, dt);
    f.eps = response::dielectric(f.chi, p.n_bg);
    f.n = response::refractive_index(f.eps);
    const auto stack = holstein::film_stack(f.n, geo);
    for (double e : energies) {
        const auto rt = tmm::reflect_transmit(stack, e, geo.theta_deg, geo.pol);
        f.R.push_back(rt.R);
        f.T.push_back(rt.T);
        f.A.push_back(tmm::absorption(stack, e, geo.theta_deg, geo.pol));
    }
    return f;
}

inline int run_thin_film(const json& c, Output& out) {
    const auto f = compute_film(detail::thin_film_params(c), detail::film_geometry(c), detail::energy_grid(c),
                                detail::num(c, "dt_eV_inv"));
    std::vector<std::vector<double>> rows;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < f.energies.size(); ++i) {
        rows.push_back({f.energies[i], f.chi.values[i].real(), f.chi.values[i].imag(), f.eps.values[i].real(),
                        f.eps.values[i].imag(), f.n.values[i].real(), f.n.values[i].imag(), f.A[i], f.R[i], f.T[i]});
        if (f.A[i] > f.A[peak]) peak = i;
    }
    out.table("thin_film.csv", {"energy_eV", "chi_re", "chi_im", "eps_re", "eps_im", "n", "k", "A", "R", "T"}, rows);
    out.text("thin_film.gp", detail::plot_header("E (eV)", "A, R, T") +
                                 "plot 'thin_film.csv' using 1:\"A\" with lines, '' using 1:\"R\" with lines, "
                                 "'' using 1:\"T\" with lines\n");
    *out.log << "absorption peak at " << detail::fmt(f.energies[peak]) << " eV (A = " << detail::fmt(f.A[peak])
             << ")\n";
    return exit_ok;
}

struct CavityResult {
    std::vector<double> energies;
    std::vector<double> angles;
    std::vector<response::Spectrum> chi;
    std::vector<tmm::Stack> stacks;
    std::vector<std::vector<double>> R;  // per angle
};

inline CavityResult compute_cavity(const fit::CavityModelConfig& cfg, const std::vector<double>& angles) {
    const auto mats = htc::load_cavity_materials(cfg.stack);
    CavityResult r;
    r.energies = cfg.energies;
    r.angles = angles;
    r.chi.resize(angles.size());
    r.stacks.resize(angles.size());
    r.R.resize(angles.size());
    nmqsd::KernelSet cache;
    parallel_for(angles.size(), cfg.workers, [&](std::size_t j) {
        const auto m = htc::model_for_angle(cfg.setup, angles[j]);
        r.chi[j] = htc::cavity_susceptibility(m.molecules, m.cavity, m.probe_kz, cfg.energies, cfg.scale,
                                              cfg.evolution, &cache);
        r.stacks[j] = htc::cavity_stack(r.chi[j], cfg.stack, mats);
        for (double e : cfg.energies) r.R[j].push_back(tmm::reflect_transmit(r.stacks[j], e, angles[j], cfg.pol).R);
    });
    return r;
}

namespace detail {

inline std::vector<std::string> map_header(const std::vector<double>& angles) {
    std::vector<std::string> h{"energy_eV"};
    for (double a : angles) h.push_back(fmt(a));
    return h;
}

inline std::vector<std::vector<double>> map_rows(const std::vector<double>& energies,
                                                 const std::function<double(std::size_t, std::size_t)>& value,
                                                 std::size_t n_angles) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        std::vector<double> row{energies[i]};
        for (std::size_t j = 0; j < n_angles; ++j) row.push_back(value(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::pair<double, double> oscillator_at(const fit::CavityModelConfig& cfg, double theta) {
    const double kz = htc::angle_to_kz(cfg.setup.cavity.e0, theta);
    return htc::coupled_oscillator(cfg.setup.molecules.eps_s, htc::cavity_dispersion(cfg.setup.cavity, kz),
                                   cfg.setup.molecules.rabi);
}

} // namespace detail

inline int run_cavity(const json& c, Output& out) {
    const auto cfg = detail::cavity_model(c);
    const auto angles = detail::angles(c);
    const auto r = compute_cavity(cfg, angles);
    out.table("reflectivity_map.csv", detail::map_header(angles),
              detail::map_rows(r.energies, [&](std::size_t i, std::size_t j) { return r.R[j][i]; }, angles.size()));
    std::vector<std::vector<double>> spectra, minima;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < angles.size(); ++j) {
        const auto n = response::refractive_index(response::dielectric(r.chi[j], cfg.stack.n_bg));
        for (std::size_t i = 0; i < r.energies.size(); ++i)
            spectra.push_back({angles[j], r.energies[i], r.chi[j].values[i].real(), r.chi[j].values[i].imag(),
                               n.values[i].real(), n.values[i].imag()});
        const auto [co_lp, co_up] = detail::oscillator_at(cfg, angles[j]);
        std::vector<double> row{angles[j], nan, nan, nan, nan, co_lp, co_up};
        if (auto p = fit::polariton_pair(fit::find_minima(r.energies, r.R[j], 1e-4))) {
            row[1] = p->first.position;
            row[2] = p->second.position;
            row[3] = p->first.depth;
            row[4] = p->second.depth;
        } else {
            *out.log << "warning: fewer than two minima at " << detail::fmt(angles[j]) << " deg\n";
        }
        minima.push_back(row);
    }
    out.table("cavity_spectra.csv", {"angle_deg", "energy_eV", "chi_re", "chi_im", "n", "k"}, spectra);
    out.table("minima.csv", {"angle_deg", "E_LP", "E_UP", "depth_LP", "depth_UP", "co_LP", "co_UP"}, minima);
    out.text("cavity.gp", detail::matrix_plot("reflectivity_map.csv", angles.size(), "R") + "pause -1\n" +
                              "set xlabel 'angle (deg)'\nset ylabel 'E (eV)'\n"
                              "plot 'minima.csv' using 1:2 with points, '' using 1:3 with points, "
                              "'' using 1:6 with lines, '' using 1:7 with lines\n");
    *out.log << "reflectivity map: " << r.energies.size() << " energies x " << angles.size() << " angles\n";
    return exit_ok;
}

namespace detail {

inline void write_report(Output& out, const std::string& command, const fit::FitReport& rep,
                         const std::map<std::string, std::string>& names) {
    std::map<std::string, std::string> key_of;
    for (const auto& [k, n] : names) key_of[n] = k;
    std::ostringstream s;
    s << "command: " << command << "\n"
      << "chi2: " << fmt(rep.chi2) << "\n"
      << "evaluations: " << rep.evaluations << "\n"
      << "iterations: " << rep.iterations << "\n"
      << "converged: " << (rep.converged ? "true" : "false") << "\n"
      << "identifiable: " << (rep.non_identifiable ? "false" : "true") << "\n"
      << "parameters:\n";
    for (const auto& p : rep.parameters)
        s << "  " << key_of[p.name] << ": " << fmt(p.value) << " +- " << fmt(p.uncertainty)
          << (p.at_bound ? " (at bound)" : "") << "\n";
    s << "warnings:\n";
    for (const auto& w : rep.warnings) s << "  - " << w << "\n";
    out.text("fit_report.txt", s.str());
    *out.log << s.str();
}

} // namespace detail

inline int run_fit_thin_film(const json& c, Output& out) {
    const auto path = detail::data_file(c);
    const auto data = csv::ingest_spectrum(path);
    for (const auto& w : data.warnings) *out.log << "warning: " << path << ": " << w << "\n";
    const auto prob = detail::fit_problem("fit-thin-film", c);
    const auto base = detail::thin_film_params(c);
    const auto geo = detail::film_geometry(c);
    const auto rep = fit::fit_thin_film(data, prob, base, geo);
    std::vector<double> x;
    for (const auto& p : rep.parameters) x.push_back(p.value);
    const auto model = holstein::thin_film_absorption(fit::thin_film_params(prob, x, base), data.x, geo);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < data.x.size(); ++i) rows.push_back({data.x[i], data.y[i], model[i]});
    out.table("fit_curve.csv", {"energy_eV", "data", "model"}, rows);
    out.text("fit.gp", detail::plot_header("E (eV)", "A") +
                           "plot 'fit_curve.csv' using 1:2 with points, '' using 1:3 with lines\n");
    detail::write_report(out, "fit-thin-film", rep, fit_parameter_names("fit-thin-film"));
    return rep.converged ? exit_ok : exit_numeric;
}

// angle_deg,E_LP,E_UP[,depth_LP,depth_UP]; "nan" or a missing column marks an
// unresolved depth.
inline std::vector<fit::MinimaRow> read_minima(const std::string& path) {
    const auto t = csv::read_table(path, true);
    const auto ca = t.column("angle_deg"), cl = t.column("E_LP"), cu = t.column("E_UP");
    std::optional<std::size_t> dl, du;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == "depth_LP") dl = i;
        if (t.header[i] == "depth_UP") du = i;
    }
    std::vector<fit::MinimaRow> rows;
    for (const auto& r : t.rows) {
        fit::MinimaRow m;
        m.angle_deg = r[ca];
        m.e_lp = r[cl];
        m.e_up = r[cu];
        if (dl) m.depth_lp = r[*dl];
        if (du) m.depth_up = r[*du];
        if (std::isnan(m.angle_deg) || std::isnan(m.e_lp) || std::isnan(m.e_up))
            throw DataError(path + ": angle and both positions are required in every row");
        rows.push_back(m);
    }
    return rows;
}

inline int run_fit_cavity(const json& c, Output& out) {
    const auto path = detail::data_file(c);
    const auto data = read_minima(path);
    const auto prob = detail::fit_problem("fit-cavity", c);
    const auto base = detail::cavity_model(c);
    fit::MinimaWeights w;
    w.position_unit = detail::num(c, "position_unit_eV");
    w.depth_unit = detail::num(c, "depth_unit");
    w.depth_weight = detail::num(c, "depth_weight");
    w.missing_penalty = detail::num(c, "missing_penalty");
    if (!(w.position_unit > 0.0 && w.depth_unit > 0.0 && w.depth_weight >= 0.0))
        throw ConfigError("fit weights: units must be > 0 and depth_weight >= 0");
    const auto rep = fit::fit_cavity(data, prob, base, w);
    std::vector<double> x, angles;
    for (const auto& p : rep.parameters) x.push_back(p.value);
    for (const auto& d : data) angles.push_back(d.angle_deg);
    const auto cfg = fit::cavity_config(prob, x, base);
    nmqsd::KernelSet cache;
    const auto model = fit::cavity_minima(cfg, htc::load_cavity_materials(cfg.stack), angles, &cache);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < data.size(); ++k)
        rows.push_back({data[k].angle_deg, data[k].e_lp, data[k].e_up, model[k].e_lp, model[k].e_up});
    out.table("fit_minima.csv", {"angle_deg", "data_LP", "data_UP", "model_LP", "model_UP"}, rows);
    out.text("fit.gp", detail::plot_header("angle (deg)", "E (eV)") +
                           "plot 'fit_minima.csv' using 1:2 with points, '' using 1:3 with points, "
                           "'' using 1:4 with lines, '' using 1:5 with lines\n");
    detail::write_report(out, "fit-cavity", rep, fit_parameter_names("fit-cavity"));
    return rep.converged ? exit_ok : exit_numeric;
}

inline int run_errors(const json& c, Output& out) {
    const auto cfg = detail::cavity_model(c);
    const auto angles = detail::angles(c);
    const auto r = compute_cavity(cfg, angles);
    uncertainty::McDeviations dev;
    dev.sigma_E = detail::num(c, "sigma_E_eV");
    dev.sigma_theta = detail::num(c, "sigma_theta_deg");
    dev.sigma_d_nm = detail::num(c, "sigma_d_nm");
    dev.sigma_n_amp = detail::num(c, "sigma_n_amp");
    if (!c.at("omega0_eV").is_null()) dev.omega0 = detail::num(c, "omega0_eV");
    dev.n_samples = detail::count(c, "n_samples");
    dev.seed = c.at("seed").get<std::uint64_t>();
    std::size_t next = 0;
    uncertainty::McSetup setup{[&](double) { return r.stacks.at(next++); }, 0, cfg.pol};
    const auto mc = uncertainty::mc_reflectivity(setup, r.energies, angles, dev, cfg.workers, true);
    const auto pe = uncertainty::peak_location_error(mc);
    const auto at = [](const Eigen::MatrixXd& m) {
        return [&m](std::size_t i, std::size_t j) {
            return m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        };
    };
    out.table("std_map.csv", detail::map_header(angles), detail::map_rows(r.energies, at(mc.std), angles.size()));
    out.table("base_map.csv", detail::map_header(angles), detail::map_rows(r.energies, at(mc.base), angles.size()));
    std::vector<std::vector<double>> rows;
    for (const auto& p : pe) {
        const auto [co_lp, co_up] = detail::oscillator_at(cfg, p.theta);
        rows.push_back({p.theta, p.base_lp, p.base_up, p.delta, p.mean_lp, p.mean_up, p.lost_fraction,
                        p.flagged ? 1.0 : 0.0, co_lp, co_up});
        if (p.flagged)
            *out.log << "warning: minima lost in " << detail::fmt(100.0 * p.lost_fraction) << "% of samples at "
                     << detail::fmt(p.theta) << " deg\n";
    }
    out.table("peak_errors.csv",
              {"angle_deg", "E_LP", "E_UP", "delta_eV", "mean_LP", "mean_UP", "lost_fraction", "flagged", "co_LP",
               "co_UP"},
              rows);
    out.text("errors.gp", detail::plot_header("angle (deg)", "E (eV)") +
                              "plot 'peak_errors.csv' using 1:2:4 with yerrorbars, '' using 1:3:4 with yerrorbars, "
                              "'' using 1:9 with lines, '' using 1:10 with lines\n");
    *out.log << "Monte Carlo: " << dev.n_samples << " samples, " << r.energies.size() << " x " << angles.size()
             << " grid\n";
    return exit_ok;
}

// ---------------------------------------------------------------- runs

inline json library_versions() {
    return json{{"polaroptics", POLAROPTICS_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"boost", BOOST_LIB_VERSION},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                {"cli11", CLI11_VERSION}};
}

// Runs a command on an effective config, writes outputs and manifest.json
// into `dir`, and returns the exit status. Library exceptions propagate.
inline int execute(const std::string& command, const json& config, const fs::path& dir, std::ostream& log,
                   json* manifest_out = nullptr) {
    const auto hash = inputs_hash(command, config);
    fs::create_directories(dir);
    Output out{dir, &log, {}};
    int status = exit_ok;
    if (command == "bcf") status = run_bcf(config, out);
    else if (command == "thin-film") status = run_thin_film(config, out);
    else if (command == "cavity") status = run_cavity(config, out);
    else if (command == "fit-thin-film") status = run_fit_thin_film(config, out);
    else if (command == "fit-cavity") status = run_fit_cavity(config, out);
    else if (command == "errors") status = run_errors(config, out);
    else throw ConfigError("unknown command '" + command + "'");

    json outputs = json::object();
    for (const auto& f : out.files) outputs[f] = hex(fnv1a(read_bytes((dir / f).string())));
    json inputs = json::object();
    for (const auto& [name, path] : input_files(command, config)) inputs[name] = hex(fnv1a(read_bytes(path)));
    json manifest{{"tool", "polaroptics"},
                  {"command", command},
                  {"seed", config.at("seed")},
                  {"inputs_hash", hash},
                  {"inputs", inputs},
                  {"versions", library_versions()},
                  {"config", config},
                  {"outputs", outputs}};
    std::ofstream m(dir / "manifest.json", std::ios::binary);
    m << manifest.dump(2) << "\n";
    if (!m) throw DataError("cannot write manifest in '" + dir.string() + "'");
    if (manifest_out) *manifest_out = manifest;
    return status;
}

inline json load_json(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path);
    std::ifstream in(path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
}

// Re-runs the command recorded in a manifest and checks that every output
// hash is reproduced.
inline int rerun(const std::string& manifest_path, const fs::path& dir, std::ostream& log) {
    const auto m = load_json(manifest_path);
    if (!m.contains("command") || !m.contains("config") || !m.contains("inputs_hash"))
        throw ConfigError(manifest_path + ": not a polaroptics manifest");
    const auto command = m["command"].get<std::string>();
    const auto config = effective_config(command, m["config"]);
    if (inputs_hash(command, config) != m["inputs_hash"].get<std::string>())
        throw DataError(manifest_path + ": inputs changed since the manifest was written");
    json fresh;
    const int status = execute(command, config, dir, log, &fresh);
    if (fresh["outputs"] != m["outputs"]) {
        log << "outputs differ from the manifest\n";
        return exit_numeric;
    }
    log << "reproduced " << m["outputs"].size() << " outputs\n";
    return status;
}

inline int exit_code(const std::exception_ptr& e, std::ostream& err) {
    try {
        std::rethrow_exception(e);
    } catch (const ConfigError& x) {
        err << "config error: " << x.what() << "\n";
        return exit_config;
    } catch (const DomainError& x) {
        err << "config error: " << x.what() << "\n";
        return exit_config;
    } catch (const json::exception& x) {
        err << "config error: " << x.what() << "\n";
        return exit_config;
    } catch (const DataError& x) {
        err << "data error: " << x.what() << "\n";
        return exit_data;
    } catch (const NumericError& x) {
        err << "numeric error: " << x.what() << "\n";
        return exit_numeric;
    } catch (const std::exception& x) {
        err << "error: " << x.what() << "\n";
        return exit_failure;
    }
}

// "15..65" with a step, or a comma separated list.
inline std::vector<double> parse_angles(const std::string& text, double step) {
    std::vector<double> a;
    const auto dots = text.find("..");
    auto number = [&](std::string_view s) {
        double v = 0.0;
        if (!csv::parse_double(s, v)) throw ConfigError("bad angle '" + std::string(s) + "' in --angles");
        return v;
    };
    if (dots != std::string::npos) {
        const double lo = number(std::string_view(text).substr(0, dots));
        const double hi = number(std::string_view(text).substr(dots + 2));
        if (!(step > 0.0) || hi < lo) throw ConfigError("--angles a..b needs a <= b and --step > 0");
        const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
        for (std::size_t k = 0; k <= n; ++k) a.push_back(lo + step * static_cast<double>(k));
    } else {
        for (const auto& cell : csv::split_line(text)) a.push_back(number(cell));
    }
    return a;
}

inline int main(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Linear optics of molecular thin films and microcavity polaritons", "polaroptics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(POLAROPTICS_VERSION));

    struct Options {
        std::string config, out{"out"}, angles, data;
        std::vector<std::string> sets;
        std::optional<std::uint64_t> seed;
        std::optional<std::size_t> workers;
        double step{5.0};
    } o;
    const std::map<std::string, std::string> help{
        {"bcf", "bath correlation function, lineshape and spectral density tables"},
        {"thin-film", "refractive index and A/R/T of a molecular film"},
        {"cavity", "angle-resolved microcavity reflectivity map"},
        {"fit-thin-film", "fit film parameters to a measured absorption curve"},
        {"fit-cavity", "fit cavity parameters to measured polariton minima"},
        {"errors", "Monte Carlo error map and polariton peak error bars"}};
    for (const auto& name : command_names()) {
        auto* sub = app.add_subcommand(name, help.at(name));
        sub->add_option("-c,--config", o.config, "JSON config (keys carry unit suffixes)");
        sub->add_option("-o,--out", o.out, "output directory")->capture_default_str();
        sub->add_option("--set", o.sets, "override one key, key=value (value parsed as JSON)");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--workers", o.workers, "worker threads (0 = all cores)");
        if (name == "cavity" || name == "errors") {
            sub->add_option("--angles", o.angles, "angles in degrees: a..b or a,b,c");
            sub->add_option("--step", o.step, "step for --angles a..b")->capture_default_str();
        }
        if (name.rfind("fit-", 0) == 0) sub->add_option("--data", o.data, "measured data CSV");
    }
    std::string manifest;
    auto* re = app.add_subcommand("rerun", "repeat a run from its manifest.json");
    re->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
    re->add_option("-o,--out", o.out, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, log, err) == 0 ? exit_ok : exit_config;
    }

    try {
        if (re->parsed()) return rerun(manifest, o.out, log);
        const std::string command = app.get_subcommands().front()->get_name();
        json user = o.config.empty() ? json::object() : load_json(o.config);
        if (!user.is_object()) throw ConfigError(o.config + ": configuration must be a JSON object");
        for (const auto& s : o.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + s + "'");
            const auto value = s.substr(eq + 1);
            user[s.substr(0, eq)] = json::accept(value) ? json::parse(value) : json(value);
        }
        if (o.seed) user["seed"] = *o.seed;
        if (o.workers) user["workers"] = *o.workers;
        if (!o.angles.empty()) user["angles_deg"] = parse_angles(o.angles, o.step);
        if (!o.data.empty()) user["data_file"] = o.data;
        return execute(command, effective_config(command, user), o.out, log);
    } catch (...) {
        return exit_code(std::current_exception(), err);
    }
}

} // namespace polaroptics::cli
