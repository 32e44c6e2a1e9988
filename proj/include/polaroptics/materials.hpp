// materials.hpp - Tabulated complex refractive indices n(E) + i k(E)

#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "polaroptics/csv.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/response.hpp"

namespace polaroptics::materials {

using cplx = std::complex<double>;

// Linear interpolation in energy of n + ik.
struct IndexTable {
    std::string name;
    std::vector<double> energies;
    std::vector<cplx> values;

    cplx operator()(double e) const {
        if (energies.empty()) throw DomainError("index table '" + name + "' is empty");
        const double tol = 1e-12 * std::max(1.0, std::abs(e));
        if (e < energies.front() - tol || e > energies.back() + tol) {
            std::ostringstream msg;
            msg << "energy " << e << " eV outside table '" << name << "' range ["
                << energies.front() << ", " << energies.back() << "]";
            throw DomainError(msg.str());
        }
        if (energies.size() == 1) return values.front();
        auto it = std::upper_bound(energies.begin(), energies.end(), e);
        std::size_t hi = static_cast<std::size_t>(it - energies.begin());
        hi = std::clamp<std::size_t>(hi, 1, energies.size() - 1);
        const std::size_t lo = hi - 1;
        const double w = (e - energies[lo]) / (energies[hi] - energies[lo]);
        return values[lo] + std::clamp(w, 0.0, 1.0) * (values[hi] - values[lo]);
    }
};

inline void validate(const IndexTable& t) {
    if (t.energies.size() != t.values.size() || t.energies.empty())
        throw DataError("index table '" + t.name + "' is empty or ragged");
    for (std::size_t i = 1; i < t.energies.size(); ++i)
        if (!(t.energies[i] > t.energies[i - 1]))
            throw DataError("index table '" + t.name + "' energies must be strictly increasing");
}

inline IndexTable from_spectrum(const response::Spectrum& n, std::string name = "model") {
    if (n.role != response::SpectrumRole::refractive_index)
        throw DomainError("layer index needs a refractive-index spectrum");
    IndexTable t{std::move(name), n.omegas, n.values};
    validate(t);
    return t;
}

// CSV with header energy_eV,n,k.
inline IndexTable load_index_table(const std::string& path) {
    if (!std::filesystem::exists(path)) throw DataError("material file not found: " + path);
    const auto table = csv::read_table(path);
    const auto ce = table.column("energy_eV");
    const auto cn = table.column("n");
    const auto ck = table.column("k");
    IndexTable t;
    t.name = std::filesystem::path(path).stem().string();
    for (const auto& r : table.rows) {
        t.energies.push_back(r[ce]);
        t.values.emplace_back(r[cn], r[ck]);
    }
    validate(t);
    return t;
}

inline std::string data_dir() {
#ifdef POLAROPTICS_DATA_DIR
    return POLAROPTICS_DATA_DIR;
#else
    return "data";
#endif
}

// Packaged tables: "aluminium", "quartz", "lif".
inline IndexTable builtin(const std::string& name) {
    return load_index_table(data_dir() + "/materials/" + name + ".csv");
}

// A packaged table name, or a path when the argument names a CSV file.
inline IndexTable resolve(const std::string& name_or_path) {
    const std::filesystem::path p(name_or_path);
    if (p.extension() == ".csv" || p.has_parent_path()) return load_index_table(name_or_path);
    if (!std::filesystem::exists(data_dir() + "/materials/" + name_or_path + ".csv"))
        throw DataError("unknown material '" + name_or_path + "' (not a packaged table or CSV path)");
    return builtin(name_or_path);
}

} // namespace polaroptics::materials
