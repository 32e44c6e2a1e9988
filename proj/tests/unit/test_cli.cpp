#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli_app.hpp"

using namespace polaroptics;
namespace fs = std::filesystem;
using cli::json;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::path(testing::TempDir()) / ("polaroptics_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) { return cli::read_bytes(p.string()); }

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
    args.insert(args.begin(), "polaroptics");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream log, err;
    const int rc = cli::main(static_cast<int>(argv.size()), argv.data(), log, err);
    if (err_text) *err_text = err.str();
    return rc;
}

// Exit status of the installed binary (shell redirection keeps the console quiet).
int run_binary(const std::string& args, const fs::path& stderr_file) {
    const std::string cmd = std::string(POLAROPTICS_CLI_PATH) + " " + args + " > /dev/null 2> " + stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string small_cavity = R"({"n_mol": 4, "n_modes": 3, "n_energies": 40, "workers": 1})";

} // namespace

TEST(Config, DefaultsCarryEveryKey) {
    for (const auto& c : cli::command_names()) {
        const auto d = cli::defaults(c);
        EXPECT_TRUE(d.contains("seed")) << c;
        EXPECT_TRUE(d.contains("workers")) << c;
        EXPECT_EQ(cli::effective_config(c, json::object()), d) << c;
    }
    EXPECT_THROW(cli::defaults("plot"), ConfigError);
}

TEST(Config, UnknownKeysAreErrors) {
    try {
        cli::effective_config("thin-film", json{{"eps_s", 3.6}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("'eps_s_eV'"), std::string::npos) << e.what();
    }
    EXPECT_THROW(cli::effective_config("thin-film", json{{"thicknes_nm", 60.0}}), ConfigError);
    EXPECT_THROW(cli::effective_config("bcf", json{{"angles_deg", json::array({15.0})}}), ConfigError);
}

TEST(Config, UnitMismatchNamesTheExpectedKey) {
    try {
        cli::effective_config("errors", json{{"sigma_d_m", 1e-9}});
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("unit mismatch"), std::string::npos) << msg;
        EXPECT_NE(msg.find("sigma_d_nm"), std::string::npos) << msg;
    }
    EXPECT_THROW(cli::effective_config("cavity", json{{"e0_meV", 3420.0}}), ConfigError);
}

TEST(Config, ValueKindsAreChecked) {
    EXPECT_THROW(cli::effective_config("thin-film", json{{"eps_s_eV", "3.6"}}), ConfigError);
    EXPECT_THROW(cli::effective_config("thin-film", json{{"n_energies", 10.5}}), ConfigError);
    EXPECT_THROW(cli::effective_config("cavity", json{{"include_lif", 1}}), ConfigError);
    EXPECT_NO_THROW(cli::effective_config("thin-film", json{{"n_energies", 11.0}, {"eps_s_eV", 4}}));
    EXPECT_NO_THROW(cli::effective_config("errors", json{{"omega0_eV", 2.6}}));
    EXPECT_THROW(cli::effective_config("thin-film", json::array()), ConfigError);
}

TEST(Config, FreeParametersAreValidated) {
    EXPECT_NO_THROW(cli::effective_config("fit-cavity", json{{"free", {{"kappa_eV", {0.1, 0.3, 0.2}}}}}));
    EXPECT_THROW(cli::effective_config("fit-cavity", json{{"free", {{"kappa", {0.1, 0.3, 0.2}}}}}), ConfigError);
    EXPECT_THROW(cli::effective_config("fit-thin-film", json{{"free", {{"sigma_eV", {0.1, 0.3}}}}}), ConfigError);
    EXPECT_THROW(cli::effective_config("fit-thin-film", json{{"free", json::object()}}), ConfigError);
}

TEST(Angles, RangeAndList) {
    const auto a = cli::parse_angles("15..65", 5.0);
    ASSERT_EQ(a.size(), 11u);
    EXPECT_EQ(a.front(), 15.0);
    EXPECT_EQ(a.back(), 65.0);
    EXPECT_EQ(cli::parse_angles("0, 12.5,30", 5.0), (std::vector<double>{0.0, 12.5, 30.0}));
    EXPECT_THROW(cli::parse_angles("30..10", 5.0), ConfigError);
    EXPECT_THROW(cli::parse_angles("a..b", 5.0), ConfigError);
}

TEST(Hash, Fnv1aReferenceValues) {
    EXPECT_EQ(cli::fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(cli::hex(0xabcULL), "0000000000000abc");
}

TEST(Ingest, SortsAveragesAndWarns) {
    const auto dir = scratch("ingest");
    write_file(dir / "k.csv", "energy_eV,value\n3.0,0.1\n3.1,0.2\n3.2,0.3\n3.3,0.2\n");
    EXPECT_EQ(csv::ingest_spectrum((dir / "k.csv").string()).x.size(), 4u);
    write_file(dir / "u.csv", "energy_eV,value\n3.2,0.3\n3.0,0.1\n3.1,0.2\n3.1,0.4\n");
    const auto c = csv::ingest_spectrum((dir / "u.csv").string());
    EXPECT_EQ(c.x, (std::vector<double>{3.0, 3.1, 3.2}));
    EXPECT_NEAR(c.y[1], 0.3, 1e-15);
    EXPECT_EQ(c.warnings.size(), 2u);
    write_file(dir / "bad.csv", "energy_eV,value\n3.0,abc\n");
    EXPECT_THROW(csv::ingest_spectrum((dir / "bad.csv").string()), DataError);
    write_file(dir / "empty.csv", "");
    EXPECT_THROW(csv::ingest_spectrum((dir / "empty.csv").string()), DataError);
    EXPECT_THROW(csv::ingest_spectrum((dir / "none.csv").string()), DataError);
}

TEST(Ingest, MinimaWithUnresolvedDepths) {
    const auto dir = scratch("minima");
    write_file(dir / "m.csv", "angle_deg,E_LP,E_UP,depth_LP,depth_UP\n15,3.0,4.0,0.5,nan\n30,3.1,4.1,0.6,0.03\n");
    const auto rows = cli::read_minima((dir / "m.csv").string());
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_TRUE(std::isnan(rows[0].depth_up));
    EXPECT_EQ(rows[1].depth_up, 0.03);
    write_file(dir / "p.csv", "angle_deg,E_LP,E_UP\n15,3.0,4.0\n");
    EXPECT_TRUE(std::isnan(cli::read_minima((dir / "p.csv").string())[0].depth_lp));
    write_file(dir / "x.csv", "angle_deg,E_LP,E_UP\n15,nan,4.0\n");
    EXPECT_THROW(cli::read_minima((dir / "x.csv").string()), DataError);
}

TEST(Commands, ThinFilmMatchesLibraryAndRoundTrips) {
    const auto dir = scratch("thin_film");
    ASSERT_EQ(run({"thin-film", "-o", dir.string()}), 0);
    const auto t = csv::read_table((dir / "thin_film.csv").string());
    const auto e = t.values(t.column("energy_eV"));
    ASSERT_EQ(e.size(), 181u);
    const auto a = holstein::thin_film_absorption(holstein::ThinFilmParams{}, e, holstein::FilmGeometry{});
    const auto got = t.values(t.column("A"));
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_NEAR(got[i], a[i], 1e-12);
    // every emitted value parses back to the same double
    std::ostringstream again;
    csv::write_table(again, t.header, t.rows);
    EXPECT_EQ(again.str(), slurp(dir / "thin_film.csv"));
    EXPECT_TRUE(fs::exists(dir / "thin_film.gp"));
}

TEST(Commands, BcfTablesHaveDeclaredColumns) {
    const auto dir = scratch("bcf");
    ASSERT_EQ(run({"bcf", "-o", dir.string(), "--set", "t_max_eV_inv=20", "--set", "xi_eV=0.1"}), 0);
    for (const char* f : {"bcf.csv", "lineshape.csv", "spectral_density.csv"}) {
        const auto t = csv::read_table((dir / f).string());
        EXPECT_EQ(t.header, (std::vector<std::string>{"t_or_omega", "re", "im"})) << f;
    }
    const auto t = csv::read_table((dir / "bcf.csv").string());
    ASSERT_EQ(t.rows.size(), 201u);
    bath::BathParams p{1.0, 3, 0.1, {}};
    const auto ref = bath::bcf(p, t.rows[57][0]);
    EXPECT_NEAR(t.rows[57][1], ref.real(), 1e-9);
    EXPECT_NEAR(t.rows[57][2], ref.imag(), 1e-9);
}

TEST(Commands, CavityMapHasOneColumnPerAngle) {
    const auto dir = scratch("cavity");
    write_file(dir / "c.json", small_cavity);
    ASSERT_EQ(run({"cavity", "-c", (dir / "c.json").string(), "--angles", "15..65", "--step", "5", "-o",
                   (dir / "out").string()}),
              0);
    const auto t = csv::read_table((dir / "out" / "reflectivity_map.csv").string());
    ASSERT_EQ(t.header.size(), 12u);
    EXPECT_EQ(t.header[0], "energy_eV");
    EXPECT_EQ(t.header[1], "15");
    EXPECT_EQ(t.header[11], "65");
    EXPECT_EQ(t.rows.size(), 40u);
    EXPECT_TRUE(fs::exists(dir / "out" / "cavity_spectra.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "minima.csv"));
}

TEST(Manifest, RecordsRunAndReproducesOutputs) {
    const auto dir = scratch("manifest");
    write_file(dir / "c.json", small_cavity);
    ASSERT_EQ(run({"errors", "-c", (dir / "c.json").string(), "--angles", "0,20", "--set", "n_samples=8", "--seed",
                   "11", "-o", (dir / "a").string()}),
              0);
    const auto m = json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(m["command"], "errors");
    EXPECT_EQ(m["seed"], 11);
    EXPECT_EQ(m["config"]["n_samples"], 8);
    EXPECT_EQ(m["inputs_hash"].get<std::string>().size(), 16u);
    EXPECT_TRUE(m["inputs"].contains("aluminium"));
    EXPECT_TRUE(m["versions"].contains("eigen"));
    EXPECT_TRUE(m["outputs"].contains("std_map.csv"));
    ASSERT_EQ(run({"rerun", (dir / "a" / "manifest.json").string(), "-o", (dir / "b").string()}), 0);
    for (const auto& f : {"std_map.csv", "base_map.csv", "peak_errors.csv", "manifest.json"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(Manifest, WorkerCountDoesNotChangeOutputs) {
    const auto dir = scratch("workers");
    write_file(dir / "c.json", small_cavity);
    const std::string cfg = (dir / "c.json").string();
    ASSERT_EQ(run({"errors", "-c", cfg, "--angles", "0,20", "--set", "n_samples=6", "--workers", "1", "-o",
                   (dir / "w1").string()}),
              0);
    ASSERT_EQ(run({"errors", "-c", cfg, "--angles", "0,20", "--set", "n_samples=6", "--workers", "3", "-o",
                   (dir / "w3").string()}),
              0);
    EXPECT_EQ(slurp(dir / "w1" / "std_map.csv"), slurp(dir / "w3" / "std_map.csv"));
}

TEST(Manifest, ChangedInputsAreRejected) {
    const auto dir = scratch("changed");
    write_file(dir / "abs.csv", "energy_eV,value\n3.4,0.1\n3.5,0.2\n3.6,0.3\n3.7,0.2\n3.8,0.1\n3.9,0.05\n");
    // one evaluation is enough to produce a manifest; the fit reports non-convergence
    const int rc = run({"fit-thin-film", "--data", (dir / "abs.csv").string(), "--set", "max_evaluations=1", "-o",
                        (dir / "a").string()});
    EXPECT_EQ(rc, cli::exit_numeric);
    write_file(dir / "abs.csv", "energy_eV,value\n3.4,0.1\n3.5,0.2\n3.6,0.3\n3.7,0.2\n3.8,0.1\n3.9,0.06\n");
    std::string err;
    EXPECT_EQ(run({"rerun", (dir / "a" / "manifest.json").string(), "-o", (dir / "b").string()}, &err),
              cli::exit_data);
    EXPECT_NE(err.find("inputs changed"), std::string::npos) << err;
}

TEST(ExitCodes, ConfigErrors) {
    const auto dir = scratch("exit_config");
    std::string err;
    EXPECT_EQ(run({"thin-film", "--set", "eps_s_meV=3600", "-o", dir.string()}, &err), cli::exit_config);
    EXPECT_NE(err.find("eps_s_eV"), std::string::npos);
    EXPECT_EQ(run({"thin-film", "--set", "sigma_eV=-1", "-o", dir.string()}), cli::exit_config);
    EXPECT_EQ(run({"thin-film", "--no-such-flag"}), cli::exit_config);
    EXPECT_EQ(run({"thin-film", "-c", (dir / "missing.json").string()}), cli::exit_config);
    write_file(dir / "broken.json", "{\"eps_s_eV\": ");
    EXPECT_EQ(run({"thin-film", "-c", (dir / "broken.json").string()}), cli::exit_config);
    EXPECT_EQ(run({"fit-thin-film", "-o", dir.string()}), cli::exit_config);
    EXPECT_EQ(run({}), cli::exit_config);
}

TEST(ExitCodes, BinaryReportsMissingMaterialFile) {
    const auto dir = scratch("exit_binary");
    const auto missing = (dir / "no_such_mirror.csv").string();
    const int rc = run_binary("cavity --set mirror_material=" + missing + " -o " + (dir / "out").string(),
                              dir / "stderr.txt");
    EXPECT_EQ(rc, cli::exit_data);
    EXPECT_NE(slurp(dir / "stderr.txt").find(missing), std::string::npos);
    EXPECT_EQ(run_binary("thin-film --set bogus=1 -o " + (dir / "out").string(), dir / "stderr.txt"),
              cli::exit_config);
    EXPECT_EQ(run_binary("fit-thin-film --data " + (dir / "absent.csv").string() + " -o " + (dir / "out").string(),
                         dir / "stderr.txt"),
              cli::exit_data);
    EXPECT_EQ(run_binary("--version", dir / "stderr.txt"), 0);
}
