#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "specsel/cli.hpp"
#include "specsel/pipeline.hpp"

using namespace specsel;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "specsel");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Workspace {
    fs::path dir;
    Workspace() : dir(fs::temp_directory_path() / "specsel_cli_test") {
        fs::remove_all(dir);
        fs::create_directories(dir);
        SyntheticOptions o;
        o.n_wavelengths = 100;
        o.n_spectra = 80;
        o.response = SyntheticResponse::linear;
        o.seed = 5;
        const SyntheticData d = make_synthetic(o);
        std::ofstream(dir / "data.csv") << [&] {
            std::ostringstream s;
            write_spectra(s, d.set);
            return s.str();
        }();
        std::ofstream(dir / "spectra.csv") << [&] {
            std::ostringstream s;
            write_spectra(s, d.set.without_target());
            return s.str();
        }();
        std::ofstream(dir / "run.cfg") << "data = data.csv\nmethods = bspline_mi_lr, plsr\nmax_components = 6\n"
                                          "rbfn_neurons = 2,4\nrbfn_scales = 1,2\nseed = 2\n";
    }
    ~Workspace() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("usage errors exit with 2") {
    const Run none = cli({});
    CHECK(none.code == 2);
    const Run unknown = cli({"benchmark", "--bogus"});
    CHECK(unknown.code == 2);
    CHECK(unknown.err.find("Usage") != std::string::npos);
    CHECK(cli({"frobnicate"}).code == 2);
    CHECK(cli({"export", "--report", "r.json"}).code == 2); // --what missing
}

TEST_CASE("help exits cleanly") {
    const Run r = cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("pipeline") != std::string::npos);
}

TEST_CASE("pipeline and export") {
    const Workspace ws;
    const Run r = cli({"pipeline", "--config", ws / "run.cfg", "--out", ws / "report.json"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("PLSR") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(ws / "report.json"));
    CHECK(report["schema"] == 1);
    CHECK(report["methods"].size() == 2);

    const Run e = cli({"export", "--report", ws / "report.json", "--what", "loo_curve"});
    CHECK(e.code == 0);
    CHECK(e.out.rfind("order,n,loo\n", 0) == 0);
    CHECK(cli({"export", "--report", ws / "report.json", "--what", "nope"}).code == 2);

    // Same seed, same report (timing aside).
    CHECK(cli({"pipeline", "--config", ws / "run.cfg", "--out", ws / "again.json"}).code == 0);
    auto a = nlohmann::json::parse(slurp(ws / "report.json"));
    auto b = nlohmann::json::parse(slurp(ws / "again.json"));
    a.erase("timing");
    b.erase("timing");
    CHECK(a == b);
}

TEST_CASE("config errors exit with 2, runtime errors with 1") {
    const Workspace ws;
    std::ofstream(ws / "bad.cfg") << "data = data.csv\nunknown_key = 3\n";
    const Run bad = cli({"pipeline", "--config", ws / "bad.cfg"});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown_key") != std::string::npos);
    CHECK(cli({"pipeline", "--config", ws / "missing.cfg"}).code == 2);
    std::ofstream(ws / "garbage.csv") << "target,1,2\n1,2\n";
    CHECK(cli({"select", "--data", ws / "garbage.csv"}).code == 1);
}

TEST_CASE("compress, select, train, predict, evaluate") {
    const Workspace ws;
    const Run c = cli({"compress", "--data", ws / "data.csv", "--strategy", "coarse_to_fine", "--out",
                       ws / "coef.csv", "--projection", ws / "proj.csv", "--loo-curve", ws / "loo.csv"});
    REQUIRE_MESSAGE(c.code == 0, c.err);
    CHECK(slurp(ws / "coef.csv").rfind("target,", 0) == 0);
    CHECK(slurp(ws / "proj.csv").rfind("wavelength,R0,", 0) == 0);
    CHECK(slurp(ws / "loo.csv").rfind("order,n,loo\n", 0) == 0);

    const Run fixed = cli({"compress", "--data", ws / "data.csv", "--n", "12", "--order", "3"});
    CHECK(fixed.code == 0);
    CHECK(fixed.out.substr(0, fixed.out.find('\n')).size() > 12);

    const Run s = cli({"select", "--data", ws / "coef.csv", "--max-size", "3", "--out", ws / "trace.csv"});
    REQUIRE_MESSAGE(s.code == 0, s.err);
    CHECK(slurp(ws / "trace.csv").rfind("step,phase,candidate,subset,mi\n", 0) == 0);
    CHECK(s.out.rfind("selected", 0) == 0);

    const Run t = cli({"train", "--data", ws / "data.csv", "--model", "plsr", "--out", ws / "m.json"});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    const Run p = cli({"predict", "--model", ws / "m.json", "--data", ws / "spectra.csv", "--out", ws / "pred.csv"});
    REQUIRE_MESSAGE(p.code == 0, p.err);
    CHECK(slurp(ws / "pred.csv").rfind("prediction\n", 0) == 0);

    const Run rb = cli({"train", "--data", ws / "data.csv", "--model", "rbfn", "--columns", "10,50",
                        "--neurons", "2,3", "--scales", "1,2", "--out", ws / "r.json"});
    REQUIRE_MESSAGE(rb.code == 0, rb.err);
    CHECK(cli({"predict", "--model", ws / "r.json", "--data", ws / "spectra.csv"}).code == 0);
    CHECK(cli({"train", "--data", ws / "data.csv", "--model", "forest"}).code == 2);

    // Predicting from coefficients with a model trained on 100 wavelengths.
    const Run mismatch = cli({"predict", "--model", ws / "m.json", "--data", ws / "coef.csv", "--layout",
                              "target_first_column"});
    CHECK(mismatch.code == 1);
    CHECK(mismatch.err.find("dimension") != std::string::npos);

    std::ofstream(ws / "perfect.csv") << "y_true,y_pred\n1,1\n2,2\n4,4\n";
    const Run ev = cli({"evaluate", "--predictions", ws / "perfect.csv"});
    CHECK(ev.code == 0);
    CHECK(ev.out == "NMSE 0\n");
    std::ofstream(ws / "off.csv") << "y_true,y_pred\n1,2\n3,2\n";
    CHECK(cli({"evaluate", "--predictions", ws / "off.csv"}).out == "NMSE 1\n");
}

TEST_CASE("benchmark subcommand") {
    const Run b = cli({"benchmark", "--sizes", "120x20x30", "--steps", "2"});
    REQUIRE_MESSAGE(b.code == 0, b.err);
    CHECK(b.out.rfind("n_wavelengths,n_functions,n_spectra,", 0) == 0);
    CHECK(cli({"benchmark", "--sizes", "12by4"}).code == 2);
}
