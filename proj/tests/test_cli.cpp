#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

fs::path scratch() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("cograte_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result cli(const std::string& args) {
    const fs::path out = scratch() / "stdout.txt";
    const std::string cmd = std::string("\"") + COGRATE_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string write_config(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return "\"" + p.string() + "\"";
}

const char* kBase =
    "system.T = 5e-3\nsystem.b = 5000\nsystem.tau_s = 0.05T\nsystem.tau_f = 0.05T\n"
    "power.P0 = 1e-10\npower.N0 = 1e-11\nchannel.sigma_p_pd = 0.005\nchannel.sigma_p_s = 1\n"
    "channel.sigma_s_pd = 1\nchannel.sigma_s_sd = 0.1\nenergy.E = 5e-6\nsensing.target_pfa = 0.1\n";

}  // namespace

TEST_CASE("usage errors") {
    CHECK(cli("--help").code == 0);
    CHECK(cli("optimize --bogus").code == 2);
    const std::string no_w = write_config("no_w.cfg", kBase);
    const Result r = cli("evaluate " + no_w);
    CHECK(r.code == 2);
    CHECK(r.out.find("system.W") != std::string::npos);
    CHECK(cli("evaluate --preset nope").code == 2);
    CHECK(cli("optimize --preset fig3 --kernel neon").code == 2);
}

TEST_CASE("invariant violations") {
    const std::string cfg = write_config("bad_tau.cfg", std::string(kBase) + "system.W = 10e6\nsystem.tau_s = 1.2T\n");
    CHECK(cli("evaluate " + cfg).code == 3);
}

TEST_CASE("evaluate") {
    const Result r = cli("evaluate --preset fig3 --lambda 0.2");
    CHECK(r.code == 0);
    CHECK(r.out.find("mu_nc = 0.2201") != std::string::npos);
}

TEST_CASE("optimize output is reproducible") {
    const std::string args = "optimize --preset fig1 --grid 30x30 --lambda 0:0.1:0.9 --set sensing.target_pfa=0.1";
    const Result a = cli(args + " --threads 1");
    const Result b = cli(args + " --threads 3");
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("lambda,protocol,t_p,w_p,mu,delay,rate,energy,phi,feasible\n", 0) == 0);
    const fs::path file = scratch() / "opt.csv";
    REQUIRE(cli(args + " --out \"" + file.string() + "\"").code == 0);
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == a.out);
}

TEST_CASE("environment override") {
    const Result plain = cli("optimize --preset fig3 --protocol P1 --grid 10x10 --lambda 0.3");
    const Result over = cli("optimize --preset fig3 --protocol P1 --grid 10x10 --lambda 0.3 --set energy.E=1e-6");
    CHECK(plain.code == 0);
    CHECK(over.code == 0);
    CHECK(plain.out != over.out);
    setenv("COGRATE_ENERGY_E", "1e-6", 1);
    const Result via_env = cli("optimize --preset fig3 --protocol P1 --grid 10x10 --lambda 0.3");
    unsetenv("COGRATE_ENERGY_E");
    CHECK(via_env.out == over.out);
}

TEST_CASE("validate") {
    const std::string args = "validate --preset fig3 --protocol P1 --slots 200000 --seed 7";
    CHECK(cli(args + " --lambda 0").code == 0);
    CHECK(cli(args + " --lambda 0.2").code == 0);
    CHECK(cli(args + " --lambda 0.2 --inject-mu-bias 0.05").code == 4);
    CHECK(cli("validate --preset fig3 --protocol NC --lambda 0.5 --slots 50000").code == 3);
    CHECK(cli("validate --preset fig3 --protocol NC --lambda 0.5 --slots 50000 --allow-unstable").code == 0);
}

TEST_CASE("presets") {
    const Result r = cli("presets");
    CHECK(r.code == 0);
    CHECK(r.out.find("fig5") != std::string::npos);
    CHECK(cli("presets fig2").out.find("system.tau_f = 0.05T,0.2T") != std::string::npos);
}
