#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "evcosim/kvfile.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = EVCOSIM_CLI_PATH;
const std::string kData = EVCOSIM_DATA_DIR;
const std::string kScenarios = kData + "/scenarios";

struct CmdResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args) {
    fs::create_directories("cli_test");
    const std::string cmd = kCli + " " + args + " >cli_test/stdout.txt 2>cli_test/stderr.txt";
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp("cli_test/stdout.txt");
    r.err = slurp("cli_test/stderr.txt");
    return r;
}

std::string fresh_dir(const std::string& name) {
    const std::string dir = "cli_test/" + name;
    fs::remove_all(dir);
    return dir;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) out.push_back(line);
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

} // namespace

TEST_CASE("validate accepts the shipped data set") {
    const auto r = run_cli("validate " + kData + "/cases/glover7.case " + kData +
                           "/profiles/nsw_daily.profile " + kScenarios + "/baseline.scn");
    CHECK(r.exit_code == 0);
    CHECK(r.err.empty());
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0].rfind("ok case ", 0) == 0);
    CHECK(lines[1].rfind("ok profile ", 0) == 0);
    CHECK(lines[2].rfind("ok scenario ", 0) == 0);
}

TEST_CASE("validate rejects broken input with a single diagnostic line") {
    fs::create_directories("cli_test");
    // Two slack buses violate the case invariants.
    std::string twoslack = slurp(kData + "/cases/twobus.case");
    const auto pos = twoslack.find("kind = pq");
    REQUIRE(pos != std::string::npos);
    twoslack.replace(pos, 9, "kind = slack");
    write_file("cli_test/twoslack.case", twoslack);

    auto r = run_cli("validate cli_test/twoslack.case");
    CHECK(r.exit_code == 3);
    CHECK(r.out.empty());
    const auto err_lines = lines_of(r.err);
    REQUIRE(err_lines.size() == 1);
    CHECK(err_lines[0].rfind("error: ", 0) == 0);

    // A failing file does not stop the remaining ones from being checked.
    r = run_cli("validate cli_test/twoslack.case " + kData + "/cases/twobus.case");
    CHECK(r.exit_code == 3);
    CHECK(lines_of(r.out).size() == 1);

    r = run_cli("validate cli_test/missing.case");
    CHECK(r.exit_code == 3);

    write_file("cli_test/odd.kv", "[mystery]\nkey = 1\n");
    r = run_cli("validate cli_test/odd.kv");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("mystery") != std::string::npos);
}

TEST_CASE("run prints the summary and writes byte-identical outputs per seed") {
    const std::string d1 = fresh_dir("run1"), d2 = fresh_dir("run2");
    const auto r1 = run_cli("run --scenario " + kScenarios + "/baseline.scn --out " + d1);
    REQUIRE(r1.exit_code == 0);
    CHECK(r1.out.rfind("scenario baseline\n", 0) == 0);
    CHECK(r1.out.find("[results]") != std::string::npos);
    CHECK(r1.err.find("outputs: " + d1) != std::string::npos);
    CHECK(r1.out == slurp(d1 + "/summary.txt"));

    const auto r2 = run_cli("run --scenario " + kScenarios + "/baseline.scn --out " + d2);
    REQUIRE(r2.exit_code == 0);
    for (const char* f :
         {"audit.csv", "trace.csv", "events.csv", "impact.csv", "run.kv", "summary.txt"})
        CHECK(slurp(d1 + "/" + std::string(f)) == slurp(d2 + "/" + std::string(f)));

    // A different seed changes the run but keeps the summary shape.
    const std::string d3 = fresh_dir("run3");
    const auto r3 =
        run_cli("run --scenario " + kScenarios + "/baseline.scn --seed 43 --out " + d3);
    REQUIRE(r3.exit_code == 0);
    CHECK(slurp(d3 + "/run.kv") != slurp(d1 + "/run.kv"));
    CHECK(r3.out.find("sim.seed = 43") != std::string::npos);
}

TEST_CASE("run maps failures onto the documented exit codes") {
    auto r = run_cli("run --scenario cli_test/nope.scn");
    CHECK(r.exit_code == 3);
    CHECK(r.err.rfind("error: ", 0) == 0);
    CHECK(lines_of(r.err).size() == 1);

    r = run_cli("run --scenario " + kScenarios + "/baseline.scn --set not-a-path");
    CHECK(r.exit_code == 2);

    r = run_cli("run --scenario " + kScenarios + "/baseline.scn --set sim.hour=99 --out " +
                fresh_dir("bad_hour"));
    CHECK(r.exit_code == 3);

    r = run_cli("frobnicate");
    CHECK(r.exit_code == 2);

    r = run_cli("run");
    CHECK(r.exit_code == 2);

    // Valid spec whose transient blows up: a 400 MW step per bus is past the
    // integrator's stability guard, which is a runtime failure, not a
    // validation one.
    r = run_cli("run --scenario " + kScenarios +
                "/oscillatory_surge.scn --set attack.initial_mw_per_bus=400 --out " +
                fresh_dir("blowup"));
    CHECK(r.exit_code == 1);
    CHECK(r.err.rfind("error: ", 0) == 0);
}

TEST_CASE("run leaves its input files untouched") {
    const std::string scn = kScenarios + "/hijack_demo.scn";
    const std::string case_path = kData + "/cases/glover7.case";
    const std::string before_scn = slurp(scn), before_case = slurp(case_path);
    const auto r = run_cli("run --scenario " + scn + " --out " + fresh_dir("nomut"));
    REQUIRE(r.exit_code == 0);
    CHECK(slurp(scn) == before_scn);
    CHECK(slurp(case_path) == before_case);
}

TEST_CASE("sweep runs the cartesian product in point order") {
    const std::string root = fresh_dir("sw");
    const auto r = run_cli("sweep --scenario " + kScenarios + "/hijack_demo.scn --out " + root +
                           " --set policy.verify_ownership=false,true --set sim.seed=7,8,9" +
                           " --jobs 3");
    REQUIRE(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 6);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(lines[i].rfind(root + "/p00" + std::to_string(i) + "_", 0) == 0);
        CHECK(lines[i].find(" ok config_hash=") != std::string::npos);
    }
    // Axis order: ownership is the slow axis, seed the fast one.
    CHECK(lines[0].find("verify_ownership=false_sim.seed=7") != std::string::npos);
    CHECK(lines[5].find("verify_ownership=true_sim.seed=9") != std::string::npos);

    int vulnerable_hits = 0, guarded_hits = 0;
    for (const auto& line : lines) {
        const std::string dir = line.substr(0, line.find(' '));
        const std::string summary = slurp(dir + "/summary.txt");
        REQUIRE_FALSE(summary.empty());
        const bool hit = summary.find("success:true") != std::string::npos;
        if (line.find("verify_ownership=false") != std::string::npos)
            vulnerable_hits += hit;
        else
            guarded_hits += hit;
    }
    CHECK(vulnerable_hits == 3);
    CHECK(guarded_hits == 0);
}

TEST_CASE("sweep failure semantics") {
    // Broken base scenario: nothing runs.
    auto r = run_cli("sweep --scenario cli_test/nope.scn --set sim.seed=1,2");
    CHECK(r.exit_code == 3);

    // One poisoned point: the rest still complete, exit reports failure.
    const std::string root = fresh_dir("sw_bad");
    r = run_cli("sweep --scenario " + kScenarios + "/baseline.scn --out " + root +
                " --set sim.hour=22,24");
    CHECK(r.exit_code == 1);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0].find(" ok config_hash=") != std::string::npos);
    CHECK(lines[1].find(" error: ") != std::string::npos);
}

TEST_CASE("report rebuilds the summary from the written files alone") {
    const std::string dir = fresh_dir("rep");
    REQUIRE(run_cli("run --scenario " + kScenarios + "/mass_charge.scn --out " + dir).exit_code ==
            0);
    const std::string original = slurp(dir + "/summary.txt");
    fs::remove(dir + "/summary.txt");

    const auto r = run_cli("report --out " + dir);
    CHECK(r.exit_code == 0);
    CHECK(r.out == original);
    CHECK(slurp(dir + "/summary.txt") == original);

    const auto missing = run_cli("report --out cli_test/never_ran");
    CHECK(missing.exit_code == 3);
    CHECK(missing.err.rfind("error: ", 0) == 0);
}
