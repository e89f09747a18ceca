#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dpafd/cli.hpp"
#include "dpafd/engine.hpp"
#include "graphs.hpp"

using dpafd::testing::data_path;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dpafd");
    std::vector<char*> argv;
    for (auto& a : args) {
        argv.push_back(a.data());
    }
    std::ostringstream out, err;
    const int code = dpafd::cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "dpafd_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("run prints per-cycle faulty counts") {
    auto r = cli({"run", data_path("repair.scn")});
    CHECK(r.code == 0);
    const auto first = r.out.find("Cycle 1 faulty=5");
    const auto second = r.out.find("Cycle 2 faulty=4");
    CHECK(first != std::string::npos);
    CHECK(second != std::string::npos);
    CHECK(first < second);
}

TEST_CASE("run with verdict on a clean network") {
    auto r = cli({"run", data_path("fault_free.scn"), "--verdict"});
    CHECK(r.code == 0);
    CHECK(r.out.find("agreement: true") != std::string::npos);
    CHECK(r.out.find("false") == std::string::npos);
}

TEST_CASE("run writes the trace export") {
    const auto path = scratch("trace.txt");
    auto r = cli({"run", data_path("walkthrough.scn"), "--trace", path.string()});
    CHECK(r.code == 0);
    const std::string text = dpafd::read_file(path);
    const auto expected = dpafd::run_periodic(dpafd::load_scenario(data_path("walkthrough.scn"))).trace.export_text();
    CHECK(text == expected);
}

TEST_CASE("missing topology file") {
    const auto path = scratch("broken.scn");
    std::ofstream(path) << "topology = nowhere.topo\n";
    auto r = cli({"run", path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("nowhere.topo") != std::string::npos);
}

TEST_CASE("livelock exit code") {
    const auto path = scratch("tight.scn");
    std::ofstream(path) << "topology = " << data_path("walkthrough.topo") << "\nevent_budget = 10\n";
    CHECK(cli({"run", path.string()}).code == 3);
}

TEST_CASE("usage errors") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"bogus"}).code == 1);
    CHECK(cli({"sweep", data_path("sweep10.topo")}).code == 1);
}

TEST_CASE("sweep") {
    SUBCASE("ten counts, ten rows") {
        const auto path = scratch("sweep.csv");
        auto r = cli({"sweep", data_path("sweep10.topo"), "--faults", "0,1,2,3,4,5,6,7,8,9", "--trials", "3",
                      "--seed", "5", "--out", path.string()});
        CHECK(r.code == 0);
        std::istringstream csv(dpafd::read_file(path));
        std::string line;
        std::getline(csv, line);
        CHECK(line == "faults,mean_total_messages");
        int rows = 0;
        while (std::getline(csv, line)) {
            ++rows;
        }
        CHECK(rows == 10);
    }
    SUBCASE("the bound is n-1") {
        auto r = cli({"sweep", data_path("sweep10.topo"), "--faults", "10"});
        CHECK(r.code != 0);
        CHECK(r.err.find("n-1") != std::string::npos);
    }
    SUBCASE("identical invocations give identical bytes") {
        auto a = cli({"sweep", data_path("sweep10.topo"), "--faults", "0,4", "--trials", "4", "--seed", "8"});
        auto b = cli({"sweep", data_path("sweep10.topo"), "--faults", "0,4", "--trials", "4", "--seed", "8"});
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
    }
}

TEST_CASE("exchange") {
    SUBCASE("second network hears the first's four faulty nodes") {
        auto r = cli({"exchange", data_path("exchange20.scn"), data_path("exchange30.scn")});
        REQUIRE(r.code == 0);
        const auto from = r.out.find("  from vlan30: ");
        REQUIRE(from != std::string::npos);
        const std::string line = r.out.substr(from, r.out.find('\n', from) - from);
        for (const char* n : {"172.16.30.101", "172.16.30.104", "172.16.30.105", "172.16.30.109"}) {
            CHECK(line.find(n) != std::string::npos);
        }
        CHECK(r.out.find("Network vlan20 gateway=172.16.20.109") != std::string::npos);
    }
    SUBCASE("needs two networks") {
        CHECK(cli({"exchange", data_path("exchange20.scn")}).code != 0);
    }
    SUBCASE("two clean networks") {
        auto r = cli({"exchange", data_path("fault_free.scn"), data_path("election.scn")});
        CHECK(r.code == 0);
        CHECK(r.out.find("own: -") != std::string::npos);
        CHECK(r.out.find("from clean: -") != std::string::npos);
        CHECK(r.out.find("from vlan20: -") != std::string::npos);
    }
}

TEST_CASE("installed binary exit codes and byte-identical output") {
    const std::string bin = DPAFD_CLI_PATH;
    const auto out1 = scratch("out1.txt"), out2 = scratch("out2.txt");
    auto run = [&](const std::string& args, const std::filesystem::path& out) {
        const int status = std::system((bin + " " + args + " > " + out.string() + " 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("run " + data_path("repair.scn") + " --verdict", out1) == 0);
    CHECK(run("run " + data_path("repair.scn") + " --verdict", out2) == 0);
    CHECK(dpafd::read_file(out1) == dpafd::read_file(out2));
    CHECK(run("run /nonexistent.scn", out1) == 1);
}
