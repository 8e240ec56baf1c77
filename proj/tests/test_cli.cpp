#include "doctest.h"

#include "json.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("ness_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

Result run(const std::string& args) {
    static int counter = 0;
    const auto out = workdir() / ("stdout" + std::to_string(counter));
    const auto err = workdir() / ("stderr" + std::to_string(counter++));
    const std::string cmd = "cd '" + workdir().string() + "' && '" NESS_CLI_PATH "' " + args +
                            " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::size_t lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

const std::string kQuick = " --iterations 300 --early-iterations 100";

void ensure_data() {
    static bool done = false;
    if (!done) {
        REQUIRE(run("generate curve --n 60 --dim 3 --noise 0.1 --out small.csv").code == 0);
        done = true;
    }
}

} // namespace

TEST_CASE("generate") {
    auto r = run("generate curve --n 2000 --out curve.csv");
    CHECK(r.code == 0);
    CHECK(lines(slurp(workdir() / "curve.csv")) == 2001);
    CHECK(lines(slurp(workdir() / "curve.labels.csv")) == 2001);

    r = run("generate discrete-circle --n 4");
    CHECK(r.code == 0);
    CHECK(lines(r.out) == 5);
    CHECK(r.out.rfind("x1,x2\n", 0) == 0);

    CHECK(run("generate bogus --n 4").code == 2);
    CHECK(run("generate circle").code == 2);
    CHECK(run("generate circle --n 0").code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("exit codes for bad inputs") {
    ensure_data();
    auto r = run("assess --data missing.csv");
    CHECK(r.code == 3);
    CHECK_FALSE(r.err.empty());

    std::ofstream(workdir() / "ragged.csv") << "a,b\n1,2\n3\n";
    r = run("assess --data ragged.csv");
    CHECK(r.code == 3);
    CHECK(r.err.find("line 3") != std::string::npos);

    CHECK(run("assess --data small.csv --gcp 500").code == 2);
    CHECK(run("assess --data small.csv --lambda 0").code == 2);
    CHECK(run("--threads 0 assess --data small.csv").code == 2);

    // A constant embedding has constant distances: correlation is undefined.
    std::ofstream flat(workdir() / "flat.csv");
    for (int i = 0; i < 60; ++i) flat << "1,1\n";
    flat.close();
    r = run("metrics --data small.csv --embedding flat.csv");
    CHECK(r.code == 4);
}

TEST_CASE("assess") {
    ensure_data();
    const auto a = run("assess --data small.csv --gcp 10" + kQuick + " --local-out local.csv");
    REQUIRE(a.code == 0);
    const auto j = nlohmann::json::parse(a.out);
    CHECK(j["N"] == 30);
    CHECK(j["k"] == 50);
    CHECK(j["lambda"] == 0.75);
    CHECK(j["local"].size() == 60);
    CHECK(lines(slurp(workdir() / "local.csv")) == 61);

    const auto b = run("--threads 3 assess --data small.csv --gcp 10" + kQuick);
    CHECK(b.out == a.out);

    REQUIRE(run("embed --data small.csv --gcp 10" + kQuick + " --out e1.csv").code == 0);
    const auto same =
        run("assess --data small.csv --embeddings e1.csv,e1.csv,e1.csv --k 5");
    REQUIRE(same.code == 0);
    CHECK(nlohmann::json::parse(same.out)["global"] == 1.0);

    const auto pick = run("assess --data small.csv --gcp 10 -N 4 --k 5" + kQuick +
                          " --pick-embedding best.csv --rareness-out rare.json");
    CHECK(pick.code == 0);
    CHECK(lines(slurp(workdir() / "best.csv")) == 61);
    CHECK(nlohmann::json::parse(slurp(workdir() / "rare.json")).is_object());
}

TEST_CASE("gcp scan with chart") {
    ensure_data();
    const auto r = run("gcp-scan --data small.csv --gcps 5,10,15 --rule top5pct -N 3 --k 5" +
                       kQuick + " --svg scan.svg");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j.dump().find("recommended") != std::string::npos);
    const auto svg = slurp(workdir() / "scan.svg");
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("recommended") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    const auto csv = run("--format csv gcp-scan --data small.csv --gcps 5,10,15 -N 3 --k 5" + kQuick);
    REQUIRE(csv.code == 0);
    CHECK(csv.out.rfind("gcp,global,recommended\n", 0) == 0);
    CHECK(run("gcp-scan --data small.csv --gcps 10,5 -N 3 --k 5" + kQuick).code == 2);
}

TEST_CASE("metrics with and without labels") {
    ensure_data();
    REQUIRE(run("embed --data small.csv --gcp 10" + kQuick + " --out e2.csv").code == 0);
    auto with = run("metrics --data small.csv --embedding e2.csv --labels small.labels.csv");
    REQUIRE(with.code == 0);
    auto j = nlohmann::json::parse(with.out);
    for (const char* key :
         {"correlation", "concordance", "silhouette", "neighbor_purity", "local_simpson"}) {
        CHECK(j.contains(key));
    }
    auto without = run("metrics --data small.csv --embedding e2.csv");
    REQUIRE(without.code == 0);
    j = nlohmann::json::parse(without.out);
    CHECK(j.contains("correlation"));
    CHECK(j.contains("concordance"));
    CHECK_FALSE(j.contains("silhouette"));
    CHECK_FALSE(j.contains("neighbor_purity"));
    CHECK_FALSE(j.contains("local_simpson"));
}

TEST_CASE("density, association and removal") {
    ensure_data();
    REQUIRE(run("assess --data small.csv --gcp 10 -N 5 --k 5" + kQuick +
                " --local-out s.csv --out s.json")
                .code == 0);
    const auto d = run("density --data small.csv --local s.csv --percentiles 50,100");
    REQUIRE(d.code == 0);
    CHECK(d.out.rfind("percentile,count,mean_normalized_distance\n50,", 0) == 0);
    CHECK(lines(d.out) == 3);

    const auto a = run("associate --features small.csv --local s.csv");
    REQUIRE(a.code == 0);
    CHECK(a.out.rfind("feature,name,applicable,rho,p,p_adjusted,direction\n1,x1,", 0) == 0);
    CHECK(lines(a.out) == 4);

    const auto r = run("removal --data small.csv --gcp 10 -N 3 --k 5 --concordance-k 10" + kQuick +
                       " --fractions 0,0.2");
    REQUIRE(r.code == 0);
    CHECK(lines(r.out) == 3);
    CHECK(run("removal --data small.csv --gcp 10 -N 3 --k 5 --fractions 0.9" + kQuick).code == 2);
}

TEST_CASE("theory summary rows") {
    const auto r = run("theory --ns 30,40,50 --k 3 --seeds 2" + kQuick + " --rows-out rows.csv");
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("n,k,median_L,median_S,median_components\n", 0) == 0);
    CHECK(lines(r.out) == 4);
    CHECK(lines(slurp(workdir() / "rows.csv")) == 7);
    const auto threaded = run("--threads 4 theory --ns 30,40,50 --k 3 --seeds 2" + kQuick);
    CHECK(threaded.out == r.out);
    CHECK(run("theory --ns 30 --k 3 --k-fraction 0.1").code == 2);
    const auto j = run("--format json theory --ns 30 --k 3 --seeds 1" + kQuick);
    REQUIRE(j.code == 0);
    CHECK(nlohmann::json::parse(j.out)["summary"].size() == 1);
}
