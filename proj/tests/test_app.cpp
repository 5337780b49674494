#include <doctest.h>

#include "adacont/app.hpp"
#include "adacont/snapshot.hpp"
#include "adacont/waleffe.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace adacont;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "adacont_app_tests" / name;
    fs::remove_all(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

json toy_config(const fs::path& out) {
    return json{{"problem", {{"name", "toy"}, {"kind", "sqrt"}, {"lambda", 1.0}}},
                {"seed", {{"source", "builtin"}, {"state", {1.0}}}},
                {"continuation", {{"newton_tol", 1e-12}, {"krylov_tol", 1e-10}, {"delta_lambda_max", 0.5}}},
                {"stop", {{"lambda_max", 4.0}, {"max_points", 200}}},
                {"output", {{"directory", out.string()}}}};
}

}  // namespace

TEST_SUITE("app") {
    TEST_CASE("unknown keys are rejected at every level") {
        const auto out = fresh_dir("keys");
        CHECK_NOTHROW(parse_run_config(toy_config(out)));
        for (const char* where : {"", "problem", "seed", "continuation", "stop", "output"}) {
            json j = toy_config(out);
            (std::string(where).empty() ? j : j[where])["bogus"] = 1;
            CHECK_THROWS_AS(parse_run_config(j), ConfigError);
        }
        json j = toy_config(out);
        j["problem"]["name"] = "nope";
        CHECK_THROWS_AS(parse_run_config(j), ConfigError);
        j = toy_config(out);
        j["continuation"]["newton_max"] = "ten";
        CHECK_THROWS_AS(parse_run_config(j), ConfigError);
        j = toy_config(out);
        j["problem"]["nx"] = 10;  // a ddc2d key on the toy problem
        CHECK_THROWS_AS(parse_run_config(j), ConfigError);
        j = toy_config(out);
        j["preconditioner"] = {{"delta_t", -1.0}};
        CHECK_THROWS_AS(make_run(parse_run_config(j)), ConfigError);
    }

    TEST_CASE("overrides address nested keys and parse JSON values") {
        json j = toy_config(fresh_dir("set"));
        apply_override(j, "continuation.newton_max=7");
        apply_override(j, "stop.lambda_max=2.5");
        apply_override(j, "problem.kind=circle");
        apply_override(j, "sweep.delta_t=[1, 100]");
        CHECK(j["continuation"]["newton_max"] == 7);
        CHECK(j["stop"]["lambda_max"] == 2.5);
        CHECK(j["problem"]["kind"] == "circle");
        CHECK(j["sweep"]["delta_t"].size() == 2);
        CHECK_THROWS_AS(apply_override(j, "no_equals"), ConfigError);
        CHECK_THROWS_AS(apply_override(j, "stop.lambda_max.deeper=1"), ConfigError);
        const auto cfg = parse_run_config(j);
        CHECK(cfg.continuation.newton_max == 7);
        CHECK(cfg.stop.lambda_max == 2.5);
    }

    TEST_CASE("toy run ends on lambda 4 with norm 2") {
        const auto out = fresh_dir("toy");
        const RunSummary s = run(parse_run_config(toy_config(out)));
        CHECK(s.status == TraceStatus::Completed);
        const auto rows = read_csv(out / "branch.csv");
        REQUIRE(rows.size() >= 3);
        CHECK(rows[0] == std::vector<std::string>{"index", "lambda", "norm", "newton_iters", "krylov_iters_total",
                                                  "delta_lambda", "mode", "status"});
        CHECK(rows.size() == s.points + 1);
        CHECK(std::stod(rows.back()[1]) == 4.0);
        CHECK(std::abs(std::stod(rows.back()[2]) - 2.0) < 1e-8);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(std::stoul(rows[i][0]) == i - 1);
            const double lam = std::stod(rows[i][1]), norm = std::stod(rows[i][2]);
            CHECK(std::abs(norm - std::sqrt(lam)) < 1e-8);
        }
        CHECK(rows[1][7] == "seed");
        CHECK(rows[2][7] == "converged");
        CHECK(fs::exists(out / "final.snap"));
        CHECK(std::abs(read_snapshot(out / "final.snap").state[0] - 2.0) < 1e-8);
    }

    TEST_CASE("zero-step stop rule writes exactly the seed row") {
        const auto out = fresh_dir("zero");
        json j = toy_config(out);
        j["stop"]["max_points"] = 0;
        run(parse_run_config(j));
        const auto rows = read_csv(out / "branch.csv");
        REQUIRE(rows.size() == 2);
        CHECK(std::stod(rows[1][1]) == 1.0);
    }

    TEST_CASE("snapshot stride and snapshot seeds") {
        const auto out = fresh_dir("stride");
        json j = toy_config(out);
        j["output"]["snapshot_stride"] = 2;
        j["stop"]["max_points"] = 5;
        const auto s = run(parse_run_config(j));
        REQUIRE(s.points == 6);
        CHECK(fs::exists(out / "snapshots" / "point_00000.snap"));
        CHECK(!fs::exists(out / "snapshots" / "point_00001.snap"));
        CHECK(fs::exists(out / "snapshots" / "point_00004.snap"));

        // Restart from the saved point.
        const auto snap = read_snapshot(out / "snapshots" / "point_00004.snap");
        const auto out2 = fresh_dir("restart");
        json k = toy_config(out2);
        k["problem"]["lambda"] = snap.parameters.at("lambda");
        k["seed"] = {{"source", "snapshot"}, {"path", (out / "snapshots" / "point_00004.snap").string()}};
        k["stop"]["max_points"] = 0;
        run(parse_run_config(k));
        const auto rows = read_csv(out2 / "branch.csv");
        CHECK(std::abs(std::stod(rows[1][2]) - std::sqrt(snap.parameters.at("lambda"))) < 1e-8);

        k["seed"]["path"] = (out / "missing.snap").string();
        CHECK_THROWS(run(parse_run_config(k)));
    }

    TEST_CASE("laminar shear branch keeps N_u = 1") {
        const auto out = fresh_dir("waleffe");
        json j{{"problem", {{"name", "waleffe"}, {"re", 100.0}, {"ny", 16}, {"nz", 16}}},
               {"seed", {{"source", "builtin"}}},
               {"continuation", {{"delta_lambda_init", 10.0}, {"delta_lambda_max", 25.0}}},
               {"stop", {{"lambda_max", 200.0}, {"max_points", 50}}},
               {"output", {{"directory", out.string()}}}};
        const auto s = run(parse_run_config(j));
        CHECK(s.status == TraceStatus::Completed);
        const auto rows = read_csv(out / "branch.csv");
        CHECK(std::stod(rows.back()[1]) == 200.0);
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::abs(std::stod(rows[i][2]) - 1.0) < 1e-8);
    }

    TEST_CASE("sweep writes one row per delta t") {
        const auto out = fresh_dir("sweep");
        json j = toy_config(out);
        j["problem"]["linear"] = -1.0;
        j["stop"] = {{"lambda_max", 3.0}, {"max_points", 20}};
        j["sweep"] = {{"delta_t", {0.1, 1.0, 100.0}}, {"threads", 2}};
        const auto cfg = parse_run_config(j);
        const auto rows = sweep(cfg, cfg.sweep.delta_t);
        REQUIRE(rows.size() == 3);
        const auto csv = read_csv(out / "sweep.csv");
        REQUIRE(csv.size() == 4);
        CHECK(csv[0] == std::vector<std::string>{"delta_t", "status", "points_completed", "eta_mean", "eta_std",
                                                 "eta_min", "eta_max", "eta_total"});
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(rows[i].status == "converged");
            CHECK(std::stod(csv[i + 1][0]) == cfg.sweep.delta_t[i]);
            CHECK(rows[i].eta_min <= rows[i].eta_mean);
            CHECK(rows[i].eta_mean <= rows[i].eta_max);
            CHECK(fs::exists(out / "sweep" / ("entry_" + std::to_string(i)) / "branch.csv"));
        }
    }

    TEST_CASE("sweep tail statistics use the last points only") {
        const std::vector<long> eta{100, 1, 2, 3};
        const auto st = tail_statistics(eta, 3);
        CHECK(st.mean == doctest::Approx(2.0));
        CHECK(st.std == doctest::Approx(std::sqrt(2.0 / 3.0)));
        CHECK(st.min == 1);
        CHECK(st.max == 3);
        CHECK(st.total == 106);
        CHECK(tail_statistics({}, 50).count == 0);
    }

    TEST_CASE("single step with zero increment on a converged seed costs nothing") {
        const auto out = fresh_dir("zero_step");
        json j = toy_config(out);
        j["sweep"] = {{"delta_t", {1.0}}, {"segment", "single_step"}, {"step", 0.0}};
        const auto cfg = parse_run_config(j);
        const auto rows = sweep(cfg, cfg.sweep.delta_t);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].status == "converged");
        CHECK(rows[0].points_completed == 1);
        CHECK(rows[0].eta_total == 0);
    }

    TEST_CASE("convection segment: vanishing steps fail, the Stokes plateau is flat") {
        const auto out = fresh_dir("ddc");
        json j{{"problem", {{"name", "ddc2d"}, {"ra", 2000.0}, {"nx", 24}, {"nz", 24}}},
               {"seed", {{"source", "integrate"}, {"delta_t", 5e-4}, {"steps", 2000}, {"amplitude", 1.0}}},
               {"continuation", {{"delta_lambda_init", 1.0}, {"delta_lambda_max", 1.0}, {"max_consecutive_failures", 3}}},
               {"stop", {{"max_points", 5}}},
               {"output", {{"directory", out.string()}}}};
        const auto cfg = parse_run_config(j);
        const auto rows = sweep(cfg, {1e-8, 1e6, 1e8});
        REQUIRE(rows.size() == 3);
        CHECK(rows[0].status == "failed");
        CHECK(rows[1].status == "converged");
        CHECK(rows[2].status == "converged");
        CHECK(std::abs(rows[1].eta_mean - rows[2].eta_mean) <= 0.1 * rows[2].eta_mean);
    }
}
