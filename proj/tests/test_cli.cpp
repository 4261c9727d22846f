#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scenefuse/io.hpp"

using namespace scenefuse;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = SCENEFUSE_CLI_PATH;

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(rc);
}

int run_to(const std::string& args, const fs::path& stdout_file) {
    const int rc =
        std::system((cli + " " + args + " >" + stdout_file.string() + " 2>/dev/null").c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct Workspace {
    fs::path dir;

    Workspace() : dir(fs::temp_directory_path() / "scenefuse_cli_test") {
        fs::remove_all(dir);
        fs::create_directories(dir);
        REQUIRE(run("synth --seed 3 --difficulty easy --out-dir " + (dir / "scene").string()) ==
                0);
    }

    fs::path scene(const std::string& name) const { return dir / "scene" / name; }
    std::string scene_args() const {
        return " --mask " + scene("mask.png").string() + " --camera " +
               scene("camera.json").string();
    }
};

}  // namespace

TEST_CASE("pipeline subcommands chain with exit code 0") {
    const Workspace ws;

    const fs::path count_file = ws.dir / "count.txt";
    REQUIRE(run_to("backproject --image " + ws.scene("image.png").string() + " --depth " +
                       ws.scene("depth.png").string() + ws.scene_args() + " --out " +
                       (ws.dir / "bp.ply").string(),
                   count_file) == 0);
    const PointCloud bp = read_pointcloud(ws.dir / "bp.ply");
    CHECK(std::stoul(slurp(count_file)) == bp.size());
    CHECK(bp.size() < std::size_t(192) * 160);  // the dilated tool region is carved out
    CHECK(bp.size() > 10000);

    REQUIRE(run("opjpo --tissue " + ws.scene("tissue.ply").string() + " --tool " +
                ws.scene("tool.obj").string() + ws.scene_args() + " --out-placement " +
                (ws.dir / "placement.json").string() + " --out-scene " +
                (ws.dir / "composed.ply").string()) == 0);
    const json placement = json::parse(slurp(ws.dir / "placement.json"));
    CHECK(placement.at("schema_version") == 1);
    REQUIRE(placement.at("tools").size() == 1);
    const json& tool = placement.at("tools")[0];
    CHECK(tool.at("id") == 1);
    CHECK(tool.at("sigma").get<double>() > 0.0);
    CHECK(tool.at("iou").get<double>() > 0.5);
    CHECK(tool.at("offset").size() == 3);
    CHECK(tool.contains("iterations"));
    CHECK(tool.contains("candidate_evaluations"));

    const PlyData composed = read_ply(ws.dir / "composed.ply");
    CHECK(composed.cloud.size() > std::size_t(192) * 160);  // tissue plus the placed tool
    CHECK(composed.labels.size() == composed.cloud.size());

    REQUIRE(run("render --scene " + (ws.dir / "composed.ply").string() + " --camera " +
                ws.scene("camera.json").string() + " --out-color " +
                (ws.dir / "color.png").string() + " --out-depth " +
                (ws.dir / "rdepth.png").string()) == 0);
    const ImageRGB color = read_image(ws.dir / "color.png");
    CHECK(color.width == 192);
    CHECK(color.height == 160);

    REQUIRE(run("metrics --rendered " + (ws.dir / "color.png").string() + " --reference " +
                ws.scene("image.png").string() + " --mask " + ws.scene("mask.png").string() +
                " --report " + (ws.dir / "report.json").string() + " --placement " +
                (ws.dir / "placement.json").string()) == 0);
    const json report = json::parse(slurp(ws.dir / "report.json"));
    REQUIRE(report.at("regions").size() == 2);
    CHECK(report.at("regions")[0].at("label") == "tissue");
    CHECK(report.at("regions")[0].at("psnr").get<double>() > 10.0);
    CHECK(report.at("regions")[1].at("label") == "1");
    CHECK(report.at("regions")[1].at("iou").get<double>() > 0.5);
}

TEST_CASE("metrics reports psnr inf for identical images") {
    const Workspace ws;
    REQUIRE(run("metrics --rendered " + ws.scene("image.png").string() + " --reference " +
                ws.scene("image.png").string() + " --mask " + ws.scene("mask.png").string() +
                " --report " + (ws.dir / "self.json").string()) == 0);
    const json report = json::parse(slurp(ws.dir / "self.json"));
    for (const auto& region : report.at("regions")) {
        CHECK(region.at("psnr") == "inf");
        CHECK(region.at("ssim").get<double>() == 1.0);
    }
}

TEST_CASE("usage and input errors exit with code 2") {
    const Workspace ws;
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("--help") == 0);
    CHECK(run("backproject --image a.png --depth b.png --mask c.png --out d.ply") == 2);
    CHECK(run("synth --seed 1 --difficulty medium --out-dir " + (ws.dir / "x").string()) == 2);
    CHECK(run("render --scene missing.ply --camera " + ws.scene("camera.json").string() +
              " --out-color a.png --out-depth b.png") == 2);
    // A depth PNG handed in as the image: wrong PNG format.
    CHECK(run("backproject --image " + ws.scene("depth.png").string() + " --depth " +
              ws.scene("depth.png").string() + ws.scene_args() + " --out " +
              (ws.dir / "x.ply").string()) == 2);
    // Even dilation kernel.
    CHECK(run("backproject --image " + ws.scene("image.png").string() + " --depth " +
              ws.scene("depth.png").string() + ws.scene_args() + " --dilate 4 --out " +
              (ws.dir / "x.ply").string()) == 2);
}

TEST_CASE("metrics rejects mismatched dimensions with exit code 2") {
    const Workspace ws;
    write_image(ws.dir / "small.png", ImageRGB(8, 8));
    CHECK(run("metrics --rendered " + (ws.dir / "small.png").string() + " --reference " +
              ws.scene("image.png").string() + " --mask " + ws.scene("mask.png").string() +
              " --report " + (ws.dir / "r.json").string()) == 2);
}

TEST_CASE("opjpo isolates degenerate tools and exits 1 when none succeed") {
    const Workspace ws;
    PointCloud point;
    point.positions = {{0.0, 0.0, 1.0}};
    write_pointcloud(ws.dir / "point.ply", point);
    CHECK(run("opjpo --tissue " + ws.scene("tissue.ply").string() + " --tool " +
              (ws.dir / "point.ply").string() + ws.scene_args() + " --out-placement " +
              (ws.dir / "fail.json").string()) == 1);
    const json placement = json::parse(slurp(ws.dir / "fail.json"));
    REQUIRE(placement.at("tools").size() == 1);
    CHECK(placement.at("tools")[0].contains("error"));
    CHECK_FALSE(placement.at("tools")[0].contains("iou"));
}

TEST_CASE("opjpo honors the config file") {
    const Workspace ws;
    atomic_write_bytes(ws.dir / "config.json",
                       R"({"schema_version":1,"search":{"max_iterations":0}})");
    REQUIRE(run("opjpo --tissue " + ws.scene("tissue.ply").string() + " --tool " +
                ws.scene("tool.obj").string() + ws.scene_args() + " --config " +
                (ws.dir / "config.json").string() + " --out-placement " +
                (ws.dir / "frozen.json").string()) == 0);
    const json placement = json::parse(slurp(ws.dir / "frozen.json"));
    CHECK(placement.at("tools")[0].at("iterations") == 0);
    CHECK(placement.at("tools")[0].at("candidate_evaluations") == 0);

    atomic_write_bytes(ws.dir / "bad.json", R"({"schema_version":9})");
    CHECK(run("opjpo --tissue " + ws.scene("tissue.ply").string() + " --tool " +
              ws.scene("tool.obj").string() + ws.scene_args() + " --config " +
              (ws.dir / "bad.json").string() + " --out-placement " +
              (ws.dir / "x.json").string()) == 2);
}

TEST_CASE("verbose mode logs to stderr only when asked") {
    const Workspace ws;
    const fs::path log = ws.dir / "stderr.txt";
    const std::string cmd = cli + " synth --seed 9 --difficulty easy --out-dir " +
                            (ws.dir / "v").string() + " 2>" + log.string() + " >/dev/null";
    REQUIRE(WEXITSTATUS(std::system(("SCENEFUSE_VERBOSE=1 " + cmd).c_str())) == 0);
    CHECK(slurp(log).find("[scenefuse]") != std::string::npos);
    REQUIRE(WEXITSTATUS(std::system(("SCENEFUSE_VERBOSE=0 " + cmd).c_str())) == 0);
    CHECK(slurp(log).empty());
}
