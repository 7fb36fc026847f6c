#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "models.hpp"
#include "neuroprobe/cli.hpp"
#include "neuroprobe/error.hpp"
#include "neuroprobe/gwf.hpp"
#include "neuroprobe/image.hpp"
#include "neuroprobe/metrics.hpp"
#include "neuroprobe/rates.hpp"

namespace fs = std::filesystem;
using namespace neuroprobe;
using namespace neuroprobe::testing;
using nlohmann::json;

namespace {

struct Workdir {
    fs::path path;
    Workdir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("neuroprobe-cli-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~Workdir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string text_of(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string blotch() { return fixture("blotch.gwf"); }

}  // namespace

TEST_CASE("profile writes a rate table and a manifest") {
    Workdir w;
    REQUIRE(cli::run({"profile", "--model", blotch(), "--samples", "200", "--seed", "1", "--out", w / "r.grt"}) == 0);
    const RateTable t = read_grt(read_file(w / "r.grt"));
    CHECK(t == estimate_rates(load_gwf_file(blotch()), 200, 1));

    const json m = json::parse(text_of(w / "r.grt.manifest.json"));
    CHECK(m["command"] == "profile");
    CHECK(m["tool"] == cli::kToolVersion);
    CHECK(m["model_digest"] == to_hex(sha256(read_file(blotch()))));
    CHECK(m["sampler"]["name"] == kSamplerName);
    CHECK(m["outputs"][0]["sha256"] == to_hex(sha256(read_file(w / "r.grt"))));
    CHECK(fs::path(m["params"]["model"].get<std::string>()).is_absolute());
}

TEST_CASE("score, repair, grid and heatmap on the blotch model") {
    Workdir w;
    REQUIRE(cli::run({"profile", "--model", blotch(), "--count", "500", "--seed", "1", "--out", w / "r.grt"}) == 0);
    REQUIRE(cli::run({"latents", "--model", blotch(), "--count", "6", "--seed", "4", "--out", w / "z.glz"}) == 0);

    SUBCASE("score csv") {
        REQUIRE(cli::run({"score", "--model", blotch(), "--rates", w / "r.grt", "--latents", w / "z.glz", "--layers",
                          "0,1", "--out", w / "s.csv"}) == 0);
        const std::string csv = text_of(w / "s.csv");
        CHECK(csv.rfind("index,layer_0,layer_1,total\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    }
    SUBCASE("repair writes before/after pairs") {
        REQUIRE(cli::run({"repair", "--model", blotch(), "--rates", w / "r.grt", "--latents", w / "z.glz", "--select",
                          "1,4", "--out", w / "rep"}) == 0);
        CHECK(fs::exists(w / "rep/00001_before.png"));
        CHECK(fs::exists(w / "rep/00004_after.png"));
        CHECK_FALSE(fs::exists(w / "rep/00000_before.png"));
        const json m = json::parse(text_of(w / "rep/manifest.json"));
        CHECK(m["outputs"].size() == 4);
        CHECK(m["ablation"]["layers"] == json::array({0, 1, 3}));
        CHECK(decode_png(read_file(w / "rep/00001_after.png")).width == 32);
    }
    SUBCASE("grid") {
        REQUIRE(cli::run({"grid", "--model", blotch(), "--rates", w / "r.grt", "--latents", w / "z.glz", "--top", "4",
                          "--bottom", "2", "--cols", "2", "--pad", "1", "--out", w / "g"}) == 0);
        const RgbImage top = decode_png(read_file(w / "g/top.png"));
        CHECK(top.width == 2 * 33);
        CHECK(top.height == 2 * 33);
        CHECK(decode_png(read_file(w / "g/bottom.png")).height == 33);
        CHECK(fs::exists(w / "g/scores.csv"));
    }
    SUBCASE("heatmap") {
        REQUIRE(cli::run({"heatmap", "--model", blotch(), "--rates", w / "r.grt", "--count", "2", "--seed", "3",
                          "--layers", "0,2", "--out", w / "h"}) == 0);
        CHECK(fs::exists(w / "h/00000_layer0.png"));
        CHECK(fs::exists(w / "h/00001_layer2.png"));
    }
    SUBCASE("empty layer list repairs nothing") {
        REQUIRE(cli::run({"repair", "--model", blotch(), "--rates", w / "r.grt", "--latents", w / "z.glz", "--layers",
                          "none", "--out", w / "id"}) == 0);
        for (int i = 0; i < 6; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "id/%05d_", i);
            CHECK(read_file(w / (std::string(name) + "before.png")) == read_file(w / (std::string(name) + "after.png")));
        }
    }
}

TEST_CASE("features and metrics") {
    Workdir w;
    REQUIRE(cli::run({"features", "--model", blotch(), "--count", "40", "--seed", "1", "--side", "4", "--out",
                      w / "a.fts"}) == 0);
    REQUIRE(cli::run({"features", "--model", fixture("blotch_reference.gwf"), "--count", "40", "--seed", "2", "--side",
                      "4", "--out", w / "b.fts"}) == 0);
    CHECK(read_fts(read_file(w / "a.fts")).dim == 16);
    REQUIRE(cli::run({"metrics", "--real", w / "a.fts", "--fake", w / "b.fts", "--out", w / "m.json"}) == 0);
    const json m = json::parse(text_of(w / "m.json"));
    CHECK(m["k"] == 3);
    CHECK(m["fid"].get<double>() >= 0.0);
    CHECK(m["realism"]["scores"].size() == 40);
    CHECK(m["realism"]["summary"].get<std::string>().find("±") != std::string::npos);

    REQUIRE(cli::run({"metrics", "--real", w / "a.fts", "--fake", w / "b.fts", "--no-fid", "--out", w / "n.json"}) == 0);
    CHECK_FALSE(json::parse(text_of(w / "n.json")).contains("fid"));

    // Too few samples for a 16-dimensional covariance.
    REQUIRE(cli::run({"features", "--model", blotch(), "--count", "8", "--seed", "1", "--side", "4", "--out",
                      w / "small.fts"}) == 0);
    CHECK(cli::run({"metrics", "--real", w / "small.fts", "--fake", w / "b.fts", "--out", w / "x.json"}) == cli::kNumeric);
}

TEST_CASE("exit codes") {
    Workdir w;
    CHECK(cli::run({}) == cli::kUsage);
    CHECK(cli::run({"profile", "--model", blotch()}) == cli::kUsage);
    CHECK(cli::run({"bogus"}) == cli::kUsage);
    CHECK(cli::run({"profile", "--model", w / "missing.gwf", "--count", "2", "--out", w / "r.grt"}) == cli::kFormat);

    const Bytes gwf = read_file(blotch());
    write_file(w / "trunc.gwf", std::span<const std::uint8_t>(gwf.data(), gwf.size() - 3));
    CHECK(cli::run({"profile", "--model", w / "trunc.gwf", "--count", "2", "--out", w / "r.grt"}) == cli::kFormat);

    REQUIRE(cli::run({"profile", "--model", fixture("toy5.gwf"), "--count", "5", "--out", w / "toy.grt"}) == 0);
    CHECK(cli::run({"score", "--model", blotch(), "--rates", w / "toy.grt", "--count", "2", "--seed", "0", "--out",
                    w / "s.csv"}) == cli::kFormat);
    REQUIRE(cli::run({"profile", "--model", blotch(), "--count", "5", "--out", w / "b.grt"}) == 0);
    CHECK(cli::run({"score", "--model", blotch(), "--rates", w / "b.grt", "--count", "2", "--seed", "0", "--layers", "9",
                    "--out", w / "s.csv"}) == cli::kUsage);
    CHECK(cli::run({"repair", "--model", blotch(), "--rates", w / "b.grt", "--count", "2", "--seed", "0", "--mode",
                    "sideways", "--out", w / "r"}) == cli::kUsage);
    CHECK(cli::run({"score", "--model", blotch(), "--rates", w / "b.grt", "--out", w / "s.csv"}) == cli::kUsage);
}

TEST_CASE("replay reproduces outputs and detects changes") {
    Workdir w;
    REQUIRE(cli::run({"profile", "--model", blotch(), "--count", "100", "--seed", "2", "--out", w / "r.grt"}) == 0);
    REQUIRE(cli::run({"repair", "--model", blotch(), "--rates", w / "r.grt", "--count", "3", "--seed", "5", "--mode",
                      "random:0.3", "--random-seed", "9", "--out", w / "rep"}) == 0);

    CHECK(cli::run({"replay", "--manifest", w / "r.grt.manifest.json", "--out", w / "r2.grt"}) == 0);
    CHECK(read_file(w / "r2.grt") == read_file(w / "r.grt"));
    CHECK(cli::run({"replay", "--manifest", w / "rep/manifest.json", "--out", w / "rep2"}) == 0);
    CHECK(read_file(w / "rep2/00002_after.png") == read_file(w / "rep/00002_after.png"));

    // Tampered recorded digest.
    json m = json::parse(text_of(w / "rep/manifest.json"));
    m["outputs"][1]["sha256"] = std::string(64, '0');
    const std::string tampered = m.dump();
    write_file(w / "bad.json", std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(tampered.data()),
                                                              tampered.size()));
    CHECK(cli::run({"replay", "--manifest", w / "bad.json", "--out", w / "rep3"}) == cli::kFormat);
    CHECK_THROWS_AS(cli::replay(w / "bad.json", w / "rep4"), DigestError);

    // Changed input file.
    REQUIRE(cli::run({"profile", "--model", blotch(), "--count", "101", "--seed", "2", "--out", w / "r.grt"}) == 0);
    CHECK(cli::run({"replay", "--manifest", w / "rep/manifest.json", "--out", w / "rep5"}) == cli::kFormat);

    write_file(w / "junk.json", std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("{"), 1));
    CHECK(cli::run({"replay", "--manifest", w / "junk.json"}) == cli::kFormat);
}

TEST_CASE("execute rejects unknown commands") {
    Workdir w;
    CHECK_THROWS_AS(cli::execute("nope", {{"out", w / "x"}}), ContractError);
    CHECK_THROWS_AS(cli::execute("profile", json::object()), ContractError);
}
