#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qim/cli.hpp"
#include "qim/scene_json.hpp"
#include "test_support.hpp"

using nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run qim_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "qim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = qim::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

void write_json(const std::filesystem::path& p, const json& j) { std::ofstream(p) << j.dump(2); }

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool one_line(const std::string& s) { return !s.empty() && s.find('\n') == s.size() - 1; }

const json kRois = {{"center", {48, 48}},
                    {"rois",
                     {{{"label", "bright"}, {"rect", {6, 12, 12, 25}}},
                      {{"label", "dark"}, {"rect", {31, 12, 12, 25}}},
                      {{"label", "object"}, {"rect", {6, 12, 12, 25}}},
                      {{"label", "mask"}, {"rect", {31, 12, 12, 25}}}}}};

json half_object_scene() {
    return {{"object_map", {{"shape", "rect"}, {"x0", 0}, {"y0", 0}, {"w", 24}, {"h", 49}}}};
}

} // namespace

TEST_CASE("usage errors") {
    const auto dir = test::scratch("cli_usage");
    write_json(dir / "scene.json", json::object());
    Run r = qim_cli({"simulate", "--scene", (dir / "scene.json").string(), "--frames", "0", "--out-prefix",
                     (dir / "x").string()});
    CHECK(r.code == 2);
    CHECK(one_line(r.err));
    r = qim_cli({"detect", "--scene", (dir / "scene.json").string(), "--roi", "1,1,3,3", "--trials", "99"});
    CHECK(r.code == 2);
    CHECK(one_line(r.err));
    r = qim_cli({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(one_line(r.err));
    r = qim_cli({"--help"});
    CHECK(r.code == 0);
}

TEST_CASE("errors give a nonzero exit and one diagnostic line") {
    const auto dir = test::scratch("cli_errors");
    write_json(dir / "bad.json", {{"probe_loss_eta", 1.2}});
    Run r = qim_cli({"simulate", "--scene", (dir / "bad.json").string(), "--frames", "10", "--out-prefix",
                     (dir / "x").string()});
    CHECK(r.code == 1);
    CHECK(one_line(r.err));
    CHECK(r.err.find("probe_loss_eta") != std::string::npos);

    write_json(dir / "scene.json", json::object());
    REQUIRE(qim_cli({"simulate", "--scene", (dir / "scene.json").string(), "--frames", "10", "--out-prefix",
                     (dir / "a").string()}).code == 0);
    REQUIRE(qim_cli({"simulate", "--scene", (dir / "scene.json").string(), "--frames", "11", "--out-prefix",
                     (dir / "b").string()}).code == 0);
    write_json(dir / "rois.json", kRois);
    r = qim_cli({"analyze", "--probe", (dir / "a.probe.qifs").string(), "--ref", (dir / "b.ref.qifs").string(),
                 "--rois", (dir / "rois.json").string(), "--out-dir", (dir / "out").string()});
    CHECK(r.code == 1);
    CHECK(one_line(r.err));
    write_json(dir / "off.json", {{"rois", {{{"label", "bright"}, {"rect", {40, 40, 20, 20}}}}}});
    r = qim_cli({"analyze", "--probe", (dir / "a.probe.qifs").string(), "--ref", (dir / "a.ref.qifs").string(),
                 "--rois", (dir / "off.json").string(), "--out-dir", (dir / "out").string()});
    CHECK(r.code == 1);
    CHECK(one_line(r.err));
}

TEST_CASE("simulate is deterministic across workers and reports oracle rates") {
    const auto dir = test::scratch("cli_sim");
    write_json(dir / "scene.json", json::object());
    const std::string scene = (dir / "scene.json").string();
    REQUIRE(qim_cli({"simulate", "--scene", scene, "--frames", "100000", "--out-prefix", (dir / "w1").string(),
                     "--workers", "1"}).code == 0);
    const Run r8 = qim_cli({"simulate", "--scene", scene, "--frames", "100000", "--out-prefix", (dir / "w8").string(),
                            "--workers", "8"});
    REQUIRE(r8.code == 0);
    CHECK(r8.out.find("probe rate") != std::string::npos);
    CHECK(slurp(dir / "w1.probe.qifs") == slurp(dir / "w8.probe.qifs"));
    CHECK(slurp(dir / "w1.ref.qifs") == slurp(dir / "w8.ref.qifs"));
    CHECK(slurp(dir / "w1.summary.json").size() > 0);

    const json summary = qim::load_json(dir / "w8.summary.json");
    const double rate = summary["rates"]["probe"].get<double>();
    CHECK(rate == doctest::Approx(0.003).epsilon(0.1));
    CHECK(rate == doctest::Approx(summary["rates"]["probe_oracle"].get<double>()).epsilon(0.01));
    CHECK(summary["config"]["scene"]["detector"]["dark_event_prob"] == 0.0016);
}

TEST_CASE("analyze: noiseless lossless scene has unit advantage") {
    const auto dir = test::scratch("cli_analyze");
    json scene = half_object_scene();
    scene["detector"] = {{"dark_event_prob", 0.0}};
    write_json(dir / "scene.json", scene);
    write_json(dir / "rois.json", kRois);
    REQUIRE(qim_cli({"simulate", "--scene", (dir / "scene.json").string(), "--frames", "20000", "--out-prefix",
                     (dir / "s").string()}).code == 0);
    Run r = qim_cli({"analyze", "--probe", (dir / "s.probe.qifs").string(), "--ref", (dir / "s.ref.qifs").string(),
                     "--rois", (dir / "rois.json").string(), "--out-dir", (dir / "out").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"classical.png", "classical.pgm", "and.png", "and.pgm", "baseline.pgm", "baseline.png",
                          "report.json", "cuts.csv"})
        CHECK(std::filesystem::exists(dir / "out" / f));
    const json rep = qim::load_json(dir / "out" / "report.json");
    CHECK(rep["advantage"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep["metadata"]["and_tolerance"] == 0);
    // no background at all: the classical mask mean is zero, so R is undefined
    CHECK(rep["noise_rejection"].is_null());
    CHECK(rep["metadata"]["notes"].size() == 1);
    CHECK(rep["config"]["rois"]["rois"].size() == 4);

    r = qim_cli({"analyze", "--probe", (dir / "s.probe.qifs").string(), "--ref", (dir / "s.ref.qifs").string(),
                 "--rois", (dir / "rois.json").string(), "--out-dir", (dir / "tol").string(), "--tolerance", "1"});
    REQUIRE(r.code == 0);
    const json tol = qim::load_json(dir / "tol" / "report.json");
    CHECK(tol["metadata"]["and_tolerance"] == 1);
    CHECK(tol["metadata"]["and_tolerance_enabled"] == true);
    CHECK(tol["config"]["tolerance"] == 1);
}

TEST_CASE("analyze sweep writes one report per condition and a summary") {
    const auto dir = test::scratch("cli_sweep");
    json scene = half_object_scene();
    scene["thermal_map"] = 0.0016;
    write_json(dir / "scene.json", scene);
    write_json(dir / "rois.json", kRois);
    write_json(dir / "sweep.json", {{"conditions",
                                     {{{"label", "eta1"}, {"probe_loss_eta", 1.0}},
                                      {{"label", "eta05"}, {"probe_loss_eta", 0.5}},
                                      {{"label", "hot"}, {"thermal_scale", 3.0}}}}});
    const Run r = qim_cli({"analyze", "--sweep", (dir / "sweep.json").string(), "--scene", (dir / "scene.json").string(),
                           "--frames", "20000", "--rois", (dir / "rois.json").string(), "--out-dir",
                           (dir / "out").string()});
    REQUIRE(r.code == 0);
    std::ifstream csv(dir / "out" / "summary.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(csv, l);) lines.push_back(l);
    CHECK(lines.size() == 4);
    CHECK(lines[1].rfind("eta1,1,1,20000,", 0) == 0);
    const json rep = qim::load_json(dir / "out" / "eta05" / "report.json");
    CHECK(rep["config"]["scene"]["probe_loss_eta"] == 0.5);
    CHECK(rep["metadata"].contains("oracle"));
}

TEST_CASE("correlate") {
    const auto dir = test::scratch("cli_corr");
    write_json(dir / "scene.json", json::object());
    write_json(dir / "other.json", {{"seed", 2}});
    REQUIRE(qim_cli({"simulate", "--scene", (dir / "scene.json").string(), "--frames", "100000", "--out-prefix",
                     (dir / "a").string()}).code == 0);
    REQUIRE(qim_cli({"simulate", "--scene", (dir / "other.json").string(), "--frames", "100000", "--out-prefix",
                     (dir / "b").string()}).code == 0);

    Run r = qim_cli({"correlate", "--probe", (dir / "a.probe.qifs").string(), "--ref", (dir / "a.ref.qifs").string(),
                     "--max-disp", "5", "--out", (dir / "c.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("peak: (0, 0)") != std::string::npos);
    const auto ratio_of = [](const std::string& out) {
        const auto p = out.find("ratio: ");
        return p == std::string::npos ? -1.0 : std::stod(out.substr(p + 7));
    };
    CHECK(ratio_of(r.out) > 5.0);

    r = qim_cli({"correlate", "--probe", (dir / "a.probe.qifs").string(), "--ref", (dir / "b.ref.qifs").string(),
                 "--max-disp", "5", "--out", (dir / "null.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(ratio_of(r.out) < 5.0);

    r = qim_cli({"correlate", "--probe", (dir / "a.probe.qifs").string(), "--ref", (dir / "a.ref.qifs").string(),
                 "--max-disp", "0", "--out", (dir / "d0.csv").string()});
    REQUIRE(r.code == 0);
    std::ifstream in(dir / "d0.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "dx,dy,value");
    CHECK(lines[1].rfind("0,0,", 0) == 0);
}

TEST_CASE("detect") {
    const auto dir = test::scratch("cli_detect");
    write_json(dir / "blocked.json", {{"width", 21}, {"height", 21}, {"probe_loss_eta", 0.0}, {"thermal_map", 0.004}});
    write_json(dir / "rois.json", {{"rois", {{{"label", "obj"}, {"rect", {5, 5, 11, 11}}}}}});
    const Run r = qim_cli({"detect", "--scene", (dir / "blocked.json").string(), "--roi", "obj", "--rois",
                           (dir / "rois.json").string(), "--block-frames", "10", "--trials", "2000", "--strategy", "all",
                           "--out", (dir / "ber.json").string()});
    REQUIRE(r.code == 0);
    const json j = qim::load_json(dir / "ber.json");
    REQUIRE(j["results"].size() == 3);
    for (const auto& e : j["results"]) {
        CHECK(std::abs(e["ber"].get<double>() - 0.5) < 4 * std::sqrt(0.25 / 2000));
        CHECK(e["degenerate"] == true);
    }
    CHECK(j["config"]["block_frames"] == 10);
    CHECK(j["config"]["scene"]["probe_loss_eta"] == 0.0);

    const Run missing = qim_cli({"detect", "--scene", (dir / "blocked.json").string(), "--roi", "nope", "--rois",
                                 (dir / "rois.json").string(), "--trials", "200"});
    CHECK(missing.code == 1);
    CHECK(one_line(missing.err));
}
