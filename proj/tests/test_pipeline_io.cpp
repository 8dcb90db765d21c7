#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "qim/error.hpp"
#include "qim/image_io.hpp"
#include "qim/pipeline.hpp"
#include "qim/qifs.hpp"
#include "qim/report.hpp"
#include "qim/scene_json.hpp"
#include "qim/simulate.hpp"
#include "test_support.hpp"

using namespace qim;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
}

FormatError::Kind read_error(const std::filesystem::path& p) {
    try {
        QifsReader r(p);
        r.read(0, r.size());
    } catch (const FormatError& e) {
        return e.kind();
    }
    FAIL("no error for " << p);
    return FormatError::Kind::io;
}

} // namespace

TEST_CASE("QIFS layout arithmetic") {
    CHECK(qifs::row_bytes(49) == 7);
    CHECK(qifs::frame_bytes(49, 49) == 343);
    CHECK(qifs::row_bytes(8) == 1);
    CHECK(qifs::row_bytes(9) == 2);
    const auto h = qifs::encode_header({2, 3, 5});
    CHECK(std::string(h.begin(), h.end()) == std::string("QIFS\x01\x00\x02\x00\x03\x00\x05\0\0\0\0\0\0\0", 18));
}

TEST_CASE("QIFS golden fixtures") {
    const FrameStack st = read_stack(test::fixture("golden_2x2_3f.qifs"));
    REQUIRE(st.size() == 3);
    CHECK(st.width() == 2);
    CHECK(st.height() == 2);
    CHECK(st.frame(0).events() == std::vector<Pixel>{{0, 0}});
    CHECK(st.frame(1).events() == std::vector<Pixel>{{1, 0}, {0, 1}});
    CHECK(st.frame(2).events() == std::vector<Pixel>{{0, 0}, {1, 0}, {0, 1}, {1, 1}});

    const FrameStack wide = read_stack(test::fixture("golden_10x1_2f.qifs"));
    CHECK(wide.frame(0).events() == std::vector<Pixel>{{0, 0}, {7, 0}, {9, 0}});
    CHECK(wide.frame(1).events() == std::vector<Pixel>{{8, 0}});

    CHECK(read_stack(test::fixture("empty_0f.qifs")).size() == 0);

    // the writer reproduces the hand-assembled bytes
    const auto dir = test::scratch("golden");
    write_stack(st, dir / "copy.qifs");
    CHECK(slurp(dir / "copy.qifs") == slurp(test::fixture("golden_2x2_3f.qifs")));
}

TEST_CASE("QIFS malformed fixtures are rejected with specific errors") {
    using K = FormatError::Kind;
    CHECK(read_error(test::fixture("bad_magic.qifs")) == K::bad_magic);
    CHECK(read_error(test::fixture("bad_version.qifs")) == K::version_mismatch);
    CHECK(read_error(test::fixture("truncated_header.qifs")) == K::truncated);
    CHECK(read_error(test::fixture("truncated_body.qifs")) == K::truncated);
    CHECK(read_error(test::fixture("trailing_data.qifs")) == K::trailing_data);
    CHECK(read_error(test::fixture("nonzero_padding.qifs")) == K::nonzero_padding);
    CHECK(read_error(test::fixture("zero_width.qifs")) == K::invalid_dimensions);
    CHECK(read_error(test::fixture("dimension_overflow.qifs")) == K::dimension_overflow);
    CHECK(read_error(test::fixture("does_not_exist.qifs")) == K::io);
}

TEST_CASE("QIFS round trip and sliced reads") {
    const auto dir = test::scratch("roundtrip");
    std::mt19937_64 gen(4);
    for (auto [w, h] : std::vector<std::pair<int, int>>{{1, 1}, {49, 49}, {64, 3}, {65, 2}, {130, 7}}) {
        FrameStack st(w, h);
        for (int f = 0; f < 37; ++f) {
            Frame fr(w, h);
            for (int k = 0; k < 9; ++k) fr.set(static_cast<int>(gen() % w), static_cast<int>(gen() % h));
            st.push_back(fr.view());
        }
        const auto path = dir / ("s" + std::to_string(w) + ".qifs");
        write_stack(st, path);
        CHECK(std::filesystem::file_size(path) == 18 + 37 * qifs::frame_bytes(w, h));
        CHECK(read_stack(path) == st);

        // concurrent readers over disjoint slices
        FrameStack a, b;
        std::thread t1([&] { a = QifsReader(path).read(0, 20); });
        std::thread t2([&] { b = QifsReader(path).read(20, 17); });
        t1.join();
        t2.join();
        for (std::size_t i = 0; i < 20; ++i) CHECK(a.frame(i).events() == st.frame(i).events());
        for (std::size_t i = 0; i < 17; ++i) CHECK(b.frame(i).events() == st.frame(20 + i).events());
        CHECK_THROWS_AS(QifsReader(path).read(30, 8), FormatError);
    }

    QifsWriter short_writer(dir / "short.qifs", 4, 4, 3);
    short_writer.write(Frame(4, 4).view());
    CHECK_THROWS_AS(short_writer.close(), FormatError);
}

TEST_CASE("PGM reading") {
    const auto dir = test::scratch("pgm");
    spit(dir / "a.pgm", std::string("P5\n# comment\n3 1\n255\n") + std::string("\x00\x80\xff", 3));
    const Map2D m = read_map(dir / "a.pgm");
    CHECK(m.width == 3);
    CHECK(m.values[0] == 0.0);
    CHECK(m.values[1] == doctest::Approx(128.0 / 255));
    CHECK(m.values[2] == 1.0);

    spit(dir / "b.pgm", std::string("P5 2 1 65535\n") + std::string("\xff\xff\x80\x00", 4));
    const Map2D m16 = read_map(dir / "b.pgm");
    CHECK(m16.values[0] == 1.0);
    CHECK(m16.values[1] == doctest::Approx(32768.0 / 65535));

    auto kind_of = [&](const std::string& bytes) {
        spit(dir / "bad.pgm", bytes);
        try {
            read_pgm(dir / "bad.pgm");
        } catch (const FormatError& e) {
            return e.kind();
        }
        return FormatError::Kind::io;
    };
    CHECK(kind_of("P5\n2 1\n1000\n\x01\x02\x03\x04") == FormatError::Kind::unsupported_maxval);
    CHECK(kind_of("P2\n2 1\n255\n1 2\n") == FormatError::Kind::malformed_header);
    CHECK(kind_of("P5\n2 x\n255\n\x01\x02") == FormatError::Kind::malformed_header);
    CHECK(kind_of("P5\n2 1\n255\n\x01") == FormatError::Kind::truncated);
}

TEST_CASE("image writing") {
    const auto dir = test::scratch("img");
    CountImage zero(4, 3, ImageKind::classical, 10);
    write_image(zero, dir / "z.pgm");
    write_image(zero, dir / "z.png");
    for (auto v : read_pgm(dir / "z.pgm").pixels) CHECK(v == 0);
    for (auto v : read_png(dir / "z.png").pixels) CHECK(v == 0);

    CountImage mask(5, 4, ImageKind::and_image, 1);
    for (std::size_t i = 0; i < mask.counts.size(); ++i) mask.counts[i] = (i * 7) % 3 == 0;
    write_image(mask, dir / "m.pgm");
    const Map2D back = read_map(dir / "m.pgm");
    for (std::size_t i = 0; i < mask.counts.size(); ++i) CHECK(back.values[i] == static_cast<double>(mask.counts[i]));
    write_image(mask, dir / "m.png", Normalization::log);
    const GrayImage png = read_png(dir / "m.png");
    for (std::size_t i = 0; i < mask.counts.size(); ++i) CHECK(png.pixels[i] == (mask.counts[i] ? 255 : 0));

    const json side = load_json(dir / "m.png.json");
    CHECK(side["normalization"] == "log");
    CHECK(side["kind"] == "and");
    CHECK(load_json(dir / "m.pgm.json")["normalization"] == "linear");

    const GrayImage g = to_gray({0, 1, 9}, 3, 1, Normalization::log, 255);
    CHECK(g.pixels[2] == 255);
    CHECK(g.pixels[1] == std::lround(std::log(2.0) / std::log(10.0) * 255));
}

TEST_CASE("report round trip") {
    const auto dir = test::scratch("report");
    AnalysisReport r;
    r.v_classical = 0.123456789012345;
    r.v_quantum = 0.4567;
    r.advantage = *r.v_quantum / *r.v_classical;
    NoiseRejection n;
    n.value = 5.25;
    n.classical_object_mean = 1;
    n.classical_mask_mean = 2;
    n.and_object_mean = 3;
    n.and_mask_mean = 4;
    r.noise_rejection = n;
    r.totals = {{"n_frames", 10}};
    r.config = {{"tolerance", 0}};
    write_report(r, dir / "r.json");
    const AnalysisReport b = read_report(dir / "r.json");
    CHECK(b.v_classical == r.v_classical);
    CHECK(b.v_quantum == r.v_quantum);
    CHECK(b.advantage == r.advantage);
    CHECK(std::abs(*b.advantage - *b.v_quantum / *b.v_classical) <= 1e-12 * *b.advantage);
    CHECK(b.noise_rejection->value == 5.25);
    CHECK(b.noise_rejection->and_mask_mean == 4);
    CHECK(b.totals == r.totals);
    CHECK(b.config == r.config);
    CHECK(b.software_version == kSoftwareVersion);

    const json j = load_json(dir / "r.json");
    for (const char* key : {"v_classical", "v_quantum", "advantage", "noise_rejection", "totals", "config", "software_version"})
        CHECK(j.contains(key));

    r.noise_rejection->infinite = true;
    r.noise_rejection->value = std::numeric_limits<double>::infinity();
    r.advantage.reset();
    write_report(r, dir / "inf.json");
    CHECK(load_json(dir / "inf.json")["noise_rejection"] == "inf");
    CHECK(load_json(dir / "inf.json")["advantage"].is_null());
    const AnalysisReport c = read_report(dir / "inf.json");
    CHECK(c.noise_rejection->infinite);
    CHECK_FALSE(c.advantage.has_value());
}

TEST_CASE("profile CSV") {
    const auto dir = test::scratch("csv");
    write_profiles({{"row", {1, 2, 3, 4, 5}}, {"col", {7, 8, 9}}}, dir / "p.csv");
    std::ifstream in(dir / "p.csv");
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "index,row,col");
    CHECK(lines[1] == "0,1,7");
    CHECK(lines[5] == "4,5,");
}

TEST_CASE("scene JSON") {
    SceneConfig s = scene_from_json(json::object());
    CHECK(s == default_scene());

    const json spec = {
        {"width", 31},
        {"height", 21},
        {"object_map", {{"background", 0.0}, {"layers", {{{"shape", "disk"}, {"cx", 15}, {"cy", 10}, {"r", 4}}}}}},
        {"thermal_map", {{"shape", "bars"}, {"period", 6}, {"bar_width", 2}, {"value", 0.003}}},
        {"thermal_scale", 2.0},
        {"thermal_bunching", true},
        {"probe_loss_eta", 0.5},
        {"geometry", {{"center", {30, 20}}, {"sigma_px", 0.4}}},
        {"detector", {{"dark_event_prob", 0.001}}},
        {"seed", 77},
    };
    s = scene_from_json(spec);
    CHECK(s.width == 31);
    CHECK(s.object_map.at(15, 10) == 1.0);
    CHECK(s.object_map.at(0, 0) == 0.0);
    CHECK(s.thermal_map.at(0, 5) == 0.003);
    CHECK(s.thermal_map.at(3, 5) == 0.0);
    CHECK(s.detector.qe_probe == 1.0);
    CHECK(s.seed == 77);

    const json echoed = scene_to_json(s);
    CHECK(scene_from_json(echoed) == s);
    CHECK(echoed["object_map"] == spec["object_map"]);

    SceneConfig edited = s;
    edited.object_map.at(1, 1) = 0.25;
    CHECK(scene_from_json(scene_to_json(edited)) == edited);  // falls back to explicit rows

    CHECK_THROWS_AS(scene_from_json({{"widht", 3}}), ValidationError);
    CHECK_THROWS_AS(scene_from_json({{"probe_loss_eta", 1.2}}), ValidationError);
    CHECK_THROWS_AS(scene_from_json({{"width", 5}, {"object_map", json::array({json::array({1, 1})})}}),
                    ValidationError);

    const auto dir = test::scratch("scene");
    spit(dir / "mask.pgm", std::string("P5 2 2 255\n") + std::string("\xff\x00\x00\xff", 4));
    spit(dir / "scene.json", R"({"width": 2, "height": 2, "object_map": "mask.pgm"})");
    const SceneConfig fromfile = load_scene(dir / "scene.json");
    CHECK(fromfile.object_map.values == std::vector<double>{1, 0, 0, 1});
    spit(dir / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_scene(dir / "broken.json"), FormatError);
}

TEST_CASE("ROI files") {
    const json j = {{"center", {48, 48}},
                    {"rois", {{{"label", "bright"}, {"rect", {1, 2, 3, 4}}}, {{"label", "mask"}, {"pixels", {{0, 0}, {5, 5}}}}}},
                    {"cuts", {{"rows", {10, 12}}}}};
    const RoiSet set = rois_from_json(j, 49, 49);
    CHECK(set.geometry.center_x2 == 48);
    CHECK(set.find("bright")->size() == 12);
    CHECK(set.find("mask")->size() == 2);
    CHECK(set.find("dark") == nullptr);
    CHECK(set.cut_rows->first == 10);
    CHECK_FALSE(set.cut_cols.has_value());
    CHECK(rois_from_json(rois_to_json(set), 49, 49).rois == set.rois);

    CHECK_THROWS_AS(rois_from_json({{"rois", {{{"label", "x"}, {"rect", {45, 45, 10, 10}}}}}}, 49, 49), ValidationError);
    CHECK_THROWS_AS(rois_from_json({{"rois", {{{"label", "x"}}}}}, 49, 49), ValidationError);
    CHECK_THROWS_AS(rois_from_json({{"roi", json::array()}}, 49, 49), ValidationError);
}
