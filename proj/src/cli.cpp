#include "qim/cli.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qim/coincidence.hpp"
#include "qim/error.hpp"
#include "qim/metrics.hpp"
#include "qim/oracle.hpp"
#include "qim/parallel.hpp"
#include "qim/pipeline.hpp"
#include "qim/qifs.hpp"
#include "qim/report.hpp"
#include "qim/scene_json.hpp"
#include "qim/simulate.hpp"

namespace qim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::size_t kChunkFrames = 65536;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t popcount(std::span<const Word> words) {
    std::uint64_t n = 0;
    for (Word w : words) n += static_cast<std::uint64_t>(std::popcount(w));
    return n;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

unsigned resolve_workers(int w) {
    if (w < 0) throw UsageError("--workers must be >= 0");
    return w == 0 ? default_workers() : static_cast<unsigned>(w);
}

Roi parse_rect_roi(const std::string& text) {
    std::vector<int> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stoi(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw UsageError("--roi: '" + text + "' is neither a label nor x0,y0,w,h");
        }
    }
    if (v.size() != 4) throw UsageError("--roi: '" + text + "' is neither a label nor x0,y0,w,h");
    return Roi::rect("object", v[0], v[1], v[2], v[3]);
}

bool looks_like_rect(const std::string& s) { return s.find(',') != std::string::npos; }

// --- simulate --------------------------------------------------------------

struct SimulateArgs {
    std::string scene;
    std::uint64_t frames = 0;
    std::string out_prefix;
    int workers = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    if (a.frames == 0) throw UsageError("--frames must be >= 1");
    const unsigned workers = resolve_workers(a.workers);
    const SceneConfig scene = load_scene(a.scene);
    const fs::path probe_path = a.out_prefix + ".probe.qifs";
    const fs::path ref_path = a.out_prefix + ".ref.qifs";
    if (probe_path.has_parent_path()) fs::create_directories(probe_path.parent_path());

    QifsWriter pw(probe_path, scene.width, scene.height, a.frames);
    QifsWriter rw(ref_path, scene.width, scene.height, a.frames);
    std::uint64_t probe_events = 0;
    std::uint64_t ref_events = 0;
    generate_chunks(scene, a.frames, kChunkFrames, workers, [&](const StackPair& chunk, std::uint64_t) {
        pw.write(chunk.probe);
        rw.write(chunk.ref);
        probe_events += popcount(chunk.probe.data());
        ref_events += popcount(chunk.ref.data());
    });
    pw.close();
    rw.close();

    const double cells = static_cast<double>(a.frames) * scene.width * scene.height;
    const double probe_rate = static_cast<double>(probe_events) / cells;
    const double ref_rate = static_cast<double>(ref_events) / cells;
    const RatePrediction pred = expected_rates(scene);
    const double probe_oracle = mean(pred.p_probe);
    const double ref_oracle = mean(pred.p_ref);

    out << "frames: " << a.frames << " (" << scene.width << "x" << scene.height << ", seed " << scene.seed
        << ", workers " << workers << ")\n"
        << "probe rate: " << fmt(probe_rate) << " events/px/frame (oracle " << fmt(probe_oracle) << ")\n"
        << "ref rate:   " << fmt(ref_rate) << " events/px/frame (oracle " << fmt(ref_oracle) << ")\n"
        << "wrote " << probe_path.string() << ", " << ref_path.string() << "\n";

    json summary = {
        {"config", {{"scene", scene_to_json(scene)}, {"frames", a.frames}, {"out_prefix", a.out_prefix}}},
        {"files", {{"probe", probe_path.string()}, {"ref", ref_path.string()}}},
        {"events", {{"probe", probe_events}, {"ref", ref_events}}},
        {"rates",
         {{"probe", probe_rate}, {"ref", ref_rate}, {"probe_oracle", probe_oracle}, {"ref_oracle", ref_oracle}}},
        {"software_version", kSoftwareVersion},
    };
    write_text(a.out_prefix + ".summary.json", summary.dump(2) + "\n");
    return 0;
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    std::string probe;
    std::string ref;
    std::string rois;
    std::string out_dir;
    int tolerance = 0;
    std::string normalization = "linear";
    int workers = 0;
    std::string sweep;
    std::string scene;
    std::uint64_t frames = 0;
};

void print_report_line(std::ostream& out, const std::string& label, const AnalysisReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); };
    out << label << "V_C=" << opt(r.v_classical) << " V_Q=" << opt(r.v_quantum) << " A=" << opt(r.advantage)
        << " R=";
    if (!r.noise_rejection) {
        out << "n/a";
    } else if (r.noise_rejection->infinite) {
        out << "inf";
    } else {
        out << fmt(r.noise_rejection->value);
    }
    out << '\n';
}

std::string csv_cell(const std::optional<double>& v) { return v ? fmt17(*v) : std::string(); }

/// Sweep file: {"conditions": [ {label, probe_loss_eta?, thermal_scale?} |
/// {label, probe, ref} ... ]}. Parameter conditions re-simulate --scene for
/// --frames frames; path conditions analyze existing stacks.
int cmd_sweep(const AnalyzeArgs& a, Normalization norm, unsigned workers, std::ostream& out) {
    const json spec = load_json(a.sweep);
    const json& conds = spec.is_array() ? spec : spec.value("conditions", json());
    if (!conds.is_array() || conds.empty()) throw ValidationError("sweep: expected a non-empty \"conditions\" array");
    std::optional<SceneConfig> base;
    if (!a.scene.empty()) base = load_scene(a.scene);

    fs::create_directories(a.out_dir);
    std::ostringstream csv;
    csv << "label,probe_loss_eta,thermal_scale,frames,v_classical,v_quantum,advantage,noise_rejection,"
           "oracle_advantage\n";
    json echoed = json::array();
    int index = 0;
    for (const json& c : conds) {
        if (!c.is_object()) throw ValidationError("sweep: each condition must be an object");
        for (const auto& [key, _] : c.items()) {
            if (key != "label" && key != "probe_loss_eta" && key != "thermal_scale" && key != "probe" && key != "ref") {
                throw ValidationError("sweep: unknown condition key '" + key + "'");
            }
        }
        const std::string label = c.value("label", "condition_" + std::to_string(index));
        ++index;
        AnalysisOutputs result;
        std::optional<SceneConfig> scene;
        std::uint64_t frames = 0;
        if (c.contains("probe") || c.contains("ref")) {
            if (!c.contains("probe") || !c.contains("ref")) throw ValidationError("sweep: '" + label + "' needs probe and ref");
            QifsReader header(c.at("probe").get<std::string>());
            const RoiSet rois = load_rois(a.rois, header.width(), header.height());
            CoincidenceOptions opts;
            opts.tolerance = a.tolerance;
            const CoincidenceAccumulator acc = accumulate_files(c.at("probe").get<std::string>(),
                                                                c.at("ref").get<std::string>(), rois.geometry, opts,
                                                                workers);
            frames = acc.frames();
            result = analyze(acc, rois);
            result.report.config["probe"] = c.at("probe");
            result.report.config["ref"] = c.at("ref");
        } else {
            if (!base) throw UsageError("--sweep with parameter conditions needs --scene");
            if (a.frames == 0) throw UsageError("--sweep with parameter conditions needs --frames >= 1");
            scene = *base;
            if (c.contains("probe_loss_eta")) scene->probe_loss_eta = c.at("probe_loss_eta").get<double>();
            if (c.contains("thermal_scale")) scene->thermal_scale = c.at("thermal_scale").get<double>();
            validate_scene(*scene);
            const RoiSet rois = load_rois(a.rois, scene->width, scene->height);
            CoincidenceOptions opts;
            opts.tolerance = a.tolerance;
            const CoincidenceAccumulator acc = accumulate_scene(*scene, a.frames, rois.geometry, opts, workers);
            frames = a.frames;
            result = analyze(acc, rois, &*scene);
            result.report.config["frames"] = a.frames;
        }
        result.report.config["label"] = label;
        write_analysis(result, fs::path(a.out_dir) / label, norm);
        print_report_line(out, label + ": ", result.report);

        const AnalysisReport& r = result.report;
        std::string oracle_a;
        if (r.metadata.contains("oracle")) oracle_a = fmt17(r.metadata["oracle"]["advantage"].get<double>());
        std::string rej;
        if (r.noise_rejection) rej = r.noise_rejection->infinite ? "inf" : fmt17(r.noise_rejection->value);
        csv << label << ',' << (scene ? fmt17(scene->probe_loss_eta) : "") << ','
            << (scene ? fmt17(scene->thermal_scale) : "") << ',' << frames << ',' << csv_cell(r.v_classical) << ','
            << csv_cell(r.v_quantum) << ',' << csv_cell(r.advantage) << ',' << rej << ',' << oracle_a << '\n';
        json e = c;
        e["label"] = label;
        echoed.push_back(e);
    }
    write_text(fs::path(a.out_dir) / "summary.csv", csv.str());
    json cfg = {{"sweep", a.sweep},           {"conditions", echoed},  {"rois", a.rois},
                {"tolerance", a.tolerance},   {"frames", a.frames},    {"normalization", a.normalization},
                {"software_version", kSoftwareVersion}};
    if (base) cfg["scene"] = scene_to_json(*base);
    write_text(fs::path(a.out_dir) / "sweep.json", cfg.dump(2) + "\n");
    return 0;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    if (a.tolerance < 0) throw UsageError("--tolerance must be >= 0");
    const Normalization norm = normalization_from_string(a.normalization);
    const unsigned workers = resolve_workers(a.workers);
    if (!a.sweep.empty()) return cmd_sweep(a, norm, workers, out);
    if (a.probe.empty() || a.ref.empty()) throw UsageError("analyze needs --probe and --ref (or --sweep)");

    QifsReader header(a.probe);
    const RoiSet rois = load_rois(a.rois, header.width(), header.height());
    CoincidenceOptions opts;
    opts.tolerance = a.tolerance;
    const CoincidenceAccumulator acc = accumulate_files(a.probe, a.ref, rois.geometry, opts, workers);
    std::optional<SceneConfig> scene;
    if (!a.scene.empty()) scene = load_scene(a.scene);
    AnalysisOutputs result = analyze(acc, rois, scene ? &*scene : nullptr);
    result.report.config["probe"] = a.probe;
    result.report.config["ref"] = a.ref;
    write_analysis(result, a.out_dir, norm);

    const std::uint64_t violations =
        count_bound_violations(result.and_image, acc.probe_counts(), acc.ref_counts(), rois.geometry);
    out << "frames: " << acc.frames() << "\n";
    print_report_line(out, "", result.report);
    if (a.tolerance == 0) out << "coincidence bound violations: " << violations << "\n";
    out << "wrote " << a.out_dir << "\n";
    return 0;
}

// --- correlate -------------------------------------------------------------

struct CorrelateArgs {
    std::string probe;
    std::string ref;
    int max_disp = 5;
    std::string out;
    std::string rois;
    std::vector<int> center;
    int workers = 0;
};

int cmd_correlate(const CorrelateArgs& a, std::ostream& out) {
    if (a.max_disp < 0) throw UsageError("--max-disp must be >= 0");
    const unsigned workers = resolve_workers(a.workers);
    QifsReader header(a.probe);
    CorrelationGeometry geom;
    geom.center_x2 = header.width() - 1;
    geom.center_y2 = header.height() - 1;
    if (!a.rois.empty()) geom = load_rois(a.rois, header.width(), header.height()).geometry;
    if (!a.center.empty()) {
        if (a.center.size() != 2) throw UsageError("--center takes cx2,cy2");
        geom.center_x2 = a.center[0];
        geom.center_y2 = a.center[1];
    }
    CoincidenceOptions opts;
    opts.max_disp = a.max_disp;
    const CoincidenceAccumulator acc = accumulate_files(a.probe, a.ref, geom, opts, workers);
    const CorrelationMap map = acc.correlation();

    std::ostringstream csv;
    csv << "dx,dy,value\n";
    for (int dy = -a.max_disp; dy <= a.max_disp; ++dy)
        for (int dx = -a.max_disp; dx <= a.max_disp; ++dx) csv << dx << ',' << dy << ',' << fmt17(map.at(dx, dy)) << '\n';
    const fs::path out_path = a.out;
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_text(out_path, csv.str());

    const PeakSummary s = summarize_peak(map);
    out << "frames: " << acc.frames() << "\n"
        << "peak: (" << s.dx << ", " << s.dy << ")\n"
        << "amplitude: " << fmt(s.amplitude) << "\n";
    if (s.background_cells > 0) {
        out << "background std: " << fmt(s.background_std) << " over " << s.background_cells << " cells\n"
            << "ratio: " << fmt(s.ratio) << "\n";
    } else {
        out << "background std: n/a (no off-peak cells)\n";
    }
    out << "wrote " << a.out << "\n";
    return 0;
}

// --- detect ----------------------------------------------------------------

struct DetectArgs {
    std::string scene;
    std::string roi;
    std::string rois;
    std::uint64_t block_frames = 1;
    std::uint64_t trials = 0;
    std::string strategy = "all";
    std::string out;
    int workers = 0;
};

int cmd_detect(const DetectArgs& a, std::ostream& out) {
    if (a.trials < 100) throw UsageError("--trials must be >= 100");
    if (a.block_frames == 0) throw UsageError("--block-frames must be >= 1");
    const unsigned workers = resolve_workers(a.workers);
    const SceneConfig scene = load_scene(a.scene);

    Roi roi;
    if (looks_like_rect(a.roi)) {
        roi = parse_rect_roi(a.roi);
    } else {
        if (a.rois.empty()) throw UsageError("--roi '" + a.roi + "' is a label; pass --rois or use x0,y0,w,h");
        const RoiSet set = load_rois(a.rois, scene.width, scene.height);
        const Roi* found = set.find(a.roi);
        if (found == nullptr) throw ValidationError("--roi: no ROI labelled '" + a.roi + "' in " + a.rois);
        roi = *found;
    }
    roi.validate(scene.width, scene.height);

    std::vector<Strategy> strategies;
    if (a.strategy == "all") {
        strategies = {Strategy::classical, Strategy::quantum, Strategy::combined};
    } else {
        strategies = {strategy_from_string(a.strategy)};
    }
    PresenceOptions opts;
    opts.block_frames = a.block_frames;
    opts.trials = a.trials;
    opts.workers = workers;
    const PresenceOracle oracle = presence_oracle(scene, roi, a.block_frames);
    const std::vector<BerEstimate> results = presence_ber(scene, roi, opts, strategies);

    json rows = json::array();
    for (const BerEstimate& e : results) {
        out << std::left << std::setw(10) << to_string(e.strategy) << " BER=" << fmt(e.ber) << "  95% CI ["
            << fmt(e.ci_low) << ", " << fmt(e.ci_high) << "]  (" << e.errors << "/" << e.trials << ")"
            << (e.degenerate ? "  degenerate: present/absent indistinguishable" : "") << "\n";
        rows.push_back({{"strategy", to_string(e.strategy)},
                        {"errors", e.errors},
                        {"trials", e.trials},
                        {"ber", e.ber},
                        {"ci_low", e.ci_low},
                        {"ci_high", e.ci_high},
                        {"degenerate", e.degenerate}});
    }
    if (!a.out.empty()) {
        json roi_json = roi.kind() == Roi::Kind::rect ? json{{"label", roi.label()}, {"rect", roi.rect_params()}}
                                                      : json{{"label", roi.label()}, {"size", roi.size()}};
        json doc = {
            {"config",
             {{"scene", scene_to_json(scene)},
              {"roi", roi_json},
              {"block_frames", a.block_frames},
              {"trials", a.trials},
              {"strategy", a.strategy}}},
            {"oracle",
             {{"classical_present", oracle.classical_present},
              {"classical_absent", oracle.classical_absent},
              {"quantum_present", oracle.quantum_present},
              {"quantum_absent", oracle.quantum_absent}}},
            {"results", rows},
            {"ci", "Wilson score, 95%"},
            {"software_version", kSoftwareVersion},
        };
        const fs::path p = a.out;
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        write_text(p, doc.dump(2) + "\n");
    }
    return 0;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quantum-illumination imaging: simulate, analyze, correlate and detect", "qim"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kSoftwareVersion));

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate probe/reference frame stacks from a scene");
    simulate->add_option("--scene", sim.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--frames", sim.frames, "Number of frames")->required();
    simulate->add_option("--out-prefix", sim.out_prefix, "Writes PREFIX.probe.qifs and PREFIX.ref.qifs")->required();
    simulate->add_option("--workers", sim.workers, "Worker threads (0 = all cores)")->capture_default_str();

    AnalyzeArgs ana;
    auto* analyze_cmd = app.add_subcommand("analyze", "Classical, AND and baseline images plus contrast report");
    analyze_cmd->add_option("--probe", ana.probe, "Probe QIFS stack");
    analyze_cmd->add_option("--ref", ana.ref, "Reference QIFS stack");
    analyze_cmd->add_option("--rois", ana.rois, "ROI JSON")->required()->check(CLI::ExistingFile);
    analyze_cmd->add_option("--out-dir", ana.out_dir, "Output directory")->required();
    analyze_cmd->add_option("--tolerance", ana.tolerance, "AND match radius in pixels")->capture_default_str();
    analyze_cmd->add_option("--normalization", ana.normalization, "Image normalization")
        ->check(CLI::IsMember({"linear", "log"}))
        ->capture_default_str();
    analyze_cmd->add_option("--workers", ana.workers, "Worker threads (0 = all cores)")->capture_default_str();
    analyze_cmd->add_option("--sweep", ana.sweep, "Sweep JSON with a list of conditions")->check(CLI::ExistingFile);
    analyze_cmd->add_option("--scene", ana.scene, "Scene JSON (sweep base; adds oracle predictions)")
        ->check(CLI::ExistingFile);
    analyze_cmd->add_option("--frames", ana.frames, "Frames per re-simulated sweep condition");

    CorrelateArgs cor;
    auto* correlate = app.add_subcommand("correlate", "Probe/reference spatial cross-correlation");
    correlate->add_option("--probe", cor.probe, "Probe QIFS stack")->required()->check(CLI::ExistingFile);
    correlate->add_option("--ref", cor.ref, "Reference QIFS stack")->required()->check(CLI::ExistingFile);
    correlate->add_option("--max-disp", cor.max_disp, "Maximum displacement")->capture_default_str();
    correlate->add_option("--out", cor.out, "Output CSV (dx,dy,value)")->required();
    correlate->add_option("--rois", cor.rois, "ROI JSON supplying the reflection center")->check(CLI::ExistingFile);
    correlate->add_option("--center", cor.center, "Reflection center cx2,cy2 in half-pixel units")->delimiter(',');
    correlate->add_option("--workers", cor.workers, "Worker threads (0 = all cores)")->capture_default_str();

    DetectArgs det;
    auto* detect = app.add_subcommand("detect", "Present/absent decision bit-error rates");
    detect->add_option("--scene", det.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
    detect->add_option("--roi", det.roi, "ROI label (with --rois) or x0,y0,w,h")->required();
    detect->add_option("--rois", det.rois, "ROI JSON")->check(CLI::ExistingFile);
    detect->add_option("--block-frames", det.block_frames, "Frames per decision")->capture_default_str();
    detect->add_option("--trials", det.trials, "Number of trials (>= 100)")->required();
    detect->add_option("--strategy", det.strategy, "classical, quantum, combined or all")
        ->check(CLI::IsMember({"all", "classical", "quantum", "combined"}))
        ->capture_default_str();
    detect->add_option("--out", det.out, "Output JSON");
    detect->add_option("--workers", det.workers, "Worker threads (0 = all cores)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kSoftwareVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "qim: usage error: " << one_line(e.what()) << "\n";
        return 2;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(sim, out);
        if (analyze_cmd->parsed()) return cmd_analyze(ana, out);
        if (correlate->parsed()) return cmd_correlate(cor, out);
        if (detect->parsed()) return cmd_detect(det, out);
    } catch (const UsageError& e) {
        err << "qim: usage error: " << one_line(e.what()) << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "qim: error: " << one_line(e.what()) << "\n";
        return 1;
    }
    return 2;
}

} // namespace qim
