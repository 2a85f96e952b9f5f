#include "cli.hpp"

#include "otflow/io.hpp"
#include "otflow/metrics.hpp"
#include "otflow/normals.hpp"
#include "otflow/pipeline.hpp"
#include "otflow/synth.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace otflow::cli {

namespace {

std::string fmt(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

void apply_measures(CostParams& cost, const std::string& csv) {
    bool coord = false, color = false, normal = false;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item == "coord")
            coord = true;
        else if (item == "color")
            color = true;
        else if (item == "normal")
            normal = true;
        else if (!item.empty())
            throw std::runtime_error("unknown measure '" + item +
                                     "' (expected coord, color, normal)");
    }
    if (!coord)
        throw std::runtime_error("the coordinate measure is mandatory; include 'coord' in --measures");
    cost.use_color = color;
    cost.use_normal = normal;
}

int parse_walk_steps(const std::string& s) {
    if (s == "inf") return kInfiniteSteps;
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < 0)
        throw std::runtime_error("--iters-walk expects a nonnegative integer or 'inf'");
    return v;
}

PointCloud load_cloud(const std::string& path, const CostParams& cost, std::size_t normals_k) {
    PointCloud cloud = read_cloud(path);
    if (cost.use_color && !cloud.has_colors())
        throw std::runtime_error("color measure enabled but '" + path + "' has no colors");
    if (cost.use_normal && !cloud.has_normals()) cloud = estimate_normals(cloud, normals_k);
    return cloud;
}

void print_timings(std::ostream& out, const StageTimings& t) {
    out << "timing_ms prewarp=" << fmt(t.prewarp_ms) << " cost=" << fmt(t.cost_ms)
        << " transport=" << fmt(t.transport_ms) << " match=" << fmt(t.match_ms)
        << " refine=" << fmt(t.refine_ms) << " propagate=" << fmt(t.propagate_ms)
        << " total=" << fmt(t.total_ms) << "\n";
}

void print_eval(std::ostream& out, const MetricReport& rep) {
    out << std::left << std::setw(8) << "metric" << "value\n";
    std::ostringstream human;
    human << std::fixed << std::setprecision(4);
    human << std::left << std::setw(8) << "EPE(m)" << rep.epe << "\n"
          << std::left << std::setw(8) << "AS(%)" << rep.as_pct << "\n"
          << std::left << std::setw(8) << "AR(%)" << rep.ar_pct << "\n"
          << std::left << std::setw(8) << "Out(%)" << rep.out_pct << "\n"
          << std::left << std::setw(8) << "points" << rep.point_count << "\n";
    out << human.str() << "\n";
    out << "epe=" << fmt(rep.epe) << "\n"
        << "as=" << fmt(rep.as_pct) << "\n"
        << "ar=" << fmt(rep.ar_pct) << "\n"
        << "out=" << fmt(rep.out_pct) << "\n"
        << "points=" << rep.point_count << "\n";
}

struct AblateRow {
    std::string block;
    std::string label;
    PipelineConfig config;
    bool prewarp_with_gt = false;
};

std::vector<AblateRow> ablate_grid() {
    std::vector<AblateRow> rows;
    const PipelineConfig base;  // defaults: ot, hard, raw, full refinement

    auto matching_row = [&](Matcher m, bool color, bool normal, const std::string& label) {
        AblateRow row{"matching", label, base, false};
        row.config.matcher = m;
        row.config.refinement = Refinement::off;
        row.config.cost.use_color = color;
        row.config.cost.use_normal = normal;
        rows.push_back(row);
    };
    matching_row(Matcher::greedy, false, false, "greedy coord");
    matching_row(Matcher::greedy, true, false, "greedy coord+color");
    matching_row(Matcher::greedy, true, true, "greedy coord+color+normal");
    matching_row(Matcher::optimal_transport, false, false, "ot coord");
    matching_row(Matcher::optimal_transport, true, false, "ot coord+color");
    matching_row(Matcher::optimal_transport, true, true, "ot coord+color+normal");

    auto strategy_row = [&](SourceMode src, MatchStrategy strat, const std::string& label) {
        AblateRow row{"strategy", label, base, src == SourceMode::prewarped};
        row.config.refinement = Refinement::off;
        row.config.source = src;
        row.config.strategy = strat;
        rows.push_back(row);
    };
    strategy_row(SourceMode::raw, MatchStrategy::hard, "raw+hard");
    strategy_row(SourceMode::prewarped, MatchStrategy::soft, "prewarp+soft");
    strategy_row(SourceMode::prewarped, MatchStrategy::hard, "prewarp+hard");

    auto refine_row = [&](Refinement r, const std::string& label) {
        AblateRow row{"refinement", label, base, false};
        row.config.refinement = r;
        rows.push_back(row);
    };
    refine_row(Refinement::off, "off");
    refine_row(Refinement::naive_smooth, "naive");
    refine_row(Refinement::undirected_only, "undirected");
    refine_row(Refinement::full, "full");

    auto steps_row = [&](int steps, const std::string& label) {
        AblateRow row{"steps", label, base, false};
        row.config.refinement = Refinement::full;
        row.config.walk.steps = steps;
        rows.push_back(row);
    };
    steps_row(1, "1");
    steps_row(5, "5");
    steps_row(10, "10");
    steps_row(20, "20");
    steps_row(kInfiniteSteps, "inf");

    return rows;
}

struct AblateScene {
    PointCloud p;
    PointCloud q;
    FlowField gt;
};

std::vector<AblateScene> load_scene_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error("ablate: not a directory: " + dir);
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        constexpr const char* kSuffix = "_p.ply";
        if (name.size() > 6 && name.ends_with(kSuffix))
            stems.push_back((fs::path(dir) / name.substr(0, name.size() - 6)).string());
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty())
        throw std::runtime_error("ablate: no scenes (*_p.ply) found in " + dir);

    std::vector<AblateScene> scenes;
    scenes.reserve(stems.size());
    for (const std::string& stem : stems) {
        AblateScene scene;
        scene.p = read_cloud(stem + "_p.ply");
        scene.q = read_cloud(stem + "_q.ply");
        scene.gt = read_flow(stem + "_gt.sfl").flow;
        if (scene.gt.size() != scene.p.size())
            throw std::runtime_error("ablate: flow/cloud size mismatch for " + stem);
        if (!scene.p.has_normals()) scene.p = estimate_normals(scene.p, kDefaultNormalNeighbors);
        if (!scene.q.has_normals()) scene.q = estimate_normals(scene.q, kDefaultNormalNeighbors);
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

void run_ablate(const std::string& dir, std::ostream& out) {
    const std::vector<AblateScene> scenes = load_scene_dir(dir);
    out << "scenes=" << scenes.size() << "\n";
    for (const AblateRow& row : ablate_grid()) {
        double as = 0.0, ar = 0.0, epe = 0.0;
        for (const AblateScene& scene : scenes) {
            const FlowField* pred = row.prewarp_with_gt ? &scene.gt : nullptr;
            const LabelReport rep = generate_labels(scene.p, scene.q, pred, row.config);
            const MetricReport m = label_coverage_quality(rep.labels, scene.gt);
            as += m.as_pct;
            ar += m.ar_pct;
            epe += m.epe;
        }
        const double n = static_cast<double>(scenes.size());
        std::ostringstream line;
        line << std::left << std::setw(11) << row.block << std::setw(26) << row.label
             << std::fixed << std::setprecision(2) << "AS=" << std::setw(7) << as / n
             << "AR=" << std::setw(7) << ar / n << std::setprecision(4) << "EPE=" << epe / n;
        out << line.str() << "\n";
    }
}

void run_bench(std::size_t points, int repeats, std::ostream& out) {
    SceneSpec spec;
    spec.body_count = 2;
    spec.points_per_body = std::max<std::size_t>(points / 2, 1);
    spec.jitter_sigma = 0.05;
    spec.outlier_fraction = 0.1;
    spec.seed = 0;
    const SynthScene scene = generate(spec);

    const PipelineConfig config;
    StageTimings sum;
    for (int r = 0; r < repeats; ++r) {
        const LabelReport rep = generate_labels(scene.p, scene.q, nullptr, config);
        sum.prewarp_ms += rep.timings.prewarp_ms;
        sum.cost_ms += rep.timings.cost_ms;
        sum.transport_ms += rep.timings.transport_ms;
        sum.match_ms += rep.timings.match_ms;
        sum.refine_ms += rep.timings.refine_ms;
        sum.propagate_ms += rep.timings.propagate_ms;
        sum.total_ms += rep.timings.total_ms;
    }
    const double n = std::max(repeats, 1);
    out << "n_p=" << scene.p.size() << " n_q=" << scene.q.size() << " repeats=" << repeats
        << "\n";
    out << std::left << std::setw(11) << "stage" << "mean_ms\n";
    std::ostringstream table;
    table << std::fixed << std::setprecision(3);
    table << std::left << std::setw(11) << "prewarp" << sum.prewarp_ms / n << "\n"
          << std::left << std::setw(11) << "cost" << sum.cost_ms / n << "\n"
          << std::left << std::setw(11) << "transport" << sum.transport_ms / n << "\n"
          << std::left << std::setw(11) << "match" << sum.match_ms / n << "\n"
          << std::left << std::setw(11) << "refine" << sum.refine_ms / n << "\n"
          << std::left << std::setw(11) << "propagate" << sum.propagate_ms / n << "\n"
          << std::left << std::setw(11) << "total" << sum.total_ms / n << "\n";
    out << table.str();
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"scene-flow pseudo-label toolkit"};
    app.require_subcommand(1);

    PipelineConfig config;  // single source of defaults for every flag below

    // --- label ---
    auto* label = app.add_subcommand("label", "generate pseudo labels for a cloud pair");
    std::string cloud1, cloud2, out_path, pred_path;
    std::string measures = "coord,color,normal";
    std::string matcher = "ot", strategy = "hard", source = "raw", refine = "full";
    std::string walk_steps = "inf";
    std::size_t normals_k = kDefaultNormalNeighbors;
    int threads = 0;
    label->add_option("cloud1", cloud1, "first frame (PLY)")->required();
    label->add_option("cloud2", cloud2, "second frame (PLY)")->required();
    label->add_option("out", out_path, "output label file (SFL1)")->required();
    label->add_option("--measures", measures, "cost measures, comma separated")
        ->capture_default_str();
    label->add_option("--matcher", matcher, "ot|greedy")->check(CLI::IsMember({"ot", "greedy"}));
    label->add_option("--strategy", strategy, "hard|soft")->check(CLI::IsMember({"hard", "soft"}));
    auto* source_opt =
        label->add_option("--source", source, "raw|prewarp")->check(CLI::IsMember({"raw", "prewarp"}));
    auto* pred_opt = label->add_option("--pred", pred_path, "predicted flow (SFL1) for prewarp");
    pred_opt->needs(source_opt);
    label->add_option("--refine", refine, "off|naive|walk|full")
        ->check(CLI::IsMember({"off", "naive", "walk", "full"}));
    label->add_option("--theta-d", config.cost.theta_d, "coordinate cost width (m)")
        ->capture_default_str();
    label->add_option("--theta-c", config.cost.theta_c, "color cost width")->capture_default_str();
    label->add_option("--theta-r", config.walk.theta_r, "walk affinity width (m)")
        ->capture_default_str();
    label->add_option("--alpha", config.walk.alpha, "walk damping")->capture_default_str();
    label->add_option("--epsilon", config.sinkhorn.epsilon, "transport regularization")
        ->capture_default_str();
    label->add_option("--iters-ot", config.sinkhorn.max_iterations, "scaling iteration cap")
        ->capture_default_str();
    label->add_option("--iters-walk", walk_steps, "walk steps, integer or 'inf'")
        ->capture_default_str();
    label->add_option("--max-disp", config.max_displacement, "label validity threshold (m)")
        ->capture_default_str();
    label->add_option("--normals-k", normals_k, "neighbors for normal estimation")
        ->capture_default_str();
    label->add_option("--naive-k", config.naive_k, "neighbors for naive smoothing")
        ->capture_default_str();
    label->add_option("--threads", threads, "worker thread count (0 = library default)");
    label->callback([&]() {
#ifdef _OPENMP
        if (threads > 0) omp_set_num_threads(threads);
#endif
        apply_measures(config.cost, measures);
        config.matcher = matcher == "ot" ? Matcher::optimal_transport : Matcher::greedy;
        config.strategy = strategy == "hard" ? MatchStrategy::hard : MatchStrategy::soft;
        config.source = source == "raw" ? SourceMode::raw : SourceMode::prewarped;
        if (refine == "off")
            config.refinement = Refinement::off;
        else if (refine == "naive")
            config.refinement = Refinement::naive_smooth;
        else if (refine == "walk")
            config.refinement = Refinement::undirected_only;
        else
            config.refinement = Refinement::full;
        config.walk.steps = parse_walk_steps(walk_steps);

        const PointCloud a = load_cloud(cloud1, config.cost, normals_k);
        const PointCloud b = load_cloud(cloud2, config.cost, normals_k);
        FlowField pred;
        const FlowField* pred_ptr = nullptr;
        if (config.source == SourceMode::prewarped) {
            if (pred_path.empty())
                throw std::runtime_error("--source prewarp needs --pred <flow file>");
            pred = read_flow(pred_path).flow;
            pred_ptr = &pred;
        }
        const LabelReport rep = generate_labels(a, b, pred_ptr, config);
        write_flow(out_path, rep.labels);
        out << "points=" << a.size() << " labeled=" << rep.labeled_count
            << " unlabeled=" << rep.unlabeled_count
            << " transport_cost=" << fmt(rep.transport_cost_total) << "\n";
        if (rep.refinement_downgraded)
            err << "warning: fewer than two labels survived the displacement filter; "
                   "refinement skipped\n";
        print_timings(out, rep.timings);
        out << "wrote " << out_path << "\n";
    });

    // --- eval ---
    auto* eval_cmd = app.add_subcommand("eval", "score a flow file against ground truth");
    std::string eval_pred, eval_gt;
    eval_cmd->add_option("pred", eval_pred, "predicted/label flow (SFL1)")->required();
    eval_cmd->add_option("gt", eval_gt, "ground-truth flow (SFL1)")->required();
    eval_cmd->callback([&]() {
        const FlowFile pred = read_flow(eval_pred);
        const FlowFile gt = read_flow(eval_gt);
        if (pred.flow.size() != gt.flow.size())
            throw std::runtime_error("eval: flow files disagree on point count");
        const MetricReport rep = pred.has_validity ? evaluate(pred.flow, gt.flow, &pred.valid)
                                                   : evaluate(pred.flow, gt.flow);
        print_eval(out, rep);
    });

    // --- synth ---
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic two-frame scene");
    std::string synth_config, synth_prefix, synth_format = "binary";
    synth_cmd->add_option("config", synth_config, "key=value scene config")->required();
    synth_cmd->add_option("out_prefix", synth_prefix, "output path prefix")->required();
    synth_cmd->add_option("--format", synth_format, "ascii|binary")
        ->check(CLI::IsMember({"ascii", "binary"}));
    synth_cmd->callback([&]() {
        const SceneSpec spec = parse_scene_spec_file(synth_config);
        const SynthScene scene = generate(spec);
        const PlyFormat ply_format =
            synth_format == "ascii" ? PlyFormat::ascii : PlyFormat::binary_little_endian;
        write_cloud(synth_prefix + "_p.ply", scene.p, ply_format);
        write_cloud(synth_prefix + "_q.ply", scene.q, ply_format);
        write_flow(synth_prefix + "_gt.sfl", scene.gt_flow);
        out << "wrote " << synth_prefix << "_p.ply (" << scene.p.size() << " points), "
            << synth_prefix << "_q.ply (" << scene.q.size() << " points), " << synth_prefix
            << "_gt.sfl\n";
    });

    // --- ablate ---
    auto* ablate_cmd = app.add_subcommand("ablate", "run the configuration grid over a scene dir");
    std::string ablate_dir;
    ablate_cmd->add_option("dir", ablate_dir, "directory of <stem>_p.ply/_q.ply/_gt.sfl scenes")
        ->required();
    ablate_cmd->callback([&]() { run_ablate(ablate_dir, out); });

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "time the pipeline stages on a synthetic pair");
    std::size_t bench_points = 2048;
    int bench_repeats = 3, bench_threads = 0;
    bench_cmd->add_option("--points", bench_points, "first-frame point count")
        ->capture_default_str();
    bench_cmd->add_option("--repeats", bench_repeats, "timing repetitions")->capture_default_str();
    bench_cmd->add_option("--threads", bench_threads, "worker thread count (0 = library default)");
    bench_cmd->callback([&]() {
#ifdef _OPENMP
        if (bench_threads > 0) omp_set_num_threads(bench_threads);
#endif
        run_bench(bench_points, bench_repeats, out);
    });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("otflow");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

MetricReport parse_eval_block(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    for (const char* key : {"epe", "as", "ar", "out", "points"})
        if (!kv.count(key))
            throw std::runtime_error(std::string("eval block: missing key '") + key + "'");
    MetricReport rep;
    rep.epe = std::stod(kv["epe"]);
    rep.as_pct = std::stod(kv["as"]);
    rep.ar_pct = std::stod(kv["ar"]);
    rep.out_pct = std::stod(kv["out"]);
    rep.point_count = std::stoull(kv["points"]);
    return rep;
}

}  // namespace otflow::cli
