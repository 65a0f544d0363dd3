#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "steploc/json_io.hpp"
#include "steploc/metrics.hpp"
#include "steploc/order_dependency.hpp"
#include "steploc/parallel.hpp"
#include "steploc/postprocess.hpp"
#include "steploc/synth.hpp"
#include "steploc/task_consistency.hpp"

namespace {

using namespace steploc;

// Bad flag values exit with 2, file/schema problems with 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_alphas(const std::string& text) {
    std::vector<double> alphas;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            const double value = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            alphas.push_back(value);
        } catch (const std::exception&) {
            throw UsageError("--alphas: cannot parse \"" + item + "\"");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return alphas;
}

Distribution parse_dist(const std::string& name) {
    if (name == "gaussian") return Distribution::gaussian;
    if (name == "triangle") return Distribution::triangle;
    throw UsageError("--dist: expected gaussian|triangle, got \"" + name + "\"");
}

Fusion parse_fusion(const std::string& name) {
    if (name == "weighted") return Fusion::weighted_sum;
    if (name == "rms") return Fusion::rms;
    if (name == "geometric") return Fusion::geometric;
    if (name == "max") return Fusion::max_pool;
    throw UsageError("--fusion: expected weighted|rms|geometric|max, got \"" + name + "\"");
}

WatershedCriterion parse_criterion(const std::string& name) {
    if (name == "gap") return WatershedCriterion::avg_gap;
    if (name == "len") return WatershedCriterion::avg_len;
    throw UsageError("--criterion: expected gap|len, got \"" + name + "\"");
}

struct TcArgs {
    std::string proposals, lexicon, out, tasks_out, aggregate = "sum";
    double gamma = 0.1353353;
};

int run_tc(const TcArgs& args, int threads) {
    TcConfig cfg;
    cfg.gamma = args.gamma;
    if (args.gamma < 0.0 || args.gamma > 1.0) throw UsageError("--gamma must lie in [0, 1]");
    if (args.aggregate == "sum")
        cfg.aggregate = Aggregate::sum;
    else if (args.aggregate == "average")
        cfg.aggregate = Aggregate::average;
    else
        throw UsageError("--aggregate: expected sum|average, got \"" + args.aggregate + "\"");

    const Lexicon lexicon = load_lexicon(args.lexicon);
    std::vector<ProposalSet> videos = load_proposals(args.proposals, lexicon.step_count());
    std::vector<ProposalSet> refined(videos.size());
    std::vector<int> tasks(videos.size());
    parallel_for(static_cast<int>(videos.size()), threads, [&](int i) {
        TcResult result = apply_tc(videos[i], lexicon, cfg);
        refined[i] = std::move(result.refined);
        tasks[i] = result.predicted_task;
    });
    write_proposals(args.out, refined);

    const std::string tasks_path = args.tasks_out.empty() ? args.out + ".tasks.json" : args.tasks_out;
    std::ostringstream sidecar;
    sidecar << "{\"videos\":[";
    for (std::size_t i = 0; i < videos.size(); ++i) {
        if (i) sidecar << ',';
        sidecar << "{\"task\":" << tasks[i] << ",\"video_id\":\"" << jsonio::escape(videos[i].video_id) << "\"}";
    }
    sidecar << "]}\n";
    jsonio::write_file(tasks_path, sidecar.str());
    return 0;
}

struct TransitionsArgs {
    std::string annotations, lexicon, out;
};

int run_transitions(const TransitionsArgs& args) {
    const Lexicon lexicon = load_lexicon(args.lexicon);
    const AnnotationSet annotations = load_annotations(args.annotations, &lexicon);
    write_transitions(args.out, build_transition(annotations, lexicon.step_count()));
    return 0;
}

struct OdArgs {
    std::string proposals, transitions, out;
    std::string dist = "gaussian", fusion = "weighted", criterion = "gap";
    double lambda1 = 0.0, lambda2 = 1.0, beta = 1.0, theta_gap = 6.0, theta_len = 15.0;
    int slots = 100;
};

int run_od(const OdArgs& args, int threads) {
    OdConfig cfg;
    cfg.lambda1 = args.lambda1;
    cfg.lambda2 = args.lambda2;
    if (std::abs(args.lambda1 + args.lambda2 - 1.0) > 1e-9 || args.lambda1 < 0.0 || args.lambda2 < 0.0)
        throw UsageError("lambda1+lambda2 must equal 1");
    cfg.curve.dist = parse_dist(args.dist);
    cfg.curve.beta = args.beta;
    if (!(args.beta > 0.0)) throw UsageError("--beta must be > 0");
    cfg.slots = args.slots;
    if (args.slots < 2) throw UsageError("--slots must be >= 2");
    cfg.fusion = parse_fusion(args.fusion);
    cfg.watershed.criterion = parse_criterion(args.criterion);
    cfg.watershed.theta_gap = args.theta_gap;
    cfg.watershed.theta_len = args.theta_len;
    if (!(args.theta_gap > 0.0)) throw UsageError("--theta-gap must be > 0");
    if (!(args.theta_len > 0.0)) throw UsageError("--theta-len must be > 0");

    const TransitionModel model = load_transitions(args.transitions);
    std::vector<ProposalSet> videos = load_proposals(args.proposals, model.num_steps);
    std::vector<ProposalSet> refined(videos.size());
    parallel_for(static_cast<int>(videos.size()), threads,
                 [&](int i) { refined[i] = apply_od(videos[i], model, cfg); });
    write_proposals(args.out, refined);
    return 0;
}

struct NmsArgs {
    std::string proposals, out;
    double threshold = 0.6;
};

int run_nms(const NmsArgs& args, int threads) {
    if (!(args.threshold > 0.0) || args.threshold > 1.0)
        throw UsageError("--nms-threshold must lie in (0, 1]");
    NmsConfig cfg{args.threshold};
    const std::vector<ProposalSet> videos = load_proposals(args.proposals);
    DetectionSet out;
    out.videos.resize(videos.size());
    parallel_for(static_cast<int>(videos.size()), threads, [&](int i) {
        out.videos[i].video_id = videos[i].video_id;
        out.videos[i].detections = nms(videos[i], cfg);
    });
    write_detections(args.out, out);
    return 0;
}

struct EvalMapArgs {
    std::string detections, annotations, out;
    std::string alphas = "0.1,0.2,0.3,0.4,0.5";
};

int run_eval_map(const EvalMapArgs& args) {
    EvalConfig cfg;
    cfg.alphas = parse_alphas(args.alphas);
    try {
        validate_eval_config(cfg);
    } catch (const ValidationError& e) {
        throw UsageError(std::string("--alphas: ") + e.what());
    }
    const DetectionSet detections = load_detections(args.detections);
    const AnnotationSet annotations = load_annotations(args.annotations);
    const MetricReport report = evaluate_detections(detections, annotations, cfg);

    std::printf("%-8s %-10s %-10s\n", "alpha", "mAP", "mAR");
    for (const auto& ar : report.per_alpha)
        std::printf("%-8s %-10.4f %-10.4f\n", format_number(ar.alpha).c_str(), ar.map, ar.mar);

    if (!args.out.empty()) {
        std::ostringstream csv;
        csv << "metric,alpha,class_or_task,value\n";
        for (const auto& ar : report.per_alpha) {
            for (const auto& ce : ar.per_class)
                csv << "AP," << format_number(ar.alpha) << ',' << ce.class_id << ',' << format_number(ce.ap)
                    << "\n";
            for (const auto& ce : ar.per_class)
                csv << "AR," << format_number(ar.alpha) << ',' << ce.class_id << ','
                    << format_number(ce.recall) << "\n";
        }
        for (const auto& ar : report.per_alpha)
            csv << "mAP," << format_number(ar.alpha) << ",mean," << format_number(ar.map) << "\n";
        for (const auto& ar : report.per_alpha)
            csv << "mAR," << format_number(ar.alpha) << ",mean," << format_number(ar.mar) << "\n";
        jsonio::write_file(args.out, csv.str());
    }
    return 0;
}

struct EvalFramesArgs {
    std::string detections, annotations, out;
    double fps = 10.0;
};

int run_eval_frames(const EvalFramesArgs& args) {
    if (!(args.fps > 0.0)) throw UsageError("--fps must be > 0");
    const DetectionSet detections = load_detections(args.detections);
    const AnnotationSet annotations = load_annotations(args.annotations);
    const double accuracy = frame_accuracy_eval(detections, annotations, args.fps);
    std::printf("frame_accuracy %.4f\n", accuracy);
    if (!args.out.empty()) {
        std::ostringstream csv;
        csv << "metric,alpha,class_or_task,value\n";
        csv << "frame_accuracy,,all," << format_number(accuracy) << "\n";
        jsonio::write_file(args.out, csv.str());
    }
    return 0;
}

struct StatsArgs {
    std::string annotations, lexicon, out;
};

int run_stats(const StatsArgs& args) {
    const Lexicon lexicon = load_lexicon(args.lexicon);
    const AnnotationSet annotations = load_annotations(args.annotations, &lexicon);
    const OrderStatsReport report = mss_oce(annotations, lexicon);

    std::printf("%-8s %-8s %-10s %-10s\n", "task", "videos", "MSS", "OCE");
    for (const auto& t : report.per_task)
        std::printf("%-8d %-8d %-10.4f %-10.4f\n", t.task_id, t.n_videos, t.mss, t.oce);
    std::printf("%-8s %-8s %-10.4f %-10.4f\n", "mean", "-", report.mean_mss, report.mean_oce);

    if (!args.out.empty()) {
        std::ostringstream csv;
        csv << "metric,alpha,class_or_task,value\n";
        for (const auto& t : report.per_task)
            csv << "MSS,," << t.task_id << ',' << format_number(t.mss) << "\n";
        for (const auto& t : report.per_task)
            csv << "OCE,," << t.task_id << ',' << format_number(t.oce) << "\n";
        csv << "MSS,,mean," << format_number(report.mean_mss) << "\n";
        csv << "OCE,,mean," << format_number(report.mean_oce) << "\n";
        jsonio::write_file(args.out, csv.str());
    }
    return 0;
}

struct SynthArgs {
    SynthConfig cfg;
    std::string out_dir;
    std::string config_path;
};

// key=value lines matching the synth flag names; command-line flags win.
void apply_synth_config_file(SynthArgs& args, const CLI::App* cmd) {
    std::ifstream in(args.config_path);
    if (!in) throw ValidationError(args.config_path + ": cannot open file");
    auto trim = [](std::string s) {
        const auto from = s.find_first_not_of(" \t\r");
        const auto to = s.find_last_not_of(" \t\r");
        return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
    };
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(args.config_path + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (cmd->count("--" + key) > 0) continue;  // flag overrides config
        try {
            if (key == "seed")
                args.cfg.seed = std::stoull(value);
            else if (key == "tasks")
                args.cfg.n_tasks = std::stoi(value);
            else if (key == "steps-per-task")
                args.cfg.steps_per_task = std::stoi(value);
            else if (key == "videos")
                args.cfg.n_videos = std::stoi(value);
            else if (key == "drop-prob")
                args.cfg.drop_prob = std::stod(value);
            else if (key == "swap-prob")
                args.cfg.swap_prob = std::stod(value);
            else if (key == "jitter-s")
                args.cfg.jitter_s = std::stod(value);
            else if (key == "confusion-prob")
                args.cfg.confusion_prob = std::stod(value);
            else if (key == "proposals-per-segment")
                args.cfg.proposals_per_segment = std::stoi(value);
            else if (key == "out-dir")
                args.out_dir = value;
            else
                throw UsageError(args.config_path + ": unknown key \"" + key + "\"");
        } catch (const UsageError&) {
            throw;
        } catch (const std::exception&) {
            throw UsageError(args.config_path + ": cannot parse value for \"" + key + "\"");
        }
    }
}

int run_synth(SynthArgs& args, const CLI::App* cmd) {
    if (!args.config_path.empty()) apply_synth_config_file(args, cmd);
    if (args.out_dir.empty()) throw UsageError("--out-dir is required");
    try {
        validate_synth_config(args.cfg);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    write_corpus(args.out_dir, generate_corpus(args.cfg));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Step localization score refinement and evaluation toolkit"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads; never changes output bytes")
        ->capture_default_str();

    TcArgs tc_args;
    auto* tc_cmd = app.add_subcommand("tc", "task-consistency score refinement");
    tc_cmd->add_option("--proposals", tc_args.proposals, "proposals.json input")->required();
    tc_cmd->add_option("--lexicon", tc_args.lexicon, "lexicon.json input")->required();
    tc_cmd->add_option("--gamma", tc_args.gamma, "attenuation for steps outside the predicted task")
        ->capture_default_str();
    tc_cmd->add_option("--aggregate", tc_args.aggregate, "task score aggregation: sum|average")
        ->capture_default_str();
    tc_cmd->add_option("--out", tc_args.out, "refined proposals.json output")->required();
    tc_cmd->add_option("--tasks-out", tc_args.tasks_out,
                       "predicted-task sidecar path (default: <out>.tasks.json)");

    TransitionsArgs tr_args;
    auto* tr_cmd = app.add_subcommand("transitions", "build the step transition model");
    tr_cmd->add_option("--annotations", tr_args.annotations, "training annotations.json")->required();
    tr_cmd->add_option("--lexicon", tr_args.lexicon, "lexicon.json input")->required();
    tr_cmd->add_option("--out", tr_args.out, "transitions.json output")->required();

    OdArgs od_args;
    auto* od_cmd = app.add_subcommand("od", "ordering-dependency score refinement");
    od_cmd->add_option("--proposals", od_args.proposals, "proposals.json input")->required();
    od_cmd->add_option("--transitions", od_args.transitions, "transitions.json input")->required();
    od_cmd->add_option("--lambda1", od_args.lambda1, "weight of the observed score")->capture_default_str();
    od_cmd->add_option("--lambda2", od_args.lambda2, "weight of the ordering prior")->capture_default_str();
    od_cmd->add_option("--dist", od_args.dist, "proposal curve: gaussian|triangle")->capture_default_str();
    od_cmd->add_option("--beta", od_args.beta, "gaussian std-dev factor")->capture_default_str();
    od_cmd->add_option("--slots", od_args.slots, "time slots per video")->capture_default_str();
    od_cmd->add_option("--criterion", od_args.criterion, "watershed termination: gap|len")
        ->capture_default_str();
    od_cmd->add_option("--theta-gap", od_args.theta_gap, "avg inter-segment gap bound, in slots")
        ->capture_default_str();
    od_cmd->add_option("--theta-len", od_args.theta_len, "avg segment length bound, in slots")
        ->capture_default_str();
    od_cmd->add_option("--fusion", od_args.fusion, "score fusion: weighted|rms|geometric|max")
        ->capture_default_str();
    od_cmd->add_option("--out", od_args.out, "refined proposals.json output")->required();

    NmsArgs nms_args;
    auto* nms_cmd = app.add_subcommand("nms", "class-wise NMS into detections");
    nms_cmd->add_option("--proposals", nms_args.proposals, "proposals.json input")->required();
    nms_cmd->add_option("--nms-threshold", nms_args.threshold, "IoU suppression threshold")
        ->capture_default_str();
    nms_cmd->add_option("--out", nms_args.out, "detections.json output")->required();

    EvalMapArgs em_args;
    auto* em_cmd = app.add_subcommand("eval-map", "mAP/mAR evaluation");
    em_cmd->add_option("--detections", em_args.detections, "detections.json input")->required();
    em_cmd->add_option("--annotations", em_args.annotations, "ground-truth annotations.json")->required();
    em_cmd->add_option("--alphas", em_args.alphas, "comma-separated IoU thresholds")->capture_default_str();
    em_cmd->add_option("--out", em_args.out, "CSV report path");

    EvalFramesArgs ef_args;
    auto* ef_cmd = app.add_subcommand("eval-frames", "frame accuracy evaluation");
    ef_cmd->add_option("--detections", ef_args.detections, "detections.json input")->required();
    ef_cmd->add_option("--annotations", ef_args.annotations, "ground-truth annotations.json")->required();
    ef_cmd->add_option("--fps", ef_args.fps, "sampling rate")->capture_default_str();
    ef_cmd->add_option("--out", ef_args.out, "CSV report path");

    StatsArgs st_args;
    auto* st_cmd = app.add_subcommand("stats", "per-task MSS/OCE ordering statistics");
    st_cmd->add_option("--annotations", st_args.annotations, "annotations.json input")->required();
    st_cmd->add_option("--lexicon", st_args.lexicon, "lexicon.json input")->required();
    st_cmd->add_option("--out", st_args.out, "CSV report path");

    SynthArgs sy_args;
    auto* sy_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    sy_cmd->add_option("--config", sy_args.config_path, "key=value config file; flags override");
    sy_cmd->add_option("--seed", sy_args.cfg.seed, "corpus seed")->capture_default_str();
    sy_cmd->add_option("--tasks", sy_args.cfg.n_tasks, "number of tasks")->capture_default_str();
    sy_cmd->add_option("--steps-per-task", sy_args.cfg.steps_per_task, "steps per task")
        ->capture_default_str();
    sy_cmd->add_option("--videos", sy_args.cfg.n_videos, "videos per split")->capture_default_str();
    sy_cmd->add_option("--drop-prob", sy_args.cfg.drop_prob, "per-step drop probability")
        ->capture_default_str();
    sy_cmd->add_option("--swap-prob", sy_args.cfg.swap_prob, "adjacent swap probability")
        ->capture_default_str();
    sy_cmd->add_option("--jitter-s", sy_args.cfg.jitter_s, "boundary noise in seconds")
        ->capture_default_str();
    sy_cmd->add_option("--confusion-prob", sy_args.cfg.confusion_prob,
                       "probability of leaking score mass to a foreign-task step")
        ->capture_default_str();
    sy_cmd->add_option("--proposals-per-segment", sy_args.cfg.proposals_per_segment,
                       "detector proposals per true segment")
        ->capture_default_str();
    sy_cmd->add_option("--out-dir", sy_args.out_dir, "corpus output directory");

    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (*tc_cmd) return run_tc(tc_args, threads);
        if (*tr_cmd) return run_transitions(tr_args);
        if (*od_cmd) return run_od(od_args, threads);
        if (*nms_cmd) return run_nms(nms_args, threads);
        if (*em_cmd) return run_eval_map(em_args);
        if (*ef_cmd) return run_eval_frames(ef_args);
        if (*st_cmd) return run_stats(st_args);
        if (*sy_cmd) return run_synth(sy_args, sy_cmd);
    } catch (const UsageError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
