#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <unistd.h>
#include <vector>

#include "retina/error.hpp"
#include "retina/eval.hpp"
#include "retina/image_io.hpp"
#include "retina/pmi.hpp"
#include "retina/rca.hpp"
#include "retina/rng.hpp"
#include "retina/sequence.hpp"
#include "retina/synth.hpp"

namespace fs = std::filesystem;
using namespace retina;

namespace {

int exit_code_for(const Error& e) { return e.code() == ErrorCode::internal ? 2 : 1; }

void print_error(const std::string& code, const std::string& detail) {
    std::cerr << "error: " << code << ": " << detail << "\n";
}

// Staged output directory: work happens in a temp sibling, which is moved into
// place only on success, so failures never leave partial output trees.
class StagedDir {
public:
    explicit StagedDir(fs::path target) : target_(std::move(target)) {
        fs::path parent = target_.parent_path();
        if (parent.empty()) parent = ".";
        std::error_code ec;
        fs::create_directories(parent, ec);
        stage_ = parent / (target_.filename().string() + ".tmp-" +
                           std::to_string(::getpid()) + "-" + std::to_string(counter_++));
        if (!fs::create_directories(stage_, ec) || ec)
            fail(ErrorCode::io, "cannot create staging directory " + stage_.string());
    }

    ~StagedDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(stage_, ec);
        }
    }

    const fs::path& path() const { return stage_; }

    void commit() {
        std::error_code ec;
        if (!fs::exists(target_)) {
            fs::rename(stage_, target_, ec);
            if (!ec) {
                committed_ = true;
                return;
            }
        }
        // Target exists (or rename crossed devices): move entries one by one.
        fs::create_directories(target_, ec);
        for (const auto& entry : fs::directory_iterator(stage_)) {
            const fs::path dest = target_ / entry.path().filename();
            fs::remove_all(dest, ec);
            fs::rename(entry.path(), dest, ec);
            if (ec) fail(ErrorCode::io, "cannot move output into " + dest.string());
        }
        fs::remove_all(stage_, ec);
        committed_ = true;
    }

private:
    static inline std::atomic<int> counter_{0};
    fs::path target_;
    fs::path stage_;
    bool committed_ = false;
};

RcaParams resolve_params(const std::string& params_flag) {
    std::string source = params_flag;
    if (source.empty()) {
        if (const char* env = std::getenv("RETINA_PARAMS")) source = env;
    }
    if (source.empty()) return params_default();
    return params_from_file(source);
}

// --- precompute --------------------------------------------------------------

struct PrecomputeArgs {
    std::vector<std::string> manifests;
    std::string out;
    std::string params;
    std::string trace;
    int trace_frame = 1;
    int jobs = 1;
};

int run_precompute(const PrecomputeArgs& args) {
    const RcaParams params = resolve_params(args.params);
    std::vector<SequenceManifest> manifests;
    manifests.reserve(args.manifests.size());
    for (const std::string& m : args.manifests) manifests.push_back(load_manifest(m));

    StagedDir stage(fs::path(args.out));
    const bool flat = manifests.size() == 1;

    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    struct Failure {
        size_t index;
        ErrorCode code;
        std::string detail;
    };
    std::vector<Failure> errors;

    auto worker = [&]() {
        for (;;) {
            const size_t index = next.fetch_add(1);
            if (index >= manifests.size()) return;
            try {
                PrecomputeOptions options;
                options.out_dir = flat ? stage.path()
                                       : stage.path() / manifests[index].sequence_id;
                if (!args.trace.empty() && index == 0) {
                    options.trace = true;
                    options.trace_dir = fs::path(args.trace);
                    options.trace_frame = args.trace_frame;
                }
                precompute_sequence(manifests[index], params, options);
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                errors.push_back({index, e.code(), e.detail()});
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                errors.push_back({index, ErrorCode::internal, e.what()});
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(args.jobs, int(manifests.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!errors.empty()) {
        std::sort(errors.begin(), errors.end(),
                  [](const Failure& a, const Failure& b) { return a.index < b.index; });
        throw Error(errors.front().code, errors.front().detail);
    }
    stage.commit();
    return 0;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int frames = 50;
    std::uint64_t seed = 0;
    std::string preset;
    int height = 256, width = 256;
    std::vector<std::string> targets;  // "x,y,vx,vy,sigma,amplitude"
    double bg_base = 0.2, bg_noise = 0.0, bg_texture_amp = 0.0, bg_texture_period = 64.0;
    std::vector<double> bg_drift;  // vx vy
    double gt_half_width = 2.0;
};

TargetSpec parse_target(const std::string& text) {
    std::istringstream in(text);
    std::vector<double> vals;
    std::string tok;
    while (std::getline(in, tok, ',')) {
        try {
            vals.push_back(std::stod(tok));
        } catch (const std::exception&) {
            fail(ErrorCode::parameter, "invalid --target component '" + tok + "'");
        }
    }
    if (vals.size() != 6)
        fail(ErrorCode::parameter, "--target expects x,y,vx,vy,sigma,amplitude");
    TargetSpec t;
    t.start_x = vals[0];
    t.start_y = vals[1];
    t.vx = vals[2];
    t.vy = vals[3];
    t.sigma = vals[4];
    t.amplitude = vals[5];
    return t;
}

int run_synth(const SynthArgs& args) {
    SynthConfig config;
    std::string sequence_name = "synth";
    if (!args.preset.empty()) {
        if (args.preset != "moving-blob")
            fail(ErrorCode::parameter, "unknown preset '" + args.preset + "'");
        config = moving_blob_preset(args.frames, args.seed);
        sequence_name = args.preset;
    } else {
        config.height = args.height;
        config.width = args.width;
        config.num_frames = args.frames;
        config.seed = args.seed;
        config.background.base = args.bg_base;
        config.background.noise_sigma = args.bg_noise;
        config.background.texture_amp = args.bg_texture_amp;
        config.background.texture_period = args.bg_texture_period;
        if (!args.bg_drift.empty()) {
            if (args.bg_drift.size() != 2)
                fail(ErrorCode::parameter, "--bg-drift expects two values: vx vy");
            config.background.drift_vx = args.bg_drift[0];
            config.background.drift_vy = args.bg_drift[1];
        }
        config.gt_half_width_sigmas = args.gt_half_width;
        for (const std::string& t : args.targets) config.targets.push_back(parse_target(t));
    }

    const SynthSequence seq = generate(config);

    StagedDir stage(fs::path(args.out));
    std::ofstream manifest(stage.path() / (sequence_name + ".manifest"));
    std::ofstream gt(stage.path() / "gt.txt");
    if (!manifest || !gt) fail(ErrorCode::io, "cannot write into " + stage.path().string());
    gt << "# frame_id x_min y_min x_max y_max\n";
    char name[64];
    for (size_t f = 0; f < seq.frames.size(); ++f) {
        std::snprintf(name, sizeof name, "frame_%05zu.pgm", f);
        // Frames are stored as 8-bit images; scale [0,1] to [0,255] first.
        Grid scaled = seq.frames[f] * 255.0;
        save_motion_map(scaled, stage.path() / name);
        manifest << name << "\n";
        std::snprintf(name, sizeof name, "frame_%05zu", f);
        for (const GtBox& box : seq.boxes[f]) {
            char line[256];
            std::snprintf(line, sizeof line, "%s %.6f %.6f %.6f %.6f\n", name, box.x_min,
                          box.y_min, box.x_max, box.y_max);
            gt << line;
        }
    }
    manifest.close();
    gt.close();
    stage.commit();
    return 0;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
    std::string pred;
    std::string gt;
    double iou = 0.5;
    double nms = 0.65;
    double conf = 0.001;
    std::string pr_out;
    std::string ap_mode = "101";
};

int run_eval(const EvalArgs& args) {
    const auto dets = load_detections(args.pred);
    const auto gts = load_gt(args.gt);
    const ApInterpolation mode =
        args.ap_mode == "all" ? ApInterpolation::all_points : ApInterpolation::points_101;
    if (args.ap_mode != "all" && args.ap_mode != "101")
        fail(ErrorCode::parameter, "--ap-mode must be '101' or 'all'");
    const EvalSummary summary = evaluate(dets, gts, args.iou, args.nms, args.conf, mode);
    std::printf("tp=%ld\nfp=%ld\nfn=%ld\n", summary.tp, summary.fp, summary.fn);
    std::printf("precision=%.6f\nrecall=%.6f\nf1=%.6f\nap50=%.6f\n", summary.prf.precision,
                summary.prf.recall, summary.prf.f1, summary.ap50);
    if (!args.pr_out.empty()) {
        std::ofstream out(args.pr_out);
        if (!out) fail(ErrorCode::io, "cannot write " + args.pr_out);
        export_pr_curve(summary.sweep, out);
    }
    return 0;
}

// --- inspect -------------------------------------------------------------------

struct InspectArgs {
    std::string manifest;
    int frame = 1;
    std::string out;
    std::string params;
};

int run_inspect(const InspectArgs& args) {
    const SequenceManifest manifest = load_manifest(args.manifest);
    if (args.frame < 1 || size_t(args.frame) > manifest.frame_paths.size())
        fail(ErrorCode::parameter,
             "frame index " + std::to_string(args.frame) + " outside manifest of length " +
                 std::to_string(manifest.frame_paths.size()));
    RcaEngine engine(resolve_params(args.params), /*trace_enabled=*/true);
    engine.reset();
    for (int i = 0; i < args.frame; ++i)
        engine.step(load_frame(manifest.frame_paths[size_t(i)]));

    StagedDir stage{fs::path(args.out)};
    dump_trace(*engine.last_trace(), stage.path());
    stage.commit();
    return 0;
}

// --- pmi-demo ------------------------------------------------------------------

struct PmiDemoArgs {
    std::uint64_t seed = 0;
    int channels = 128;
    int heads = 8;
    int height = 64;
    int width = 64;
    double w_pool = 0.5;
    std::string mode = "bilinear";
};

FeatureBlock random_block(int channels, int height, int width, std::uint64_t seed) {
    FeatureBlock b = feature_block(channels, height, width);
    rng::Stream stream(seed);
    for (Eigen::Index c = 0; c < b.data.rows(); ++c)
        for (Eigen::Index p = 0; p < b.data.cols(); ++p) b.data(c, p) = stream.next_symmetric(1.0);
    return b;
}

int run_pmi_demo(const PmiDemoArgs& args) {
    PmiConfig config;
    config.channels = args.channels;
    config.heads = args.heads;
    config.seed = args.seed;
    config.w_pool = args.w_pool;
    if (args.mode != "nearest" && args.mode != "bilinear")
        fail(ErrorCode::parameter, "--mode must be 'bilinear' or 'nearest'");
    config.upsample = args.mode == "nearest" ? Upsample::nearest : Upsample::bilinear;
    pmi_validate(config);

    const PmiWeights weights = PmiWeights::seeded(config);
    const FeatureBlock f_p = random_block(config.channels, args.height, args.width, args.seed + 1);
    const FeatureBlock f_m = random_block(config.channels, args.height, args.width, args.seed + 2);

    std::printf("channels=%d\nheads=%d\nhead_dim=%d\ntokens=%d\n", config.channels, config.heads,
                config.head_dim(), config.tokens());

    // Softmax normalization across all heads of both directions.
    const Eigen::MatrixXd tok_p = pool_tokens(f_p, config);
    const Eigen::MatrixXd tok_m = pool_tokens(f_m, config);
    double max_dev = 0.0;
    for (int dir = 0; dir < 2; ++dir) {
        std::vector<Eigen::MatrixXd> attention;
        multi_head_attention(dir == 0 ? tok_p : tok_m, dir == 0 ? tok_m : tok_p,
                             dir == 0 ? weights.p_from_m : weights.m_from_p, config, &attention);
        for (const auto& head : attention)
            for (Eigen::Index row = 0; row < head.rows(); ++row)
                max_dev = std::max(max_dev, std::fabs(head.row(row).sum() - 1.0));
    }
    std::printf("softmax_row_sum_max_dev=%.3g\n", max_dev);

    const PmiOutput out = pmi_forward(f_p, f_m, weights, config);
    std::printf("p_out_shape=%dx%dx%d\n", out.p_out.channels, out.p_out.height, out.p_out.width);
    std::printf("m_out_shape=%dx%dx%d\n", out.m_out.channels, out.m_out.height, out.m_out.width);
    std::printf("fused_shape=%dx%dx%d\n", out.fused.channels, out.fused.height, out.fused.width);

    // Residual identity with zeroed back-projections.
    PmiWeights zero_phi = weights;
    zero_phi.p_from_m.phi.setZero();
    zero_phi.m_from_p.phi.setZero();
    const PmiOutput res = pmi_forward(f_p, f_m, zero_phi, config);
    const double residual_dev = (res.p_out.data - f_p.data).cwiseAbs().maxCoeff();
    std::printf("zero_phi_residual_max_dev=%.3g\n", residual_dev);

    // Bitwise determinism of the seeded forward pass.
    const PmiOutput again = pmi_forward(f_p, f_m, PmiWeights::seeded(config), config);
    const bool deterministic = again.p_out.data == out.p_out.data &&
                               again.m_out.data == out.m_out.data &&
                               again.fused.data == out.fused.data;
    std::printf("deterministic=%s\n", deterministic ? "true" : "false");

    const bool ok = max_dev <= 1e-6 && residual_dev == 0.0 && deterministic;
    std::printf("invariants=%s\n", ok ? "pass" : "fail");
    if (!ok) {
        print_error("internal", "PMI invariant check failed");
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Retina-inspired motion toolkit: converts infrared frame sequences into "
                 "pixel-aligned motion maps, generates synthetic sequences, and evaluates "
                 "detections"};
    app.require_subcommand(1);

    PrecomputeArgs pre;
    auto* cmd_pre = app.add_subcommand("precompute", "Compute motion maps for frame sequences");
    cmd_pre->add_option("--manifest", pre.manifests, "Sequence manifest file (repeatable)")
        ->required();
    cmd_pre->add_option("--out", pre.out, "Output directory")->required();
    cmd_pre->add_option("--params", pre.params,
                        "Parameter config file (default: $RETINA_PARAMS if set)");
    cmd_pre->add_option("--trace", pre.trace, "Directory for per-layer dumps of one frame");
    cmd_pre->add_option("--trace-frame", pre.trace_frame, "1-based frame index to trace")
        ->capture_default_str();
    cmd_pre->add_option("--jobs", pre.jobs, "Parallel workers across manifests")
        ->capture_default_str();

    SynthArgs synth;
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic infrared sequence");
    cmd_synth->add_option("--out", synth.out, "Output directory")->required();
    cmd_synth->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
    cmd_synth->add_option("--seed", synth.seed, "Noise seed")->capture_default_str();
    cmd_synth->add_option("--preset", synth.preset, "Scenario preset (moving-blob)");
    cmd_synth->add_option("--height", synth.height, "Frame height")->capture_default_str();
    cmd_synth->add_option("--width", synth.width, "Frame width")->capture_default_str();
    cmd_synth->add_option("--target", synth.targets,
                          "Target as x,y,vx,vy,sigma,amplitude (repeatable)");
    cmd_synth->add_option("--bg-base", synth.bg_base, "Background level")->capture_default_str();
    cmd_synth->add_option("--bg-noise", synth.bg_noise, "Background noise sigma")
        ->capture_default_str();
    cmd_synth->add_option("--bg-drift", synth.bg_drift, "Background drift vx vy")->expected(2);
    cmd_synth->add_option("--bg-texture-amp", synth.bg_texture_amp, "Background texture amplitude")
        ->capture_default_str();
    cmd_synth->add_option("--bg-texture-period", synth.bg_texture_period,
                          "Background texture wavelength px")
        ->capture_default_str();
    cmd_synth->add_option("--gt-half-width-sigmas", synth.gt_half_width,
                          "Ground-truth half-width in sigmas")
        ->capture_default_str();

    EvalArgs ev;
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate detections against ground truth");
    cmd_eval->add_option("--pred", ev.pred, "Detection records file")->required();
    cmd_eval->add_option("--gt", ev.gt, "Ground-truth records file")->required();
    cmd_eval->add_option("--iou", ev.iou, "Matching IoU threshold")->capture_default_str();
    cmd_eval->add_option("--nms", ev.nms, "NMS IoU threshold")->capture_default_str();
    cmd_eval->add_option("--conf", ev.conf, "Confidence floor (strict)")->capture_default_str();
    cmd_eval->add_option("--pr-out", ev.pr_out, "Write the PR curve to this CSV file");
    cmd_eval->add_option("--ap-mode", ev.ap_mode, "AP interpolation: 101 or all")
        ->capture_default_str();

    InspectArgs ins;
    auto* cmd_inspect = app.add_subcommand("inspect", "Dump per-layer automaton internals");
    cmd_inspect->add_option("--manifest", ins.manifest, "Sequence manifest file")->required();
    cmd_inspect->add_option("--frame", ins.frame, "1-based frame index to dump")
        ->capture_default_str();
    cmd_inspect->add_option("--out", ins.out, "Output directory")->required();
    cmd_inspect->add_option("--params", ins.params,
                            "Parameter config file (default: $RETINA_PARAMS if set)");

    PmiDemoArgs demo;
    auto* cmd_demo = app.add_subcommand("pmi-demo", "Run the pathway-interconnection forward "
                                                    "pass and print invariant checks");
    cmd_demo->add_option("--seed", demo.seed, "Weight/input seed")->capture_default_str();
    cmd_demo->add_option("--channels", demo.channels, "Feature channels")->capture_default_str();
    cmd_demo->add_option("--heads", demo.heads, "Attention heads")->capture_default_str();
    cmd_demo->add_option("--height", demo.height, "Feature height")->capture_default_str();
    cmd_demo->add_option("--width", demo.width, "Feature width")->capture_default_str();
    cmd_demo->add_option("--w-pool", demo.w_pool, "Average/max pooling blend weight")
        ->capture_default_str();
    cmd_demo->add_option("--mode", demo.mode, "Upsampling: bilinear or nearest")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (cmd_pre->parsed()) return run_precompute(pre);
        if (cmd_synth->parsed()) return run_synth(synth);
        if (cmd_eval->parsed()) return run_eval(ev);
        if (cmd_inspect->parsed()) return run_inspect(ins);
        if (cmd_demo->parsed()) return run_pmi_demo(demo);
    } catch (const Error& e) {
        print_error(error_code_name(e.code()), e.detail());
        return exit_code_for(e);
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 2;
    }
    return 0;
}
