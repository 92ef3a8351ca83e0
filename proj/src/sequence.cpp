#include "retina/sequence.hpp"

#include <fstream>
#include <set>

#include "retina/error.hpp"

namespace retina {

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

ImageU8 replicate3(const GridView& g, double scale) {
    ImageU8 img;
    img.height = g.rows();
    img.width = g.cols();
    img.channels = 3;
    img.pixels.resize(size_t(g.size()) * 3);
    const double* v = g.data();
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const std::uint8_t b = quantize_byte(v[i] * scale);
        img.pixels[size_t(i) * 3 + 0] = b;
        img.pixels[size_t(i) * 3 + 1] = b;
        img.pixels[size_t(i) * 3 + 2] = b;
    }
    return img;
}

}  // namespace

SequenceManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open manifest " + path.string());
    const std::filesystem::path base = path.has_parent_path() ? path.parent_path()
                                                              : std::filesystem::path(".");
    SequenceManifest manifest;
    manifest.sequence_id = path.stem().string();
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;
        if (!seen.insert(text).second)
            fail(ErrorCode::format, path.string() + ":" + std::to_string(line_no) +
                                        ": duplicate frame path '" + text + "'");
        std::filesystem::path frame(text);
        manifest.frame_paths.push_back(frame.is_absolute() ? frame : base / frame);
    }
    if (manifest.frame_paths.empty())
        fail(ErrorCode::format, path.string() + ": manifest lists no frames");
    return manifest;
}

PairedSample make_paired(const GridView& appearance, const GridView& motion) {
    if (!same_dims(appearance, motion))
        fail(ErrorCode::dimension, "appearance and motion dimensions differ");
    PairedSample sample;
    sample.appearance = replicate3(appearance, 255.0);
    sample.motion = replicate3(motion, 1.0);
    return sample;
}

std::filesystem::path motion_map_name(const std::filesystem::path& frame_path) {
    std::filesystem::path name = frame_path.stem();
    name += "_motion";
    name += frame_path.extension();
    return name;
}

PrecomputeResult precompute_sequence(const SequenceManifest& manifest, const RcaParams& params,
                                     const PrecomputeOptions& options) {
    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory " + options.out_dir.string());
    if (options.trace) {
        std::filesystem::create_directories(options.trace_dir, ec);
        if (ec) fail(ErrorCode::io, "cannot create trace directory " + options.trace_dir.string());
        if (options.trace_frame < 1 ||
            size_t(options.trace_frame) > manifest.frame_paths.size())
            fail(ErrorCode::parameter,
                 "trace frame index " + std::to_string(options.trace_frame) +
                     " outside manifest of length " + std::to_string(manifest.frame_paths.size()));
    }

    RcaEngine engine(params, options.trace);
    engine.reset();
    PrecomputeResult result;
    int index = 0;
    for (const auto& frame_path : manifest.frame_paths) {
        ++index;
        Grid frame = load_frame(frame_path);
        Grid motion = engine.step(frame);
        const std::filesystem::path out_path = options.out_dir / motion_map_name(frame_path.filename());
        save_motion_map(motion, out_path);
        result.outputs.push_back(out_path);
        ++result.frames_processed;
        if (options.trace && index == options.trace_frame && engine.last_trace())
            dump_trace(*engine.last_trace(), options.trace_dir);
    }

    std::ofstream snapshot(options.out_dir / "params.txt");
    if (!snapshot) fail(ErrorCode::io, "cannot write params snapshot in " + options.out_dir.string());
    snapshot << params_to_config(params);
    return result;
}

void dump_trace(const LayerTrace& trace, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::io, "cannot create trace directory " + dir.string());

    const std::pair<const char*, const Grid*> layers[] = {
        {"s_p", &trace.s_p},   {"s_h", &trace.s_h},
        {"c_t", &trace.c_t},   {"r_t", &trace.r_t},
        {"s_a", &trace.s_a},   {"integrated", &trace.integrated},
        {"m_s", &trace.m_s},   {"m_tau", &trace.m_tau},
        {"s_m", &trace.s_m},   {"motion", &trace.motion},
    };
    for (const auto& [name, grid] : layers) {
        if (grid->size() == 0) continue;
        save_grid_text(*grid, dir / (std::string(name) + ".txt"));
        // Visualization: individually max-normalized; negative values clamp to 0.
        double peak = 0.0;
        const double* v = grid->data();
        for (Eigen::Index i = 0; i < grid->size(); ++i)
            if (v[i] > peak) peak = v[i];
        Grid vis;
        if (peak > 1e-12)
            vis = (255.0 * (*grid) / peak);
        else
            vis = Grid::Zero(grid->rows(), grid->cols());
        save_motion_map(vis, dir / (std::string(name) + ".pgm"));
    }
}

}  // namespace retina
