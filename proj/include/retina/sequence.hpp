#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "retina/image_io.hpp"
#include "retina/params.hpp"
#include "retina/rca.hpp"

namespace retina {

// Ordered list of frame paths; the listed order is the authoritative temporal
// order, never the filesystem's.
struct SequenceManifest {
    std::string sequence_id;
    std::vector<std::filesystem::path> frame_paths;
};

// Parses a manifest: UTF-8 text, one frame path per line, '#' comments and
// blank lines ignored, paths resolved relative to the manifest's directory.
// Duplicates or an empty list are format errors. sequence_id = file stem.
SequenceManifest load_manifest(const std::filesystem::path& path);

// The 3-channel paired storage convention: appearance and motion quantized to
// 8 bits and replicated across three byte-identical channels. Appearance is
// expected in [0,1] (scaled by 255 before quantization), motion in [0,255].
struct PairedSample {
    ImageU8 appearance;
    ImageU8 motion;
};

PairedSample make_paired(const GridView& appearance, const GridView& motion);

struct PrecomputeOptions {
    std::filesystem::path out_dir;
    bool trace = false;
    std::filesystem::path trace_dir;
    int trace_frame = 1;  // 1-based frame index to dump when tracing
};

struct PrecomputeResult {
    std::size_t frames_processed = 0;
    std::vector<std::filesystem::path> outputs;
};

// Runs the automaton over one manifest: one motion map per frame with mirrored
// names (x.pgm -> x_motion.pgm), plus a params.txt snapshot of the effective
// parameters. Frames are processed strictly in manifest order.
PrecomputeResult precompute_sequence(const SequenceManifest& manifest, const RcaParams& params,
                                     const PrecomputeOptions& options);

// Output name for a given input frame name: stem + "_motion" + extension.
std::filesystem::path motion_map_name(const std::filesystem::path& frame_path);

// Writes every captured layer of a trace as an individually max-normalized
// 8-bit PGM plus a full-precision text dump (<name>.pgm / <name>.txt).
void dump_trace(const LayerTrace& trace, const std::filesystem::path& dir);

}  // namespace retina
