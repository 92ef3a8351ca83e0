#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace retina {

// Axis-aligned box; degenerate zero-area boxes are permitted.
struct BBox {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

    double width() const noexcept { return x_max - x_min; }
    double height() const noexcept { return y_max - y_min; }
    double area() const noexcept { return width() * height(); }
};

struct Detection {
    std::string frame_id;
    BBox box;
    double score = 1.0;
};

struct GtRecord {
    std::string frame_id;
    BBox box;
};

// Intersection over union; 0 when the union has zero area.
double iou(const BBox& a, const BBox& b);

// Generalized IoU: iou - (C - U)/C with C the smallest enclosing box area and
// U the union area. Two coincident degenerate boxes (C = 0) return 0.
double giou(const BBox& a, const BBox& b);

// Greedy descending-score suppression on one frame's detections. A candidate
// is dropped when its IoU with an already-kept box exceeds iou_thresh. Ties
// are broken by (score desc, x_min asc, y_min asc) for determinism.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh);

struct MatchedPair {
    int det_index = -1;  // index into the input detection list
    int gt_index = -1;
    double iou = 0.0;
};

struct MatchResult {
    long tp = 0, fp = 0, fn = 0;
    std::vector<MatchedPair> matches;
};

// VOC-style greedy matching for one frame: detections in descending-score
// order each claim the unmatched ground-truth box of highest IoU >= iou_thresh;
// every ground-truth box is matched at most once.
MatchResult match_frame(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                        double iou_thresh);

struct Prf {
    double precision = 0, recall = 0, f1 = 0;
};

// P = tp/(tp+fp), R = tp/(tp+fn), F1 = 2PR/(P+R); each 0 when its denominator
// is 0.
Prf prf1(long tp, long fp, long fn);

// Detections and ground truth grouped per frame, ordered by frame id so that
// reductions are deterministic.
using FrameDetections = std::map<std::string, std::vector<Detection>>;
using FrameGts = std::map<std::string, std::vector<BBox>>;

FrameDetections group_detections(const std::vector<Detection>& dets);
FrameGts group_gts(const std::vector<GtRecord>& gts);

struct SweepPoint {
    double threshold = 0;
    long tp = 0, fp = 0, fn = 0;
    double precision = 0, recall = 0;
};

// One operating point per distinct detection score (detections with score
// below or at conf_floor are discarded first, matching the inference protocol
// of keeping predictions with confidence strictly greater than the floor).
// Throws an evaluation error when there are no ground-truth boxes.
std::vector<SweepPoint> threshold_sweep(const FrameDetections& dets, const FrameGts& gts,
                                        double iou_thresh, double conf_floor);

enum class ApInterpolation { points_101, all_points };

// Area under the right-monotonized precision envelope; points_101 samples the
// envelope at recalls {0.00, 0.01, ..., 1.00}.
double average_precision(const std::vector<SweepPoint>& sweep, ApInterpolation mode);

// Convenience wrapper at IoU 0.5 with the default confidence floor.
double average_precision_50(const FrameDetections& dets, const FrameGts& gts,
                            double conf_floor = 0.001,
                            ApInterpolation mode = ApInterpolation::points_101);

// Comma-separated PR table, one row per distinct threshold in ascending order,
// with a "threshold,precision,recall" header.
void export_pr_curve(const std::vector<SweepPoint>& sweep, std::ostream& out);

// Record files: UTF-8 text, one record per line,
//   frame_id x_min y_min x_max y_max [score]
// space-separated, '#' comments allowed. Detections default to score 1.0 when
// the column is absent; ground-truth records must not carry one.
std::vector<Detection> load_detections(const std::filesystem::path& path);
std::vector<GtRecord> load_gt(const std::filesystem::path& path);

struct EvalSummary {
    long tp = 0, fp = 0, fn = 0;
    Prf prf;
    double ap50 = 0;
    std::vector<SweepPoint> sweep;
};

// The full harness pipeline: confidence floor, per-frame NMS, matching at
// iou_thresh for P/R/F1, and the threshold sweep for AP.
EvalSummary evaluate(const std::vector<Detection>& dets, const std::vector<GtRecord>& gts,
                     double iou_thresh = 0.5, double nms_thresh = 0.65,
                     double conf_floor = 0.001,
                     ApInterpolation mode = ApInterpolation::points_101);

}  // namespace retina
