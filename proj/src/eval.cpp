#include "retina/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "retina/error.hpp"

namespace retina {

namespace {

double intersection_area(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    return iw * ih;
}

void check_box(const BBox& b, const std::string& context) {
    if (!(b.x_min <= b.x_max) || !(b.y_min <= b.y_max) || !std::isfinite(b.x_min) ||
        !std::isfinite(b.y_min) || !std::isfinite(b.x_max) || !std::isfinite(b.y_max))
        fail(ErrorCode::parameter, context + ": invalid box");
}

// Deterministic detection ordering shared by NMS and matching.
bool det_before(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
    return a.box.y_min < b.box.y_min;
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
    check_box(a, "iou");
    check_box(b, "iou");
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

double giou(const BBox& a, const BBox& b) {
    check_box(a, "giou");
    check_box(b, "giou");
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    BBox hull;
    hull.x_min = std::min(a.x_min, b.x_min);
    hull.y_min = std::min(a.y_min, b.y_min);
    hull.x_max = std::max(a.x_max, b.x_max);
    hull.y_max = std::max(a.y_max, b.y_max);
    const double c = hull.area();
    if (c <= 0.0) return 0.0;  // coincident degenerate boxes, by convention
    const double base = uni <= 0.0 ? 0.0 : inter / uni;
    return base - (c - uni) / c;
}

std::vector<Detection> nms(std::vector<Detection> dets, double iou_thresh) {
    std::stable_sort(dets.begin(), dets.end(), det_before);
    std::vector<Detection> kept;
    kept.reserve(dets.size());
    for (const Detection& d : dets) {
        bool suppressed = false;
        for (const Detection& k : kept)
            if (iou(d.box, k.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

MatchResult match_frame(const std::vector<Detection>& dets, const std::vector<BBox>& gts,
                        double iou_thresh) {
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return det_before(dets[size_t(a)], dets[size_t(b)]); });

    MatchResult result;
    std::vector<bool> gt_taken(gts.size(), false);
    for (int det_index : order) {
        const Detection& det = dets[size_t(det_index)];
        int best_gt = -1;
        double best_iou = 0.0;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (gt_taken[g]) continue;
            const double v = iou(det.box, gts[g]);
            if (v >= iou_thresh && v > best_iou) {
                best_iou = v;
                best_gt = int(g);
            }
        }
        if (best_gt >= 0) {
            gt_taken[size_t(best_gt)] = true;
            result.matches.push_back({det_index, best_gt, best_iou});
            ++result.tp;
        } else {
            ++result.fp;
        }
    }
    result.fn = long(gts.size()) - result.tp;
    return result;
}

Prf prf1(long tp, long fp, long fn) {
    if (tp < 0 || fp < 0 || fn < 0) fail(ErrorCode::parameter, "prf1: negative counts");
    Prf out;
    out.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
    out.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
    const double denom = out.precision + out.recall;
    out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
    return out;
}

FrameDetections group_detections(const std::vector<Detection>& dets) {
    FrameDetections grouped;
    for (const Detection& d : dets) grouped[d.frame_id].push_back(d);
    return grouped;
}

FrameGts group_gts(const std::vector<GtRecord>& gts) {
    FrameGts grouped;
    for (const GtRecord& g : gts) grouped[g.frame_id].push_back(g.box);
    return grouped;
}

std::vector<SweepPoint> threshold_sweep(const FrameDetections& dets, const FrameGts& gts,
                                        double iou_thresh, double conf_floor) {
    long total_gt = 0;
    for (const auto& [id, boxes] : gts) total_gt += long(boxes.size());
    if (total_gt == 0)
        fail(ErrorCode::evaluation, "no ground-truth boxes; average precision is undefined");

    // Confidence floor is strict: keep score > conf_floor.
    FrameDetections kept;
    std::set<double, std::greater<double>> thresholds;
    for (const auto& [id, frame_dets] : dets)
        for (const Detection& d : frame_dets)
            if (d.score > conf_floor) {
                kept[id].push_back(d);
                thresholds.insert(d.score);
            }

    std::vector<SweepPoint> sweep;
    sweep.reserve(thresholds.size());
    for (double s : thresholds) {
        long tp = 0, fp = 0;
        for (const auto& [id, frame_dets] : kept) {
            std::vector<Detection> subset;
            for (const Detection& d : frame_dets)
                if (d.score >= s) subset.push_back(d);
            auto it = gts.find(id);
            static const std::vector<BBox> no_gt;
            const MatchResult m = match_frame(subset, it == gts.end() ? no_gt : it->second,
                                              iou_thresh);
            tp += m.tp;
            fp += m.fp;
        }
        SweepPoint point;
        point.threshold = s;
        point.tp = tp;
        point.fp = fp;
        point.fn = total_gt - tp;
        const Prf prf = prf1(tp, fp, point.fn);
        point.precision = prf.precision;
        point.recall = prf.recall;
        sweep.push_back(point);
    }
    return sweep;
}

double average_precision(const std::vector<SweepPoint>& sweep, ApInterpolation mode) {
    if (sweep.empty()) return 0.0;

    // Right-monotonized precision envelope over recall.
    auto envelope_at = [&](double recall) {
        double best = 0.0;
        for (const SweepPoint& p : sweep)
            if (p.recall >= recall && p.precision > best) best = p.precision;
        return best;
    };

    if (mode == ApInterpolation::points_101) {
        double sum = 0.0;
        for (int i = 0; i <= 100; ++i) sum += envelope_at(double(i) / 100.0);
        return sum / 101.0;
    }

    // All-point: integrate the envelope over the distinct recall values.
    std::vector<double> recalls;
    for (const SweepPoint& p : sweep) recalls.push_back(p.recall);
    std::sort(recalls.begin(), recalls.end());
    recalls.erase(std::unique(recalls.begin(), recalls.end()), recalls.end());
    double ap = 0.0;
    double prev = 0.0;
    for (double r : recalls) {
        if (r > prev) ap += (r - prev) * envelope_at(r);
        prev = r;
    }
    return ap;
}

double average_precision_50(const FrameDetections& dets, const FrameGts& gts, double conf_floor,
                            ApInterpolation mode) {
    return average_precision(threshold_sweep(dets, gts, 0.5, conf_floor), mode);
}

void export_pr_curve(const std::vector<SweepPoint>& sweep, std::ostream& out) {
    out << "threshold,precision,recall\n";
    char buf[128];
    for (auto it = sweep.rbegin(); it != sweep.rend(); ++it) {
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", it->threshold, it->precision,
                      it->recall);
        out << buf;
    }
}

namespace {

struct ParsedRecord {
    std::string frame_id;
    BBox box;
    double score = 1.0;
    bool has_score = false;
};

std::vector<ParsedRecord> parse_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    std::vector<ParsedRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) {
            if (tok[0] == '#') break;
            tokens.push_back(tok);
        }
        if (tokens.empty()) continue;
        if (tokens.size() != 5 && tokens.size() != 6)
            fail(ErrorCode::format, path.string() + ":" + std::to_string(line_no) +
                                        ": expected 'frame_id x_min y_min x_max y_max [score]'");
        ParsedRecord rec;
        rec.frame_id = tokens[0];
        double vals[5] = {0, 0, 0, 0, 1.0};
        for (size_t i = 1; i < tokens.size(); ++i) {
            try {
                size_t pos = 0;
                vals[i - 1] = std::stod(tokens[i], &pos);
                if (pos != tokens[i].size()) throw std::invalid_argument(tokens[i]);
            } catch (const std::exception&) {
                fail(ErrorCode::format, path.string() + ":" + std::to_string(line_no) +
                                            ": invalid number '" + tokens[i] + "'");
            }
        }
        rec.box = BBox{vals[0], vals[1], vals[2], vals[3]};
        rec.has_score = tokens.size() == 6;
        rec.score = rec.has_score ? vals[4] : 1.0;
        if (!(rec.box.x_min <= rec.box.x_max) || !(rec.box.y_min <= rec.box.y_max))
            fail(ErrorCode::format,
                 path.string() + ":" + std::to_string(line_no) + ": degenerate box bounds");
        if (rec.has_score && !(rec.score >= 0.0 && rec.score <= 1.0))
            fail(ErrorCode::format,
                 path.string() + ":" + std::to_string(line_no) + ": score outside [0,1]");
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace

std::vector<Detection> load_detections(const std::filesystem::path& path) {
    std::vector<Detection> dets;
    for (auto& rec : parse_records(path))
        dets.push_back(Detection{std::move(rec.frame_id), rec.box, rec.score});
    return dets;
}

std::vector<GtRecord> load_gt(const std::filesystem::path& path) {
    std::vector<GtRecord> gts;
    for (auto& rec : parse_records(path)) {
        if (rec.has_score)
            fail(ErrorCode::format,
                 path.string() + ": ground-truth records must not carry a score column");
        gts.push_back(GtRecord{std::move(rec.frame_id), rec.box});
    }
    return gts;
}

EvalSummary evaluate(const std::vector<Detection>& dets, const std::vector<GtRecord>& gts,
                     double iou_thresh, double nms_thresh, double conf_floor,
                     ApInterpolation mode) {
    FrameDetections grouped = group_detections(dets);
    const FrameGts gt_grouped = group_gts(gts);

    FrameDetections surviving;
    for (auto& [id, frame_dets] : grouped) {
        std::vector<Detection> floored;
        for (const Detection& d : frame_dets)
            if (d.score > conf_floor) floored.push_back(d);
        if (!floored.empty()) surviving[id] = nms(std::move(floored), nms_thresh);
    }

    EvalSummary summary;
    for (const auto& [id, boxes] : gt_grouped) {
        auto it = surviving.find(id);
        static const std::vector<Detection> none;
        const MatchResult m = match_frame(it == surviving.end() ? none : it->second, boxes,
                                          iou_thresh);
        summary.tp += m.tp;
        summary.fp += m.fp;
        summary.fn += m.fn;
    }
    // Detections on frames without any ground truth are all false positives.
    for (const auto& [id, frame_dets] : surviving)
        if (gt_grouped.find(id) == gt_grouped.end()) summary.fp += long(frame_dets.size());

    summary.prf = prf1(summary.tp, summary.fp, summary.fn);
    summary.sweep = threshold_sweep(surviving, gt_grouped, iou_thresh, conf_floor);
    summary.ap50 = average_precision(summary.sweep, mode);
    return summary;
}

}  // namespace retina
