#include "crosstrack/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "crosstrack/geometry.hpp"

namespace crosstrack::eval {
namespace {

struct GtProgress {
  std::int64_t present = 0;
  std::int64_t matched = 0;
  bool ever_matched = false;
  bool matched_last_present = false;
  std::optional<std::int64_t> last_hyp;
};

using FrameIndex = std::map<std::int64_t, std::vector<Observation>>;

FrameIndex index_by_frame(const Trajectories& obs, const char* which) {
  FrameIndex frames;
  for (const auto& o : obs) frames[o.frame].push_back(o);
  for (auto& [frame, list] : frames) {
    std::sort(list.begin(), list.end(),
              [](const Observation& a, const Observation& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i - 1].id == list[i].id) {
        throw Error(ErrorCode::InvalidInput, std::string(which) + " id " +
                                                 std::to_string(list[i].id) +
                                                 " appears twice in frame " +
                                                 std::to_string(frame));
      }
    }
  }
  return frames;
}

void finish_ratios(ClearReport& r) {
  const double denom = r.total_gt > 0 ? static_cast<double>(r.total_gt) : 1.0;
  r.MOTA = 1.0 - static_cast<double>(r.FP + r.FN + r.IDSW) / denom;
  r.recall = r.total_gt > 0 ? static_cast<double>(r.TP) / r.total_gt : 1.0;
  r.precision = r.TP + r.FP > 0 ? static_cast<double>(r.TP) / (r.TP + r.FP) : 1.0;
}

}  // namespace

ClearReport clear_mot(const Trajectories& gt, const Trajectories& hyp, double iou_thr,
                      std::optional<std::int64_t> n_frames) {
  const FrameIndex gt_frames = index_by_frame(gt, "ground-truth");
  const FrameIndex hyp_frames = index_by_frame(hyp, "hypothesis");

  std::int64_t frame_count = 0;
  if (n_frames) {
    frame_count = *n_frames;
  } else if (!gt_frames.empty()) {
    frame_count = gt_frames.rbegin()->first + 1;
  }
  for (const auto* frames : {&gt_frames, &hyp_frames}) {
    if (!frames->empty() &&
        (frames->begin()->first < 0 || frames->rbegin()->first >= frame_count)) {
      throw Error(ErrorCode::FrameMismatch,
                  "observations outside frames [0, " + std::to_string(frame_count) + ")");
    }
  }

  ClearReport report;
  std::map<std::int64_t, GtProgress> progress;
  const std::vector<Observation> none;

  for (std::int64_t frame = 0; frame < frame_count; ++frame) {
    const auto git = gt_frames.find(frame);
    const auto hit = hyp_frames.find(frame);
    const auto& g = git == gt_frames.end() ? none : git->second;
    const auto& h = hit == hyp_frames.end() ? none : hit->second;

    std::vector<std::optional<std::size_t>> match_of_gt(g.size());
    std::vector<bool> hyp_used(h.size(), false);

    // Keep previous correspondences that remain valid.
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& last = progress[g[i].id].last_hyp;
      if (!last) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (h[j].id != *last || hyp_used[j]) continue;
        if (geometry::iou_2d(g[i].box, h[j].box) >= iou_thr) {
          match_of_gt[i] = j;
          hyp_used[j] = true;
        }
        break;
      }
    }

    std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (match_of_gt[i]) continue;
      for (std::size_t j = 0; j < h.size(); ++j) {
        if (hyp_used[j]) continue;
        const double iou = geometry::iou_2d(g[i].box, h[j].box);
        if (iou >= iou_thr && iou > 0.0) candidates.emplace_back(-iou, i, j);
      }
    }
    // Lists are id-sorted, so index order is id order for the tie-break.
    std::sort(candidates.begin(), candidates.end());
    for (const auto& [neg_iou, i, j] : candidates) {
      if (match_of_gt[i] || hyp_used[j]) continue;
      match_of_gt[i] = j;
      hyp_used[j] = true;
    }

    for (std::size_t i = 0; i < g.size(); ++i) {
      GtProgress& p = progress[g[i].id];
      ++p.present;
      ++report.total_gt;
      if (!match_of_gt[i]) {
        ++report.FN;
        p.matched_last_present = false;
        continue;
      }
      const std::int64_t hyp_id = h[*match_of_gt[i]].id;
      ++report.TP;
      ++p.matched;
      if (p.last_hyp && *p.last_hyp != hyp_id) ++report.IDSW;
      if (p.ever_matched && !p.matched_last_present) ++report.FRAG;
      p.last_hyp = hyp_id;
      p.ever_matched = true;
      p.matched_last_present = true;
    }
    report.FP += static_cast<std::int64_t>(std::count(hyp_used.begin(), hyp_used.end(), false));
  }

  for (const auto& [id, p] : progress) {
    if (p.present == 0) continue;
    ++report.gt_tracks;
    const double coverage = static_cast<double>(p.matched) / p.present;
    if (coverage >= 0.8) ++report.MT;
    else if (coverage <= 0.2) ++report.ML;
    else ++report.PT;
  }
  finish_ratios(report);
  return report;
}

ClearReport combine(const std::vector<ClearReport>& reports) {
  ClearReport total;
  for (const auto& r : reports) {
    total.FP += r.FP;
    total.FN += r.FN;
    total.IDSW += r.IDSW;
    total.FRAG += r.FRAG;
    total.MT += r.MT;
    total.PT += r.PT;
    total.ML += r.ML;
    total.TP += r.TP;
    total.total_gt += r.total_gt;
    total.gt_tracks += r.gt_tracks;
  }
  finish_ratios(total);
  return total;
}

std::string ClearReport::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "MOTA %8.4f  Recall %.4f  Precision %.4f\n"
                "FP %lld  FN %lld  IDSW %lld  FRAG %lld\n"
                "MT %lld  PT %lld  ML %lld  (GT trajectories %lld, GT boxes %lld)\n",
                MOTA, recall, precision, static_cast<long long>(FP), static_cast<long long>(FN),
                static_cast<long long>(IDSW), static_cast<long long>(FRAG),
                static_cast<long long>(MT), static_cast<long long>(PT),
                static_cast<long long>(ML), static_cast<long long>(gt_tracks),
                static_cast<long long>(total_gt));
  return buf;
}

std::string ClearReport::to_key_values() const {
  std::ostringstream out;
  char mota[64];
  std::snprintf(mota, sizeof(mota), "%.6f", MOTA);
  char rec[64];
  std::snprintf(rec, sizeof(rec), "%.6f", recall);
  char prec[64];
  std::snprintf(prec, sizeof(prec), "%.6f", precision);
  out << "MOTA=" << mota << '\n'
      << "FP=" << FP << '\n'
      << "FN=" << FN << '\n'
      << "IDSW=" << IDSW << '\n'
      << "FRAG=" << FRAG << '\n'
      << "MT=" << MT << '\n'
      << "PT=" << PT << '\n'
      << "ML=" << ML << '\n'
      << "TP=" << TP << '\n'
      << "recall=" << rec << '\n'
      << "precision=" << prec << '\n'
      << "total_gt=" << total_gt << '\n'
      << "gt_tracks=" << gt_tracks << '\n';
  return out.str();
}

}  // namespace crosstrack::eval
