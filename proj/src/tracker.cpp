#include "crosstrack/tracker.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "crosstrack/association.hpp"
#include "crosstrack/geometry.hpp"

namespace crosstrack::tracker {
namespace {

using association::greedy_match_iou;

void sort_by_id(std::vector<Track>& tracks) {
  std::sort(tracks.begin(), tracks.end(),
            [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
}

void sort_sets(StreamState& state) {
  sort_by_id(state.matched);
  sort_by_id(state.unmatched_dets);
  sort_by_id(state.unmatched_trajs);
}

template <class Fn>
void for_each_track(StreamState& state, Fn&& fn) {
  for (auto* set : {&state.matched, &state.unmatched_dets, &state.unmatched_trajs}) {
    for (auto& t : *set) fn(t);
  }
}

template <class Fn>
void for_each_track(const StreamState& state, Fn&& fn) {
  for (const auto* set : {&state.matched, &state.unmatched_dets, &state.unmatched_trajs}) {
    for (const auto& t : *set) fn(t);
  }
}

void link(Track& lidar_track, Track& camera_track) {
  lidar_track.link_id = camera_track.track_id;
  camera_track.link_id = lidar_track.track_id;
}

/// Candidate view over a track set: indices into the set plus their boxes.
struct Candidates {
  std::vector<std::size_t> index;
  std::vector<BBox2D> boxes;
};

template <class Pred>
Candidates collect(const std::vector<Track>& tracks, const Calibration& calib, Pred&& keep) {
  Candidates out;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (!keep(tracks[i])) continue;
    auto box = tracks[i].image_box(calib);
    if (!box) continue;
    out.index.push_back(i);
    out.boxes.push_back(*box);
  }
  return out;
}

/// Moves the tracks at `indices` from `from` into `to`, marking them as
/// matched at this frame.
void move_to_matched(std::vector<Track>& from, std::vector<Track>& to,
                     std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end(), std::greater<>());
  for (std::size_t idx : indices) {
    Track t = std::move(from[idx]);
    from.erase(from.begin() + static_cast<std::ptrdiff_t>(idx));
    t.status = TrackStatus::matched;
    to.push_back(std::move(t));
  }
  sort_by_id(to);
}

/// Commits the prediction made in stage 1 as the state at this frame.
void commit_correction(Track& t) {
  t.hits += 1;
  t.time_since_update = 0;
}

void clear_dangling_links(StreamState& a, StreamState& b) {
  auto prune = [](StreamState& self, const StreamState& other) {
    for_each_track(self, [&other](Track& t) {
      if (!t.link_id) return;
      const Track* partner = other.find(*t.link_id);
      if (partner == nullptr || partner->link_id != t.track_id) t.link_id.reset();
    });
  };
  prune(a, b);
  prune(b, a);
}

void require_calibration(const Calibration& calib) {
  if (calib.image_width <= 0 || calib.image_height <= 0) {
    throw Error(ErrorCode::CalibrationMissing, "cross correction needs a camera calibration");
  }
}

void require_same_frame(const StreamState& lidar, const StreamState& camera) {
  if (lidar.next_frame != camera.next_frame) {
    throw Error(ErrorCode::FrameOrderViolation, "camera and lidar states are at different frames");
  }
}

bool expired(const Track& t, const TrackerConfig& cfg) {
  return t.time_since_update >= cfg.max_age_N;
}

void discard_expired(std::vector<Track>& tracks, const TrackerConfig& cfg) {
  std::erase_if(tracks, [&cfg](const Track& t) { return expired(t, cfg); });
}

}  // namespace

BBox2D Track::box2d() const { return motion::kf_box(std::get<motion::KF2DState>(kf)); }

BBox3D Track::box3d() const { return motion::kf_box(std::get<motion::KF3DState>(kf)); }

std::optional<BBox2D> Track::image_box(const Calibration& calib) const {
  if (stream == Stream::camera) return box2d();
  return geometry::try_project_box_3d(box3d(), calib);
}

const Track* StreamState::find(std::int64_t track_id) const {
  for (const auto* set : {&matched, &unmatched_dets, &unmatched_trajs}) {
    for (const auto& t : *set) {
      if (t.track_id == track_id) return &t;
    }
  }
  return nullptr;
}

Track* StreamState::find(std::int64_t track_id) {
  return const_cast<Track*>(std::as_const(*this).find(track_id));
}

CaseMask CaseMask::parse(std::string_view text) {
  if (text == "baseline" || text == "lidar") return lidar_baseline();
  CaseMask mask = none();
  if (text == "none") return mask;
  for (char ch : text) {
    switch (ch) {
      case 'a': mask.a = true; break;
      case 'b': mask.b = true; break;
      case 'c': mask.c = true; break;
      case 'd': mask.d = true; break;
      case 'e': mask.e = true; break;
      default:
        throw Error(ErrorCode::InvalidInput, "case mask '" + std::string(text) +
                                                 "' must be 'baseline', 'none' or letters a-e");
    }
  }
  return mask;
}

std::string CaseMask::to_string() const {
  if (lidar_only) return "baseline";
  std::string out;
  if (a) out += 'a';
  if (b) out += 'b';
  if (c) out += 'c';
  if (d) out += 'd';
  if (e) out += 'e';
  return out.empty() ? "none" : out;
}

StreamState ctg_step(const StreamState& state, std::span<const Detection> dets,
                     const affinity::SimilarityProvider& provider, const TrackerConfig& cfg) {
  for (const auto& d : dets) {
    if (d.frame != state.next_frame) {
      throw Error(ErrorCode::FrameOrderViolation,
                  "detection for frame " + std::to_string(d.frame) + " while the " +
                      std::string(to_string(state.stream)) + " stream expects frame " +
                      std::to_string(state.next_frame));
    }
    if (d.stream != state.stream) {
      throw Error(ErrorCode::InvalidDetection, "detection stream does not match the track stream");
    }
    d.validate();
  }

  std::vector<Detection> ordered(dets.begin(), dets.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  // Prior objects in T, UD, UT order, predicted to the current frame.
  std::vector<Track> prior;
  std::vector<TrackStatus> origin;
  prior.reserve(state.size());
  for (const auto* set : {&state.matched, &state.unmatched_dets, &state.unmatched_trajs}) {
    for (const auto& t : *set) {
      Track p = t;
      p.kf = motion::kf_predict(t.kf);
      prior.push_back(std::move(p));
      origin.push_back(t.status);
    }
  }

  std::vector<Detection> representatives;
  representatives.reserve(prior.size());
  for (const auto& t : prior) representatives.push_back(t.last_detection);
  const auto similarity = affinity::similarity_matrix(provider, representatives, ordered);

  affinity::ScoreMatrix sgc;
  if (state.stream == Stream::camera) {
    std::vector<BBox2D> boxes;
    for (const auto& t : prior) boxes.push_back(t.box2d());
    sgc = affinity::sgc_matrix(boxes, ordered);
  } else {
    std::vector<BBox3D> boxes;
    for (const auto& t : prior) boxes.push_back(t.box3d());
    sgc = affinity::sgc_matrix(boxes, ordered);
  }
  const auto cost = affinity::total_cost(similarity, sgc, cfg, state.stream);
  const auto assignment = association::greedy_match(cost.values, cfg.sentinel);

  StreamState next(state.stream);
  next.next_frame = state.next_frame + 1;
  next.next_track_id = state.next_track_id;

  for (const auto& m : assignment.matches) {
    Track t = std::move(prior[m.row]);
    const Detection& det = ordered[m.col];
    t.kf = motion::kf_update(t.kf, det);
    t.hits += 1;
    t.time_since_update = 0;
    t.frames_since_detection = 0;
    t.last_detection = det;
    t.status = TrackStatus::matched;
    next.matched.push_back(std::move(t));
  }
  for (int col : assignment.unmatched_cols) {
    const Detection& det = ordered[col];
    Track t;
    t.track_id = next.next_track_id++;
    t.stream = state.stream;
    t.kf = motion::kf_init(det);
    t.hits = 1;
    t.time_since_update = 0;
    t.last_detection = det;
    t.status = TrackStatus::unmatched_detection;
    t.birth_frame = state.next_frame;
    next.unmatched_dets.push_back(std::move(t));
  }
  for (int row : assignment.unmatched_rows) {
    Track t = std::move(prior[row]);
    t.time_since_update += 1;
    t.frames_since_detection += 1;
    if (origin[row] == TrackStatus::unmatched_detection) {
      next.unmatched_dets.push_back(std::move(t));
    } else {
      t.status = TrackStatus::unmatched_trajectory;
      next.unmatched_trajs.push_back(std::move(t));
    }
  }
  sort_sets(next);
  return next;
}

LinkSet tr_prematch(StreamState& lidar, StreamState& camera, const Calibration& calib,
                    const TrackerConfig& cfg) {
  require_calibration(calib);
  require_same_frame(lidar, camera);

  std::map<std::int64_t, std::int64_t> previous;
  for (const auto& t : lidar.matched) {
    if (t.link_id) previous.emplace(t.track_id, *t.link_id);
  }
  for_each_track(lidar, [](Track& t) { t.link_id.reset(); });
  for_each_track(camera, [](Track& t) { t.link_id.reset(); });

  std::vector<std::optional<BBox2D>> lidar_boxes;
  for (const auto& t : lidar.matched) lidar_boxes.push_back(t.image_box(calib));
  std::vector<BBox2D> camera_boxes;
  for (const auto& t : camera.matched) camera_boxes.push_back(t.box2d());

  LinkSet links;
  std::vector<bool> lidar_used(lidar.matched.size(), false);
  std::vector<bool> camera_used(camera.matched.size(), false);

  for (std::size_t i = 0; i < lidar.matched.size(); ++i) {
    const auto prev = previous.find(lidar.matched[i].track_id);
    if (prev == previous.end() || !lidar_boxes[i]) continue;
    for (std::size_t j = 0; j < camera.matched.size(); ++j) {
      if (camera.matched[j].track_id != prev->second || camera_used[j]) continue;
      if (geometry::iou_2d(*lidar_boxes[i], camera_boxes[j]) >= cfg.theta_iou) {
        lidar_used[i] = camera_used[j] = true;
        link(lidar.matched[i], camera.matched[j]);
        links.emplace_back(lidar.matched[i].track_id, camera.matched[j].track_id);
      }
      break;
    }
  }

  std::vector<std::size_t> rows;
  std::vector<BBox2D> row_boxes;
  for (std::size_t i = 0; i < lidar.matched.size(); ++i) {
    if (lidar_used[i] || !lidar_boxes[i]) continue;
    rows.push_back(i);
    row_boxes.push_back(*lidar_boxes[i]);
  }
  std::vector<std::size_t> cols;
  std::vector<BBox2D> col_boxes;
  for (std::size_t j = 0; j < camera.matched.size(); ++j) {
    if (camera_used[j]) continue;
    cols.push_back(j);
    col_boxes.push_back(camera_boxes[j]);
  }
  for (const auto& m : greedy_match_iou(row_boxes, col_boxes, cfg.theta_iou).matches) {
    Track& l = lidar.matched[rows[m.row]];
    Track& c = camera.matched[cols[m.col]];
    link(l, c);
    links.emplace_back(l.track_id, c.track_id);
  }
  std::sort(links.begin(), links.end());
  return links;
}

void tr_step1(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask) {
  require_same_frame(lidar, camera);
  auto fresh = [](const Track& t) { return t.time_since_update == 0; };
  auto unlinked = [](const Track& t) { return !t.link_id.has_value(); };

  if (mask.a) {
    require_calibration(calib);
    const auto rows = collect(lidar.unmatched_dets, calib, fresh);
    const auto cols = collect(camera.matched, calib, unlinked);
    std::vector<std::size_t> promoted;
    for (const auto& m : greedy_match_iou(rows.boxes, cols.boxes, cfg.theta_iou).matches) {
      const std::size_t li = rows.index[m.row];
      link(lidar.unmatched_dets[li], camera.matched[cols.index[m.col]]);
      promoted.push_back(li);
    }
    move_to_matched(lidar.unmatched_dets, lidar.matched, promoted);
  }

  if (mask.b) {
    require_calibration(calib);
    const auto rows = collect(lidar.unmatched_dets, calib, fresh);
    const auto cols = collect(camera.unmatched_dets, calib, fresh);
    std::vector<std::size_t> lidar_promoted;
    std::vector<std::size_t> camera_promoted;
    for (const auto& m : greedy_match_iou(rows.boxes, cols.boxes, cfg.theta_iou).matches) {
      const std::size_t li = rows.index[m.row];
      const std::size_t ci = cols.index[m.col];
      link(lidar.unmatched_dets[li], camera.unmatched_dets[ci]);
      lidar_promoted.push_back(li);
      camera_promoted.push_back(ci);
    }
    move_to_matched(lidar.unmatched_dets, lidar.matched, lidar_promoted);
    move_to_matched(camera.unmatched_dets, camera.matched, camera_promoted);
  }

  discard_expired(lidar.unmatched_dets, cfg);
  discard_expired(camera.unmatched_dets, cfg);
  clear_dangling_links(lidar, camera);
}

void tr_step2(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask) {
  require_same_frame(lidar, camera);
  auto reliable = [&cfg](const Track& t) { return t.hits >= cfg.theta_hits; };
  auto reliable_unlinked = [&cfg](const Track& t) {
    return t.hits >= cfg.theta_hits && !t.link_id.has_value();
  };

  // LiDAR gaps first, bridged by camera trajectories.
  if (mask.d) {
    require_calibration(calib);
    const auto rows = collect(lidar.unmatched_trajs, calib, reliable);
    const auto cols = collect(camera.matched, calib, reliable_unlinked);
    std::vector<std::size_t> bridged;
    for (const auto& m : greedy_match_iou(rows.boxes, cols.boxes, cfg.theta_iou).matches) {
      Track& l = lidar.unmatched_trajs[rows.index[m.row]];
      commit_correction(l);
      link(l, camera.matched[cols.index[m.col]]);
      bridged.push_back(rows.index[m.row]);
    }
    move_to_matched(lidar.unmatched_trajs, lidar.matched, bridged);
  }

  if (mask.c) {
    require_calibration(calib);
    const auto rows = collect(camera.unmatched_trajs, calib, reliable);
    const auto cols = collect(lidar.matched, calib, reliable_unlinked);
    std::vector<std::size_t> bridged;
    for (const auto& m : greedy_match_iou(rows.boxes, cols.boxes, cfg.theta_iou).matches) {
      Track& c = camera.unmatched_trajs[rows.index[m.row]];
      commit_correction(c);
      link(lidar.matched[cols.index[m.col]], c);
      bridged.push_back(rows.index[m.row]);
    }
    move_to_matched(camera.unmatched_trajs, camera.matched, bridged);
  }
}

void tr_step3(StreamState& lidar, StreamState& camera, const Calibration& calib,
              const TrackerConfig& cfg, const CaseMask& mask) {
  require_same_frame(lidar, camera);

  if (mask.e) {
    require_calibration(calib);
    auto eligible = [&](const Track& t) {
      if (t.hits < cfg.theta_hits || t.frames_since_detection >= cfg.max_age_N) return false;
      const auto box = t.image_box(calib);
      return box && !geometry::at_image_boundary(*box, calib, cfg.boundary_margin);
    };
    const auto rows = collect(camera.unmatched_trajs, calib, eligible);
    const auto cols = collect(lidar.unmatched_trajs, calib, eligible);
    std::vector<std::size_t> camera_bridged;
    std::vector<std::size_t> lidar_bridged;
    for (const auto& m : greedy_match_iou(rows.boxes, cols.boxes, cfg.theta_iou).matches) {
      Track& c = camera.unmatched_trajs[rows.index[m.row]];
      Track& l = lidar.unmatched_trajs[cols.index[m.col]];
      commit_correction(c);
      commit_correction(l);
      link(l, c);
      camera_bridged.push_back(rows.index[m.row]);
      lidar_bridged.push_back(cols.index[m.col]);
    }
    move_to_matched(camera.unmatched_trajs, camera.matched, camera_bridged);
    move_to_matched(lidar.unmatched_trajs, lidar.matched, lidar_bridged);
  }

  for (StreamState* state : {&lidar, &camera}) {
    discard_expired(state->unmatched_trajs, cfg);
    // The gap was not bridged this frame.
    for (auto& t : state->unmatched_trajs) t.hits = 0;
  }
  clear_dangling_links(lidar, camera);
}

OutputFrame finalize_output(const StreamState& lidar, const StreamState& camera,
                            const Calibration& calib, const TrackerConfig& cfg,
                            const CaseMask& mask) {
  OutputFrame out;
  out.frame = lidar.next_frame - 1;

  auto emit = [&](const Track& t, const BBox2D& box) {
    if (t.hits < cfg.min_output_hits) return;
    out.entries.push_back({t.track_id, t.box3d(), box, t.last_detection.score});
  };

  if (mask.lidar_only) {
    for (const auto& t : lidar.matched) {
      if (auto box = t.image_box(calib)) emit(t, *box);
    }
    return out;
  }

  require_calibration(calib);
  auto rows = collect(lidar.matched, calib, [](const Track&) { return true; });
  std::vector<bool> supported(rows.index.size(), false);
  for (const auto* set : {&camera.matched, &camera.unmatched_dets, &camera.unmatched_trajs}) {
    std::vector<std::size_t> open;
    std::vector<BBox2D> open_boxes;
    for (std::size_t k = 0; k < rows.index.size(); ++k) {
      if (supported[k]) continue;
      open.push_back(k);
      open_boxes.push_back(rows.boxes[k]);
    }
    std::vector<BBox2D> camera_boxes;
    for (const auto& t : *set) camera_boxes.push_back(t.box2d());
    for (const auto& m : greedy_match_iou(open_boxes, camera_boxes, cfg.theta_iou).matches) {
      supported[open[m.row]] = true;
    }
  }
  for (std::size_t k = 0; k < rows.index.size(); ++k) {
    if (supported[k]) emit(lidar.matched[rows.index[k]], rows.boxes[k]);
  }
  return out;
}

CrossTracker::CrossTracker(Calibration calib, const affinity::SimilarityProvider& camera_provider,
                           const affinity::SimilarityProvider& lidar_provider, TrackerConfig cfg,
                           CaseMask mask)
    : calib_(std::move(calib)),
      camera_provider_(&camera_provider),
      lidar_provider_(&lidar_provider),
      cfg_(cfg),
      mask_(mask) {
  cfg_.validate();
  calib_.validate();
}

OutputFrame CrossTracker::step(std::span<const Detection> camera_dets,
                               std::span<const Detection> lidar_dets) {
  lidar_ = ctg_step(lidar_, lidar_dets, *lidar_provider_, cfg_);
  if (mask_.lidar_only) {
    camera_.next_frame = lidar_.next_frame;
  } else {
    camera_ = ctg_step(camera_, camera_dets, *camera_provider_, cfg_);
    tr_prematch(lidar_, camera_, calib_, cfg_);
  }
  tr_step1(lidar_, camera_, calib_, cfg_, mask_);
  tr_step2(lidar_, camera_, calib_, cfg_, mask_);
  tr_step3(lidar_, camera_, calib_, cfg_, mask_);
  return finalize_output(lidar_, camera_, calib_, cfg_, mask_);
}

std::vector<OutputFrame> track_sequence(const FrameDetections& camera_dets,
                                        const FrameDetections& lidar_dets,
                                        const Calibration& calib,
                                        const affinity::SimilarityProvider& camera_provider,
                                        const affinity::SimilarityProvider& lidar_provider,
                                        const TrackerConfig& cfg, const CaseMask& mask) {
  CrossTracker tracker(calib, camera_provider, lidar_provider, cfg, mask);
  const std::size_t n_frames = std::max(camera_dets.size(), lidar_dets.size());
  const std::vector<Detection> empty;
  std::vector<OutputFrame> out;
  out.reserve(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto& cam = f < camera_dets.size() ? camera_dets[f] : empty;
    const auto& lid = f < lidar_dets.size() ? lidar_dets[f] : empty;
    out.push_back(tracker.step(cam, lid));
  }
  return out;
}

void check_invariants(const StreamState& state) {
  std::set<std::int64_t> ids;
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidInput, what); };
  auto check_set = [&](const std::vector<Track>& tracks, TrackStatus status) {
    for (const auto& t : tracks) {
      if (!ids.insert(t.track_id).second) fail("track id " + std::to_string(t.track_id) + " repeats");
      if (t.stream != state.stream) fail("track stream differs from state stream");
      if (t.status != status) fail("track status differs from its set");
      if (t.hits < 0 || t.time_since_update < 0 || t.frames_since_detection < 0) {
        fail("negative hit or age counter");
      }
      if (status == TrackStatus::matched && t.time_since_update != 0) {
        fail("matched track with non-zero time since update");
      }
    }
    for (std::size_t i = 1; i < tracks.size(); ++i) {
      if (tracks[i - 1].track_id >= tracks[i].track_id) fail("track set not ordered by id");
    }
  };
  check_set(state.matched, TrackStatus::matched);
  check_set(state.unmatched_dets, TrackStatus::unmatched_detection);
  check_set(state.unmatched_trajs, TrackStatus::unmatched_trajectory);
}

void check_links(const StreamState& lidar, const StreamState& camera) {
  auto verify = [](const StreamState& self, const StreamState& other) {
    for_each_track(self, [&](const Track& t) {
      if (!t.link_id) return;
      const Track* partner = other.find(*t.link_id);
      if (partner == nullptr) {
        throw Error(ErrorCode::InvalidInput, "link to a track that is not alive");
      }
      if (partner->link_id != t.track_id) {
        throw Error(ErrorCode::InvalidInput, "link is not symmetric");
      }
    });
  };
  verify(lidar, camera);
  verify(camera, lidar);
}

}  // namespace crosstrack::tracker
