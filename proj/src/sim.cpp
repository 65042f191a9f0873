#include "crosstrack/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <string>

#include <Eigen/Geometry>

#include "crosstrack/geometry.hpp"
#include "crosstrack/rng.hpp"

namespace crosstrack::sim {
namespace {

constexpr double kCameraHeight = 1.65;
constexpr std::array<double, 6> kLanes = {-10.0, -6.0, -2.0, 2.0, 6.0, 10.0};
constexpr double kZMax = 55.0;
constexpr double kLaneDrift = 0.5;
constexpr double kInsideMargin = 20.0;
constexpr double kFalseMaxIou = 0.2;
constexpr double kFalseMinDistance = 6.0;
constexpr int kFalsePlacementTries = 50;

// Independent random streams; see CounterRng.
enum Tag : std::uint64_t {
  kTagMotion = 1,
  kTagFaults = 2,
  kTagCameraNoise = 3,
  kTagLidarNoise = 4,
  kTagFalseCamera = 5,
  kTagFalseLidar = 6,
  kTagScores = 7,
};

double z_min_for(double x) { return std::max(12.0, (std::abs(x) + 3.0) / 0.6); }

/// Projected hull without clipping; nullopt when a corner is behind the camera.
std::optional<BBox2D> unclipped_hull(const BBox3D& box, const Calibration& calib) {
  BBox2D hull{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
              -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& corner : geometry::box_corners(box)) {
    const Eigen::Vector3d p = calib.projection * corner.homogeneous();
    if (p.z() <= 0.0) return std::nullopt;
    hull.left = std::min(hull.left, p.x() / p.z());
    hull.right = std::max(hull.right, p.x() / p.z());
    hull.top = std::min(hull.top, p.y() / p.z());
    hull.bottom = std::max(hull.bottom, p.y() / p.z());
  }
  return hull;
}

bool inside_image(const BBox2D& box, const Calibration& calib, double margin) {
  return box.left >= margin && box.top >= margin && box.right <= calib.image_width - margin &&
         box.bottom <= calib.image_height - margin;
}

struct Mover {
  BBox3D box;
  double lane_x = 0.0;
  double vx = 0.0;
  double vz = 0.0;
  int segment_left = 0;
  bool alive = true;
};

BBox3D car_box(double x, double z, double l, double w, double h) {
  return BBox3D{x, ground_centroid_y(h), z, l, w, h, std::numbers::pi / 2.0};
}

/// Builds detections for one frame given which objects each stream sees.
struct FrameBuilder {
  const Calibration& calib;
  std::int64_t next_camera_id = 0;
  std::int64_t next_lidar_id = 0;

  Detection camera(std::int64_t frame, std::int64_t gt, const BBox2D& box, double score) {
    Detection d = Detection::camera(frame, box, score, next_camera_id++);
    d.truth_id = gt;
    return d;
  }

  Detection lidar(std::int64_t frame, std::optional<std::int64_t> gt, const BBox3D& box,
                  double score) {
    Detection d = Detection::lidar(frame, box, score, next_lidar_id++);
    d.truth_id = gt;
    d.box2d = geometry::try_project_box_3d(box, calib);
    return d;
  }
};

}  // namespace

double ground_centroid_y(double height) { return kCameraHeight - 0.5 * height; }

int lane_count() { return static_cast<int>(kLanes.size()); }

void FaultSpec::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidFaultSpec, std::string(name) + " must lie in [0, 1]");
    }
  };
  auto non_negative = [](double v, const char* name) {
    if (!(std::isfinite(v) && v >= 0.0)) {
      throw Error(ErrorCode::InvalidFaultSpec, std::string(name) + " must be finite and >= 0");
    }
  };
  prob(p_miss_cam, "p_miss_cam");
  prob(p_miss_lidar, "p_miss_lidar");
  prob(p_miss_both, "p_miss_both");
  non_negative(p_false_cam, "p_false_cam");
  non_negative(p_false_lidar, "p_false_lidar");
  non_negative(pos_noise_px, "pos_noise_px");
  non_negative(pos_noise_m, "pos_noise_m");
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::miss_camera: return "miss_camera";
    case FaultKind::miss_lidar: return "miss_lidar";
    case FaultKind::miss_both: return "miss_both";
    case FaultKind::false_camera: return "false_camera";
    case FaultKind::false_lidar: return "false_lidar";
  }
  return "miss_camera";
}

FaultKind parse_fault_kind(std::string_view text) {
  for (auto k : {FaultKind::miss_camera, FaultKind::miss_lidar, FaultKind::miss_both,
                 FaultKind::false_camera, FaultKind::false_lidar}) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::Parse, "unknown fault kind '" + std::string(text) + "'");
}

std::string_view to_string(ScriptedCase c) {
  switch (c) {
    case ScriptedCase::a: return "a";
    case ScriptedCase::b: return "b";
    case ScriptedCase::c: return "c";
    case ScriptedCase::d: return "d";
    case ScriptedCase::e: return "e";
    case ScriptedCase::boundary: return "boundary";
  }
  return "a";
}

ScriptedCase parse_scripted_case(std::string_view text) {
  for (auto c : {ScriptedCase::a, ScriptedCase::b, ScriptedCase::c, ScriptedCase::d,
                 ScriptedCase::e, ScriptedCase::boundary}) {
    if (to_string(c) == text) return c;
  }
  throw Error(ErrorCode::InvalidInput,
              "unknown scripted case '" + std::string(text) + "' (expected a-e or boundary)");
}

namespace {

bool same_detection(const Detection& a, const Detection& b) {
  return a.frame == b.frame && a.stream == b.stream && a.box2d == b.box2d && a.box3d == b.box3d &&
         a.score == b.score && a.det_id == b.det_id && a.truth_id == b.truth_id &&
         a.embedding == b.embedding;
}

bool same_frames(const FrameDetections& a, const FrameDetections& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t f = 0; f < a.size(); ++f) {
    if (a[f].size() != b[f].size()) return false;
    for (std::size_t i = 0; i < a[f].size(); ++i) {
      if (!same_detection(a[f][i], b[f][i])) return false;
    }
  }
  return true;
}

}  // namespace

bool operator==(const Scenario& a, const Scenario& b) {
  return a.n_frames == b.n_frames && a.gt_tracks == b.gt_tracks &&
         same_frames(a.camera_dets, b.camera_dets) && same_frames(a.lidar_dets, b.lidar_dets) &&
         a.fault_log == b.fault_log && a.calib.projection == b.calib.projection &&
         a.calib.image_width == b.calib.image_width &&
         a.calib.image_height == b.calib.image_height && a.window == b.window;
}

Scenario generate(int n_objects, int n_frames, const FaultSpec& spec) {
  spec.validate();
  if (n_objects < 1 || n_frames < 2) {
    throw Error(ErrorCode::InvalidInput, "need at least one object and two frames");
  }
  if (n_objects > lane_count()) {
    throw Error(ErrorCode::InfeasibleScene, std::to_string(n_objects) +
                                                " objects do not fit the " +
                                                std::to_string(lane_count()) + " lanes in view");
  }

  Scenario scn;
  scn.n_frames = n_frames;
  scn.calib = Calibration::kitti_default();
  scn.camera_dets.resize(n_frames);
  scn.lidar_dets.resize(n_frames);

  CounterRng motion_rng(spec.seed, kTagMotion);
  CounterRng fault_rng(spec.seed, kTagFaults);
  CounterRng cam_noise(spec.seed, kTagCameraNoise);
  CounterRng lidar_noise(spec.seed, kTagLidarNoise);
  CounterRng false_cam_rng(spec.seed, kTagFalseCamera);
  CounterRng false_lidar_rng(spec.seed, kTagFalseLidar);
  CounterRng score_rng(spec.seed, kTagScores);

  std::array<double, kLanes.size()> lanes = kLanes;
  for (std::size_t i = lanes.size() - 1; i > 0; --i) {
    std::swap(lanes[i], lanes[motion_rng.below(i + 1)]);
  }

  std::vector<Mover> movers(n_objects);
  for (int k = 0; k < n_objects; ++k) {
    Mover& m = movers[k];
    m.lane_x = lanes[k];
    const double z_lo = z_min_for(m.lane_x);
    const double z = motion_rng.uniform(z_lo + 3.0, kZMax - 3.0);
    m.box = car_box(m.lane_x, z, motion_rng.uniform(3.5, 4.5), motion_rng.uniform(1.6, 1.9),
                    motion_rng.uniform(1.4, 1.7));
    m.vz = motion_rng.uniform(-0.5, 0.5);
    m.vx = motion_rng.uniform(-0.03, 0.03);
    if (spec.boundary_exit) {
      const double speed = motion_rng.uniform(0.2, 0.4);
      m.vx = m.lane_x < 0.0 ? -speed : speed;
    }
    m.segment_left = static_cast<int>(motion_rng.uniform(15.0, 40.0));
    scn.gt_tracks.push_back({k, {}});
  }

  FrameBuilder builder{scn.calib};
  for (int f = 0; f < n_frames; ++f) {
    std::vector<BBox2D> gt_image;
    std::vector<BBox3D> gt_space;
    auto& cam = scn.camera_dets[f];
    auto& lid = scn.lidar_dets[f];

    for (int k = 0; k < n_objects; ++k) {
      Mover& m = movers[k];
      const double u_both = fault_rng.uniform();
      const double u_cam = fault_rng.uniform();
      const double u_lidar = fault_rng.uniform();
      const double n_edges[4] = {cam_noise.normal(), cam_noise.normal(), cam_noise.normal(),
                                 cam_noise.normal()};
      const double n_pos[3] = {lidar_noise.normal(), lidar_noise.normal(), lidar_noise.normal()};
      const double cam_score = score_rng.uniform(0.6, 1.0);
      const double lidar_score = score_rng.uniform(0.6, 1.0);

      if (m.alive && spec.boundary_exit) {
        const auto hull = unclipped_hull(m.box, scn.calib);
        const auto clipped = geometry::try_project_box_3d(m.box, scn.calib);
        m.alive = hull && clipped && clipped->area() >= 0.5 * hull->area();
      }
      if (!m.alive) continue;

      const BBox2D projected = geometry::project_box_3d(m.box, scn.calib);
      if (!spec.boundary_exit && !inside_image(projected, scn.calib, kInsideMargin)) {
        throw Error(ErrorCode::InfeasibleScene, "object left the image in a non-exit scenario");
      }
      scn.gt_tracks[k].boxes.emplace_back(f, m.box);
      gt_image.push_back(projected);
      gt_space.push_back(m.box);

      const bool miss_both = u_both < spec.p_miss_both;
      const bool miss_cam = miss_both || u_cam < spec.p_miss_cam;
      const bool miss_lidar = miss_both || u_lidar < spec.p_miss_lidar;
      if (miss_both) {
        scn.fault_log.push_back({f, k, FaultKind::miss_both});
      } else {
        if (miss_cam) scn.fault_log.push_back({f, k, FaultKind::miss_camera});
        if (miss_lidar) scn.fault_log.push_back({f, k, FaultKind::miss_lidar});
      }

      if (!miss_cam) {
        const double s = spec.pos_noise_px;
        BBox2D noisy{std::clamp(projected.left + s * n_edges[0], 0.0, 1.0 * scn.calib.image_width),
                     std::clamp(projected.top + s * n_edges[1], 0.0, 1.0 * scn.calib.image_height),
                     std::clamp(projected.right + s * n_edges[2], 0.0, 1.0 * scn.calib.image_width),
                     std::clamp(projected.bottom + s * n_edges[3], 0.0,
                                1.0 * scn.calib.image_height)};
        cam.push_back(builder.camera(f, k, noisy.valid() ? noisy : projected, cam_score));
      }
      if (!miss_lidar) {
        BBox3D noisy = m.box;
        noisy.x += spec.pos_noise_m * n_pos[0];
        noisy.y += spec.pos_noise_m * n_pos[1];
        noisy.z += spec.pos_noise_m * n_pos[2];
        lid.push_back(builder.lidar(f, k, noisy, lidar_score));
      }
    }

    const int n_false_cam = false_cam_rng.poisson(spec.p_false_cam);
    for (int i = 0; i < n_false_cam; ++i) {
      for (int attempt = 0; attempt < kFalsePlacementTries; ++attempt) {
        const double w = false_cam_rng.uniform(30.0, 120.0);
        const double h = w * false_cam_rng.uniform(0.5, 1.2);
        const double left = false_cam_rng.uniform(0.0, scn.calib.image_width - w);
        const double top = false_cam_rng.uniform(0.0, scn.calib.image_height - h);
        const double score = false_cam_rng.uniform(0.3, 0.7);
        const BBox2D box{left, top, left + w, top + h};
        const bool clear = std::all_of(gt_image.begin(), gt_image.end(), [&](const BBox2D& g) {
          return geometry::iou_2d(g, box) <= kFalseMaxIou;
        });
        if (!clear) continue;
        Detection d = Detection::camera(f, box, score, builder.next_camera_id++);
        cam.push_back(std::move(d));
        scn.fault_log.push_back({f, std::nullopt, FaultKind::false_camera});
        break;
      }
    }

    const int n_false_lidar = false_lidar_rng.poisson(spec.p_false_lidar);
    for (int i = 0; i < n_false_lidar; ++i) {
      for (int attempt = 0; attempt < kFalsePlacementTries; ++attempt) {
        const double x = false_lidar_rng.uniform(-12.0, 12.0);
        const double z = false_lidar_rng.uniform(12.0, kZMax);
        const double score = false_lidar_rng.uniform(0.3, 0.7);
        const BBox3D box = car_box(x, z, 4.0, 1.8, 1.5);
        const auto image = geometry::try_project_box_3d(box, scn.calib);
        if (!image || !inside_image(*image, scn.calib, 0.0)) continue;
        bool clear = true;
        for (std::size_t g = 0; g < gt_image.size() && clear; ++g) {
          clear = geometry::iou_2d(gt_image[g], *image) <= kFalseMaxIou &&
                  geometry::centroid_distance_3d(gt_space[g], box) >= kFalseMinDistance;
        }
        if (!clear) continue;
        lid.push_back(builder.lidar(f, std::nullopt, box, score));
        scn.fault_log.push_back({f, std::nullopt, FaultKind::false_lidar});
        break;
      }
    }

    for (auto& m : movers) {
      if (!m.alive) continue;
      if (--m.segment_left <= 0) {
        m.vz = motion_rng.uniform(-0.5, 0.5);
        m.segment_left = static_cast<int>(motion_rng.uniform(15.0, 40.0));
      }
      const double z_lo = z_min_for(spec.boundary_exit ? 0.0 : m.lane_x);
      m.box.z += m.vz;
      if (m.box.z < z_lo) {
        m.box.z = 2.0 * z_lo - m.box.z;
        m.vz = -m.vz;
      } else if (m.box.z > kZMax) {
        m.box.z = 2.0 * kZMax - m.box.z;
        m.vz = -m.vz;
      }
      m.box.x += m.vx;
      if (!spec.boundary_exit && std::abs(m.box.x - m.lane_x) > kLaneDrift) {
        m.vx = -m.vx;
        m.box.x += 2.0 * m.vx;
      }
    }
  }
  return scn;
}

namespace {

/// Single object on a fixed path with explicit per-stream visibility.
Scenario build_scripted(std::int64_t n_frames, const std::function<BBox3D(std::int64_t)>& path,
                        std::int64_t first_frame, const std::set<std::int64_t>& camera_missing,
                        const std::set<std::int64_t>& lidar_missing) {
  Scenario scn;
  scn.n_frames = n_frames;
  scn.calib = Calibration::kitti_default();
  scn.camera_dets.resize(n_frames);
  scn.lidar_dets.resize(n_frames);
  scn.gt_tracks.push_back({0, {}});
  FrameBuilder builder{scn.calib};
  constexpr double kScore = 0.9;
  for (std::int64_t f = first_frame; f < n_frames; ++f) {
    const BBox3D box = path(f);
    scn.gt_tracks[0].boxes.emplace_back(f, box);
    const bool cam_miss = camera_missing.contains(f);
    const bool lidar_miss = lidar_missing.contains(f);
    if (cam_miss && lidar_miss) {
      scn.fault_log.push_back({f, 0, FaultKind::miss_both});
    } else if (cam_miss) {
      scn.fault_log.push_back({f, 0, FaultKind::miss_camera});
    } else if (lidar_miss) {
      scn.fault_log.push_back({f, 0, FaultKind::miss_lidar});
    }
    if (!cam_miss) {
      scn.camera_dets[f].push_back(
          builder.camera(f, 0, geometry::project_box_3d(box, scn.calib), kScore));
    }
    if (!lidar_miss) scn.lidar_dets[f].push_back(builder.lidar(f, 0, box, kScore));
  }
  return scn;
}

std::set<std::int64_t> frame_range(std::int64_t first, std::int64_t last) {
  std::set<std::int64_t> out;
  for (std::int64_t f = first; f <= last; ++f) out.insert(f);
  return out;
}

}  // namespace

Scenario scripted_case(ScriptedCase which, const TrackerConfig& cfg) {
  constexpr std::int64_t kFrames = 12;
  const std::int64_t gap = std::min<std::int64_t>(2, cfg.max_age_N);
  auto approaching = [](std::int64_t f) { return car_box(-1.0, 20.0 - 0.3 * f, 4.0, 1.8, 1.5); };

  Scenario scn;
  FaultWindow window;
  switch (which) {
    case ScriptedCase::a: {
      scn = build_scripted(kFrames, approaching, 0, {}, frame_range(0, 1));
      window = {0, 2, 2, 2, kFrames - 1};
      break;
    }
    case ScriptedCase::b: {
      constexpr std::int64_t kBirth = 3;
      scn = build_scripted(kFrames, approaching, kBirth, {}, {});
      window = {0, kBirth, kBirth, kBirth, kFrames - 1};
      break;
    }
    case ScriptedCase::c: {
      scn = build_scripted(kFrames, approaching, 0, frame_range(5, 4 + gap), {});
      window = {0, 5, 4 + gap, 4, 5 + gap};
      break;
    }
    case ScriptedCase::d: {
      scn = build_scripted(kFrames, approaching, 0, {}, frame_range(5, 4 + gap));
      window = {0, 5, 4 + gap, 4, 5 + gap};
      break;
    }
    case ScriptedCase::e: {
      scn = build_scripted(kFrames, approaching, 0, {6}, {6});
      window = {0, 6, 6, 5, 7};
      break;
    }
    case ScriptedCase::boundary: {
      // Stationary object whose image box sits inside the border margin.
      const Calibration calib = Calibration::kitti_default();
      const double target_left = 0.4 * cfg.boundary_margin;
      constexpr double kDepth = 15.0;
      double lo = -20.0;
      double hi = 0.0;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto hull = unclipped_hull(car_box(mid, kDepth, 4.0, 1.8, 1.5), calib);
        if (hull && hull->left < target_left) lo = mid;
        else hi = mid;
      }
      const BBox3D parked = car_box(hi, kDepth, 4.0, 1.8, 1.5);
      scn = build_scripted(kFrames, [parked](std::int64_t) { return parked; }, 0, {6}, {6});
      window = {0, 6, 6, 5, 7};
      break;
    }
  }
  scn.window = window;
  return scn;
}

}  // namespace crosstrack::sim
