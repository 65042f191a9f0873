#include "crosstrack/kitti_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "crosstrack/geometry.hpp"

namespace crosstrack::kitti {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Iterates non-blank lines, passing (line number, fields).
template <class Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    fn(line_no, fields);
  }
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + what);
}

double to_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    parse_error(line_no, "bad number '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t to_int(std::string_view s, std::size_t line_no) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    parse_error(line_no, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

void append_fixed(std::string& out, double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), " %.6f", v);
  out.append(buf, static_cast<std::size_t>(n));
}

/// The value a reader gets back from the six-decimal text of `v`.
double as_printed(double v) {
  char buf[64];
  const int n = std::snprintf(buf, sizeof(buf), "%.6f", v);
  double out = 0.0;
  std::from_chars(buf, buf + n, out);
  return out;
}

/// The box a reader reconstructs from the written fields. Derived columns
/// (alpha, projected 2D box) are computed from this so rewriting parsed
/// records reproduces them byte for byte.
BBox3D as_printed(const BBox3D& box) {
  const double h = as_printed(box.h);
  return {as_printed(box.x),
          as_printed(box.y + 0.5 * box.h) - 0.5 * h,
          as_printed(box.z),
          as_printed(box.l),
          as_printed(box.w),
          h,
          std::clamp(as_printed(box.yaw), -std::numbers::pi, std::numbers::pi)};
}

double observation_angle(const BBox3D& box) {
  const auto b = as_printed(box);
  return geometry::wrap_angle(b.yaw - std::atan2(b.x, b.z));
}

void append_box2d(std::string& out, const std::optional<BBox2D>& box) {
  if (box) {
    append_fixed(out, box->left);
    append_fixed(out, box->top);
    append_fixed(out, box->right);
    append_fixed(out, box->bottom);
  } else {
    for (int i = 0; i < 4; ++i) append_fixed(out, -1.0);
  }
}

/// h w l x y z ry with y moved to the bottom face.
void append_box3d(std::string& out, const BBox3D& box) {
  append_fixed(out, box.h);
  append_fixed(out, box.w);
  append_fixed(out, box.l);
  append_fixed(out, box.x);
  append_fixed(out, box.y + 0.5 * box.h);
  append_fixed(out, box.z);
  append_fixed(out, box.yaw);
}

std::optional<BBox2D> read_box2d(const std::vector<std::string_view>& f, std::size_t at,
                                 std::size_t line_no) {
  BBox2D box{to_double(f[at], line_no), to_double(f[at + 1], line_no),
             to_double(f[at + 2], line_no), to_double(f[at + 3], line_no)};
  if (!box.valid()) return std::nullopt;
  return box;
}

BBox3D read_box3d(const std::vector<std::string_view>& f, std::size_t at, std::size_t line_no) {
  const double h = to_double(f[at], line_no);
  const double w = to_double(f[at + 1], line_no);
  const double l = to_double(f[at + 2], line_no);
  const double x = to_double(f[at + 3], line_no);
  const double y_bottom = to_double(f[at + 4], line_no);
  const double z = to_double(f[at + 5], line_no);
  // Six-decimal rounding can push +-pi just outside the closed range.
  const double yaw =
      std::clamp(to_double(f[at + 6], line_no), -std::numbers::pi, std::numbers::pi);
  BBox3D box{x, y_bottom - 0.5 * h, z, l, w, h, yaw};
  if (!box.valid()) parse_error(line_no, "invalid 3D box");
  return box;
}

void place(FrameDetections& frames, Detection det) {
  if (det.frame >= static_cast<std::int64_t>(frames.size())) frames.resize(det.frame + 1);
  frames[det.frame].push_back(std::move(det));
}

std::string line_prefix(std::int64_t frame, std::int64_t id) {
  return std::to_string(frame) + ' ' + std::to_string(id) + ' ' + std::string(kObjectType);
}

std::string format_shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string write_camera_detections(const FrameDetections& frames) {
  std::string out;
  for (const auto& frame : frames) {
    for (const auto& d : frame) {
      out += line_prefix(d.frame, d.truth_id.value_or(-1));
      out += " -1 -1";
      append_fixed(out, -10.0);
      append_box2d(out, d.box2d);
      append_fixed(out, d.score);
      out += '\n';
    }
  }
  return out;
}

std::string write_lidar_detections(const FrameDetections& frames) {
  std::string out;
  for (const auto& frame : frames) {
    for (const auto& d : frame) {
      out += line_prefix(d.frame, d.truth_id.value_or(-1));
      out += " -1 -1";
      append_fixed(out, observation_angle(*d.box3d));
      append_box2d(out, d.box2d);
      append_box3d(out, *d.box3d);
      append_fixed(out, d.score);
      out += '\n';
    }
  }
  return out;
}

FrameDetections parse_camera_detections(std::string_view text, std::int64_t n_frames) {
  FrameDetections frames(std::max<std::int64_t>(n_frames, 0));
  std::int64_t next_id = 0;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 11) parse_error(line_no, "camera detection needs 11 fields");
    Detection d;
    d.frame = to_int(f[0], line_no);
    const std::int64_t truth = to_int(f[1], line_no);
    if (truth >= 0) d.truth_id = truth;
    d.stream = Stream::camera;
    d.box2d = read_box2d(f, 6, line_no);
    if (!d.box2d) parse_error(line_no, "invalid 2D box");
    d.score = to_double(f[10], line_no);
    d.det_id = next_id++;
    try {
      d.validate();
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
    place(frames, std::move(d));
  });
  return frames;
}

FrameDetections parse_lidar_detections(std::string_view text, std::int64_t n_frames) {
  FrameDetections frames(std::max<std::int64_t>(n_frames, 0));
  std::int64_t next_id = 0;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 18) parse_error(line_no, "lidar detection needs 18 fields");
    Detection d;
    d.frame = to_int(f[0], line_no);
    const std::int64_t truth = to_int(f[1], line_no);
    if (truth >= 0) d.truth_id = truth;
    d.stream = Stream::lidar;
    d.box2d = read_box2d(f, 6, line_no);
    d.box3d = read_box3d(f, 10, line_no);
    d.score = to_double(f[17], line_no);
    d.det_id = next_id++;
    try {
      d.validate();
    } catch (const Error& e) {
      parse_error(line_no, e.what());
    }
    place(frames, std::move(d));
  });
  return frames;
}

std::string write_ground_truth(const std::vector<sim::GroundTruthTrack>& tracks,
                               const Calibration& calib) {
  std::vector<std::tuple<std::int64_t, std::int64_t, BBox3D>> rows;
  for (const auto& t : tracks) {
    for (const auto& [frame, box] : t.boxes) rows.emplace_back(frame, t.gt_id, box);
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
  });
  std::string out;
  for (const auto& [frame, id, box] : rows) {
    out += line_prefix(frame, id);
    out += " 0 0";
    append_fixed(out, observation_angle(box));
    append_box2d(out, geometry::try_project_box_3d(as_printed(box), calib));
    append_box3d(out, box);
    out += '\n';
  }
  return out;
}

std::vector<sim::GroundTruthTrack> parse_ground_truth(std::string_view text) {
  std::map<std::int64_t, sim::GroundTruthTrack> by_id;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 17) parse_error(line_no, "ground-truth record needs 17 fields");
    const std::int64_t frame = to_int(f[0], line_no);
    const std::int64_t id = to_int(f[1], line_no);
    if (f[2] == "DontCare") return;
    auto& track = by_id[id];
    track.gt_id = id;
    track.boxes.emplace_back(frame, read_box3d(f, 10, line_no));
  });
  std::vector<sim::GroundTruthTrack> out;
  for (auto& [id, track] : by_id) {
    std::sort(track.boxes.begin(), track.boxes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    out.push_back(std::move(track));
  }
  return out;
}

std::string write_tracking(const std::vector<tracker::OutputFrame>& frames) {
  std::string out;
  for (const auto& frame : frames) {
    for (const auto& e : frame.entries) {
      out += line_prefix(frame.frame, e.track_id);
      out += " -1 -1";
      append_fixed(out, observation_angle(e.box3d));
      append_box2d(out, e.box2d);
      append_box3d(out, e.box3d);
      append_fixed(out, e.score);
      out += '\n';
    }
  }
  return out;
}

std::vector<tracker::OutputFrame> parse_tracking(std::string_view text) {
  std::vector<tracker::OutputFrame> frames;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 18) parse_error(line_no, "tracking record needs 18 fields");
    const std::int64_t frame = to_int(f[0], line_no);
    if (frame < 0) parse_error(line_no, "negative frame");
    tracker::OutputEntry e;
    e.track_id = to_int(f[1], line_no);
    const auto box = read_box2d(f, 6, line_no);
    if (!box) parse_error(line_no, "invalid 2D box");
    e.box2d = *box;
    e.box3d = read_box3d(f, 10, line_no);
    e.score = to_double(f[17], line_no);
    while (static_cast<std::int64_t>(frames.size()) <= frame) {
      frames.push_back({static_cast<std::int64_t>(frames.size()), {}});
    }
    frames[frame].entries.push_back(e);
  });
  return frames;
}

std::string write_calibration(const Calibration& calib) {
  std::string out = "P2:";
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out += ' ' + format_shortest(calib.projection(r, c));
  }
  out += "\nimage_size: " + std::to_string(calib.image_width) + ' ' +
         std::to_string(calib.image_height) + '\n';
  return out;
}

Calibration parse_calibration(std::string_view text) {
  Calibration calib;
  calib.image_width = 1242;
  calib.image_height = 375;
  bool have_projection = false;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    std::string_view key = f[0];
    if (!key.empty() && key.back() == ':') key.remove_suffix(1);
    if (key == "P2" || key == "P_rect_02") {
      if (f.size() != 13) parse_error(line_no, "P2 needs 12 values");
      for (int i = 0; i < 12; ++i) calib.projection(i / 4, i % 4) = to_double(f[1 + i], line_no);
      have_projection = true;
    } else if (key == "image_size") {
      if (f.size() != 3) parse_error(line_no, "image_size needs width and height");
      calib.image_width = static_cast<int>(to_int(f[1], line_no));
      calib.image_height = static_cast<int>(to_int(f[2], line_no));
    }
  });
  if (!have_projection) throw Error(ErrorCode::Parse, "calibration has no P2 projection");
  calib.validate();
  return calib;
}

std::string write_fault_log(const std::vector<sim::FaultRecord>& log) {
  std::string out;
  for (const auto& r : log) {
    out += std::to_string(r.frame) + ' ' + std::to_string(r.gt_id.value_or(-1)) + ' ' +
           std::string(sim::to_string(r.kind)) + '\n';
  }
  return out;
}

std::vector<sim::FaultRecord> parse_fault_log(std::string_view text) {
  std::vector<sim::FaultRecord> log;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() != 3) parse_error(line_no, "fault record needs 3 fields");
    sim::FaultRecord r;
    r.frame = to_int(f[0], line_no);
    const std::int64_t gt = to_int(f[1], line_no);
    if (gt >= 0) r.gt_id = gt;
    r.kind = sim::parse_fault_kind(f[2]);
    log.push_back(r);
  });
  return log;
}

std::string write_embeddings(const FrameDetections& frames) {
  std::string out;
  for (const auto& frame : frames) {
    for (const auto& d : frame) {
      if (!d.embedding) continue;
      out += std::to_string(d.frame) + ' ' + std::to_string(d.det_id) + ' ' +
             std::to_string(d.embedding->size());
      for (double v : *d.embedding) append_fixed(out, v);
      out += '\n';
    }
  }
  return out;
}

void attach_embeddings(FrameDetections& frames, std::string_view text) {
  std::map<std::int64_t, Detection*> by_id;
  for (auto& frame : frames) {
    for (auto& d : frame) by_id[d.det_id] = &d;
  }
  std::optional<std::size_t> dim;
  for_each_record(text, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    if (f.size() < 3) parse_error(line_no, "embedding needs frame, det_id and length");
    const std::int64_t frame = to_int(f[0], line_no);
    const std::int64_t det_id = to_int(f[1], line_no);
    const std::int64_t d = to_int(f[2], line_no);
    if (d <= 0 || static_cast<std::size_t>(d) + 3 != f.size()) {
      parse_error(line_no, "embedding length does not match the value count");
    }
    if (dim && *dim != static_cast<std::size_t>(d)) {
      parse_error(line_no, "embedding length differs from earlier records");
    }
    dim = static_cast<std::size_t>(d);
    const auto it = by_id.find(det_id);
    if (it == by_id.end()) parse_error(line_no, "unknown det_id " + std::to_string(det_id));
    if (it->second->frame != frame) parse_error(line_no, "frame disagrees with the detection");
    std::vector<double> values;
    values.reserve(*dim);
    for (std::size_t i = 3; i < f.size(); ++i) values.push_back(to_double(f[i], line_no));
    it->second->embedding = std::move(values);
  });
}

eval::Trajectories project_ground_truth(const std::vector<sim::GroundTruthTrack>& tracks,
                                        const Calibration& calib) {
  eval::Trajectories out;
  for (const auto& t : tracks) {
    for (const auto& [frame, box] : t.boxes) {
      if (auto image = geometry::try_project_box_3d(box, calib)) {
        out.push_back({frame, t.gt_id, *image});
      }
    }
  }
  return out;
}

eval::Trajectories output_trajectories(const std::vector<tracker::OutputFrame>& frames) {
  eval::Trajectories out;
  for (const auto& frame : frames) {
    for (const auto& e : frame.entries) out.push_back({frame.frame, e.track_id, e.box2d});
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace crosstrack::kitti
