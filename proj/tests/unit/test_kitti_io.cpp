#include <gtest/gtest.h>

#include <filesystem>
#include <regex>
#include <functional>
#include <sstream>

#include "fixture_path.hpp"
#include "crosstrack/experiment.hpp"
#include "crosstrack/kitti_io.hpp"

using namespace crosstrack;
using namespace crosstrack::kitti;

namespace {

sim::Scenario noisy_scenario(std::uint64_t seed) {
  return sim::generate(5, 40, sim::FaultSpec{0.1, 0.1, 0.03, 0.3, 0.3, 1.0, 0.05, false, seed});
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::Io;
}

const std::regex kTrackingLine(
    R"(^\d+ -?\d+ Car -1 -1( -?\d+\.\d{6}){13}$)");

}  // namespace

TEST(KittiIo, DetectionRoundTripIsByteStable) {
  const auto s = noisy_scenario(1);
  const auto cam = write_camera_detections(s.camera_dets);
  const auto lid = write_lidar_detections(s.lidar_dets);
  EXPECT_EQ(write_camera_detections(parse_camera_detections(cam)), cam);
  EXPECT_EQ(write_lidar_detections(parse_lidar_detections(lid)), lid);
  const auto back = parse_lidar_detections(lid, s.n_frames);
  ASSERT_EQ(back.size(), static_cast<std::size_t>(s.n_frames));
  for (std::int64_t f = 0; f < s.n_frames; ++f) {
    ASSERT_EQ(back[f].size(), s.lidar_dets[f].size());
    for (std::size_t i = 0; i < back[f].size(); ++i) {
      const auto& a = *back[f][i].box3d;
      const auto& b = *s.lidar_dets[f][i].box3d;
      EXPECT_NEAR(a.x, b.x, 1e-6);
      EXPECT_NEAR(a.y, b.y, 1e-6);
      EXPECT_NEAR(a.z, b.z, 1e-6);
      EXPECT_EQ(back[f][i].truth_id, s.lidar_dets[f][i].truth_id);
    }
  }
}

TEST(KittiIo, ReadersAssignRunningDetIds) {
  const auto s = noisy_scenario(2);
  const auto back = parse_camera_detections(write_camera_detections(s.camera_dets));
  std::int64_t expect = 0;
  for (const auto& f : back) {
    for (const auto& d : f) EXPECT_EQ(d.det_id, expect++);
  }
}

TEST(KittiIo, BottomCenterConvention) {
  const auto frames = parse_lidar_detections(
      "0 -1 Car -1 -1 0.0 -1 -1 -1 -1 1.5 1.8 4.0 1.0 1.65 20.0 1.570796 0.8\n");
  const auto& b = *frames[0][0].box3d;
  EXPECT_NEAR(b.y, 0.9, 1e-12);
  EXPECT_FALSE(frames[0][0].box2d);
  EXPECT_FALSE(frames[0][0].truth_id);
  const auto text = write_lidar_detections(frames);
  EXPECT_NE(text.find(" 1.650000 20.000000 "), std::string::npos);
}

TEST(KittiIo, GroundTruthRoundTrip) {
  const auto s = noisy_scenario(3);
  const auto text = write_ground_truth(s.gt_tracks, s.calib);
  const auto back = parse_ground_truth(text);
  EXPECT_EQ(write_ground_truth(back, s.calib), text);
  ASSERT_EQ(back.size(), s.gt_tracks.size());
  EXPECT_EQ(back[2].boxes.size(), s.gt_tracks[2].boxes.size());
}

TEST(KittiIo, TrackingRoundTripAndLayout) {
  const auto s = noisy_scenario(4);
  affinity::ZeroProvider zero;
  const auto out = tracker::track_sequence(s.camera_dets, s.lidar_dets, s.calib, zero, zero,
                                           default_config());
  const auto text = write_tracking(out);
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(write_tracking(parse_tracking(text)), text);
  for (const auto& l : lines(text)) EXPECT_TRUE(std::regex_match(l, kTrackingLine)) << l;
}

TEST(KittiIo, CalibrationRoundTrip) {
  const auto calib = Calibration::kitti_default();
  const auto text = write_calibration(calib);
  const auto back = parse_calibration(text);
  EXPECT_EQ(back.projection, calib.projection);
  EXPECT_EQ(back.image_width, 1242);
  EXPECT_EQ(write_calibration(back), text);

  const auto raw = parse_calibration(
      "P0: 1 0 0 0 0 1 0 0 0 0 1 0\nP2: 700 0 600 0 0 700 180 0 0 0 1 0\n");
  EXPECT_EQ(raw.projection(0, 0), 700.0);
  EXPECT_EQ(raw.image_height, 375);

  EXPECT_EQ(code_of([] { parse_calibration("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_calibration("P2: 0 0 0 0 0 0 0 0 0 0 0 0\n"); }),
            ErrorCode::InvalidCalibration);
}

TEST(KittiIo, FaultLogAndEmbeddings) {
  const auto s = noisy_scenario(5);
  const auto log = write_fault_log(s.fault_log);
  EXPECT_EQ(parse_fault_log(log), s.fault_log);

  auto cam = parse_camera_detections(write_camera_detections(s.camera_dets));
  for (auto& f : cam) {
    for (auto& d : f) d.embedding = std::vector<double>{0.25 * double(d.det_id), 1.0, -0.5};
  }
  const auto emb = write_embeddings(cam);
  auto fresh = parse_camera_detections(write_camera_detections(s.camera_dets));
  attach_embeddings(fresh, emb);
  EXPECT_EQ(write_embeddings(fresh), emb);
  EXPECT_EQ((*fresh[3][1].embedding)[1], 1.0);

  EXPECT_EQ(code_of([&] { attach_embeddings(fresh, "0 99999 2 0.1 0.2\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { attach_embeddings(fresh, "0 0 3 0.1 0.2\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([&] { attach_embeddings(fresh, "5 0 2 0.1 0.2\n"); }), ErrorCode::Parse);
}

TEST(KittiIo, MalformedRecords) {
  EXPECT_EQ(code_of([] { parse_camera_detections("0 -1 Car -1 -1 -10 1 2 3\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_camera_detections("0 -1 Car -1 -1 -10 1 2 3 x 0.5\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_camera_detections("0 -1 Car -1 -1 -10 10 2 3 4 0.5\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_lidar_detections("0 -1 Car -1 -1 0 -1 -1 -1 -1 1 1 -4 0 0 5 0 0.5\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_fault_log("3 1 exploded\n"); }), ErrorCode::Parse);
  try {
    parse_tracking("0 1 Car -1 -1 0 1 2 3 4\n\n");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(KittiIo, HandMadeFixtureLayout) {
  const std::filesystem::path root = std::filesystem::path(CROSSTRACK_FIXTURE_DIR) / "kitti";
  const experiment::Layout layout{root, {}, {}};
  const auto seq = experiment::load_sequence(layout, "0000");
  EXPECT_EQ(seq.n_frames, 10);
  EXPECT_EQ(seq.gt.size(), 2u);
  const auto out = experiment::run_sequence(seq, experiment::RunOptions{});
  const auto text = write_tracking(out);
  for (const auto& l : lines(text)) EXPECT_TRUE(std::regex_match(l, kTrackingLine)) << l;
  EXPECT_EQ(lines(text).size(), 20u);
  EXPECT_EQ(text, read_file(root / "expected" / "0000.txt"));
  const auto r = experiment::evaluate(seq, out, 0.5);
  EXPECT_EQ(r.MOTA, 1.0);
}

TEST(KittiIo, AtomicWriteAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "crosstrack_io_test";
  std::filesystem::remove_all(dir);
  write_file_atomic(dir / "sub" / "a.txt", "hello\n");
  EXPECT_EQ(read_file(dir / "sub" / "a.txt"), "hello\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "sub" / "a.txt.tmp"));
  EXPECT_EQ(code_of([&] { read_file(dir / "nope.txt"); }), ErrorCode::Io);
  std::filesystem::remove_all(dir);
}
