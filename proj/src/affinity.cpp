#include "crosstrack/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "crosstrack/geometry.hpp"

namespace crosstrack::affinity {

std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::oracle: return "oracle";
    case ProviderKind::file_scores: return "file";
    case ProviderKind::embedding_cosine: return "embed";
    case ProviderKind::zero: return "zero";
  }
  return "zero";
}

ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "oracle") return ProviderKind::oracle;
  if (text == "file" || text == "file_scores") return ProviderKind::file_scores;
  if (text == "embed" || text == "embedding_cosine") return ProviderKind::embedding_cosine;
  if (text == "zero") return ProviderKind::zero;
  throw Error(ErrorCode::InvalidInput, "unknown provider '" + std::string(text) + "'");
}

double OracleProvider::similarity(const Detection& prior, const Detection& current) const {
  return prior.truth_id && current.truth_id && *prior.truth_id == *current.truth_id ? 1.0 : 0.0;
}

double EmbeddingCosineProvider::similarity(const Detection& prior, const Detection& current) const {
  if (!prior.embedding || !current.embedding) {
    throw Error(ErrorCode::MissingEmbedding,
                "detection " + std::to_string(prior.embedding ? current.det_id : prior.det_id) +
                    " has no embedding");
  }
  const auto& a = *prior.embedding;
  const auto& b = *current.embedding;
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch, "embedding lengths differ");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) return 0.5;
  const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return 0.5 * (cosine + 1.0);
}

FileScoresProvider::FileScoresProvider(std::map<Key, double> scores) : scores_(std::move(scores)) {}

FileScoresProvider FileScoresProvider::parse(std::string_view text) {
  std::map<Key, double> scores;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    Key key{};
    std::string stream;
    double score = 0.0;
    if (!(fields >> key.frame >> stream >> key.prior_id >> key.det_id >> score)) {
      throw Error(ErrorCode::Parse, "scores line " + std::to_string(line_no) +
                                        ": expected 'frame stream prior_id det_id score'");
    }
    if (stream == "camera") key.stream = Stream::camera;
    else if (stream == "lidar") key.stream = Stream::lidar;
    else throw Error(ErrorCode::Parse, "scores line " + std::to_string(line_no) + ": bad stream");
    if (!(score >= 0.0 && score <= 1.0)) {
      throw Error(ErrorCode::Parse,
                  "scores line " + std::to_string(line_no) + ": score outside [0, 1]");
    }
    scores[key] = score;
  }
  return FileScoresProvider(std::move(scores));
}

double FileScoresProvider::similarity(const Detection& prior, const Detection& current) const {
  const auto it = scores_.find(Key{current.frame, current.stream, prior.det_id, current.det_id});
  return it == scores_.end() ? 0.0 : it->second;
}

std::unique_ptr<SimilarityProvider> make_provider(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::oracle: return std::make_unique<OracleProvider>();
    case ProviderKind::embedding_cosine: return std::make_unique<EmbeddingCosineProvider>();
    case ProviderKind::file_scores: return std::make_unique<FileScoresProvider>();
    case ProviderKind::zero: return std::make_unique<ZeroProvider>();
  }
  return std::make_unique<ZeroProvider>();
}

namespace {

std::vector<std::int64_t> det_ids(std::span<const Detection> dets) {
  std::vector<std::int64_t> ids;
  ids.reserve(dets.size());
  for (const auto& d : dets) ids.push_back(d.det_id);
  return ids;
}

std::vector<std::int64_t> indices(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  return ids;
}

}  // namespace

ScoreMatrix sgc_matrix(std::span<const BBox2D> prior, std::span<const Detection> dets) {
  ScoreMatrix g{Eigen::MatrixXd(prior.size(), dets.size()), indices(prior.size()), det_ids(dets)};
  for (std::size_t j = 0; j < dets.size(); ++j) {
    if (dets[j].stream != Stream::camera || !dets[j].box2d) {
      throw Error(ErrorCode::DimensionMismatch, "image-plane SGC needs camera detections");
    }
    for (std::size_t i = 0; i < prior.size(); ++i) {
      g.values(i, j) = 1.0 - geometry::iou_2d(prior[i], *dets[j].box2d);
    }
  }
  return g;
}

ScoreMatrix sgc_matrix(std::span<const BBox3D> prior, std::span<const Detection> dets) {
  ScoreMatrix g{Eigen::MatrixXd(prior.size(), dets.size()), indices(prior.size()), det_ids(dets)};
  for (std::size_t j = 0; j < dets.size(); ++j) {
    if (dets[j].stream != Stream::lidar || !dets[j].box3d) {
      throw Error(ErrorCode::DimensionMismatch, "3D SGC needs lidar detections");
    }
    for (std::size_t i = 0; i < prior.size(); ++i) {
      g.values(i, j) = geometry::centroid_distance_3d(prior[i], *dets[j].box3d);
    }
  }
  return g;
}

ScoreMatrix similarity_matrix(const SimilarityProvider& provider,
                              std::span<const Detection> prior_representatives,
                              std::span<const Detection> dets) {
  ScoreMatrix s{Eigen::MatrixXd(prior_representatives.size(), dets.size()),
                det_ids(prior_representatives), det_ids(dets)};
  for (std::size_t i = 0; i < prior_representatives.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      const double value = provider.similarity(prior_representatives[i], dets[j]);
      s.values(i, j) = std::isfinite(value) ? std::clamp(value, 0.0, 1.0) : 0.0;
    }
  }
  return s;
}

ScoreMatrix total_cost(const ScoreMatrix& similarity, const ScoreMatrix& sgc,
                       const TrackerConfig& cfg, Stream stream) {
  if (similarity.row_count() != sgc.row_count() || similarity.col_count() != sgc.col_count()) {
    throw Error(ErrorCode::DimensionMismatch, "similarity and SGC matrices differ in shape");
  }
  const double theta_g = stream == Stream::camera ? cfg.theta_G_2d : cfg.theta_G_3d;
  ScoreMatrix c{Eigen::MatrixXd(sgc.row_count(), sgc.col_count()), sgc.rows, sgc.cols};
  for (Eigen::Index i = 0; i < c.row_count(); ++i) {
    for (Eigen::Index j = 0; j < c.col_count(); ++j) {
      const double s = similarity(i, j);
      const double g = sgc(i, j);
      if (s >= cfg.theta_S || g <= theta_g) {
        const double g_hat =
            stream == Stream::camera ? g : std::min(g / cfg.theta_G_3d, 1.0);
        c.values(i, j) = (1.0 - s) + g_hat;
      } else {
        c.values(i, j) = cfg.sentinel;
      }
    }
  }
  return c;
}

}  // namespace crosstrack::affinity
