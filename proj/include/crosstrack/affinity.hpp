#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "crosstrack/core.hpp"

namespace crosstrack::affinity {

/// Dense M x N matrix between prior objects (rows) and current detections
/// (columns). Row and column ids are carried for diagnostics only.
struct ScoreMatrix {
  Eigen::MatrixXd values;
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> cols;

  Eigen::Index row_count() const { return values.rows(); }
  Eigen::Index col_count() const { return values.cols(); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return values(r, c); }
};

enum class ProviderKind { oracle, file_scores, embedding_cosine, zero };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view text);

/// Consistency probability between an earlier observation of an object and
/// a current detection. Implementations are immutable after construction
/// and must return a finite value in [0, 1].
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual ProviderKind kind() const = 0;
  virtual double similarity(const Detection& prior, const Detection& current) const = 0;
};

/// 1 when both detections carry the same truth id, 0 otherwise.
class OracleProvider final : public SimilarityProvider {
 public:
  ProviderKind kind() const override { return ProviderKind::oracle; }
  double similarity(const Detection& prior, const Detection& current) const override;
};

class ZeroProvider final : public SimilarityProvider {
 public:
  ProviderKind kind() const override { return ProviderKind::zero; }
  double similarity(const Detection&, const Detection&) const override { return 0.0; }
};

/// (cos + 1) / 2 of the attached embeddings. Throws MissingEmbedding when
/// either side has no vector, DimensionMismatch on length disagreement.
class EmbeddingCosineProvider final : public SimilarityProvider {
 public:
  ProviderKind kind() const override { return ProviderKind::embedding_cosine; }
  double similarity(const Detection& prior, const Detection& current) const override;
};

/// Precomputed scores keyed by (current frame, stream, prior det_id,
/// current det_id). Missing pairs score 0.
class FileScoresProvider final : public SimilarityProvider {
 public:
  struct Key {
    std::int64_t frame;
    Stream stream;
    std::int64_t prior_id;
    std::int64_t det_id;
    auto operator<=>(const Key&) const = default;
  };

  FileScoresProvider() = default;
  explicit FileScoresProvider(std::map<Key, double> scores);

  /// Parses `frame stream prior_id det_id score` records.
  static FileScoresProvider parse(std::string_view text);

  ProviderKind kind() const override { return ProviderKind::file_scores; }
  double similarity(const Detection& prior, const Detection& current) const override;
  std::size_t size() const { return scores_.size(); }

 private:
  std::map<Key, double> scores_;
};

std::unique_ptr<SimilarityProvider> make_provider(ProviderKind kind);

/// Camera: G = 1 - IoU(predicted, detected). LiDAR: G = 3D centroid distance.
ScoreMatrix sgc_matrix(std::span<const BBox2D> prior, std::span<const Detection> dets);
ScoreMatrix sgc_matrix(std::span<const BBox3D> prior, std::span<const Detection> dets);

/// S[i][j] = provider similarity between the i-th prior representative
/// detection and the j-th current detection.
ScoreMatrix similarity_matrix(const SimilarityProvider& provider,
                              std::span<const Detection> prior_representatives,
                              std::span<const Detection> dets);

/// Gated total cost. Admitted pairs (S >= theta_S or G <= theta_G) cost
/// (1 - S) + G_hat, where G_hat is G itself for the camera stream and
/// min(G / theta_G_3d, 1) for LiDAR. Every other pair costs cfg.sentinel.
ScoreMatrix total_cost(const ScoreMatrix& similarity, const ScoreMatrix& sgc,
                       const TrackerConfig& cfg, Stream stream);

}  // namespace crosstrack::affinity
