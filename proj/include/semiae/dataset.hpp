#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace semiae {

enum class MovieLensFormat { kMl100k, kMl1m };

MovieLensFormat parse_format(std::string_view name);
std::string to_string(MovieLensFormat format);

enum class Orientation { kUserBased, kItemBased };

std::string to_string(Orientation orientation);

struct Rating {
  int user = 0;
  int item = 0;
  double value = 0.0;
  std::int64_t timestamp = 0;

  bool operator==(const Rating&) const = default;
};

struct RatingScale {
  double min = 1.0;
  double max = 5.0;

  bool operator==(const RatingScale&) const = default;
};

/// The observed set of a rating matrix. Immutable after construction; the
/// constructor enforces index bounds, scale bounds and pair uniqueness.
class RatingDataset {
 public:
  RatingDataset() = default;
  RatingDataset(int num_users, int num_items, std::vector<Rating> triples,
                RatingScale scale = {});

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const std::vector<Rating>& triples() const { return triples_; }
  const RatingScale& scale() const { return scale_; }

  double mean_rating() const;

  /// Per-user item lists, each sorted ascending.
  std::vector<std::vector<int>> items_by_user() const;

  bool operator==(const RatingDataset&) const = default;

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  std::vector<Rating> triples_;
  RatingScale scale_;
};

/// Dense per-entity side information (user profiles or item features).
struct SideInfoMatrix {
  Eigen::MatrixXd rows;                    // num_entities x K
  std::vector<std::string> column_labels;  // K entries
  std::vector<long> entity_ids;            // raw file id of each row
  std::size_t missing_value_count = 0;     // e.g. items without a release year

  int num_entities() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }

  /// An all-zero K = 0 matrix for `num_entities` rows.
  static SideInfoMatrix empty(int num_entities);

  /// Reorders rows to follow `ids`; every id must be present.
  SideInfoMatrix aligned_to(const std::vector<long>& ids) const;
};

struct ParsedRatings {
  RatingDataset dataset;
  std::vector<long> user_ids;  // index -> raw id, ascending
  std::vector<long> item_ids;
};

struct InteractionVectors {
  Orientation orientation = Orientation::kUserBased;
  Eigen::MatrixXd values;  // unobserved entries hold 0
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
};

ParsedRatings parse_ratings(const std::filesystem::path& path, MovieLensFormat format);
SideInfoMatrix parse_user_profiles(const std::filesystem::path& path, MovieLensFormat format);
SideInfoMatrix parse_item_features(const std::filesystem::path& path, MovieLensFormat format);

/// Seeded uniform partition; |train| = round-half-up(train_fraction * |ds|).
std::pair<RatingDataset, RatingDataset> split(const RatingDataset& ds, double train_fraction,
                                              std::uint64_t seed);

/// Keeps triples with rating > threshold (or >= when `inclusive`) as 1 and
/// drops the rest from the observed set.
RatingDataset binarize(const RatingDataset& ds, double threshold, bool inclusive = false);

InteractionVectors build_vectors(const RatingDataset& ds, Orientation orientation);

/// Everything the pipeline needs from one raw MovieLens directory, with
/// side information rows aligned to the rating indices.
struct PreparedData {
  MovieLensFormat format = MovieLensFormat::kMl100k;
  RatingDataset ratings;
  SideInfoMatrix user_side;
  SideInfoMatrix item_side;
  std::vector<long> user_ids;
  std::vector<long> item_ids;

  int user_index(long raw_id) const;
  int item_index(long raw_id) const;
};

inline constexpr int kPreparedSchemaVersion = 1;

/// File names a raw directory must contain for `format`.
std::vector<std::string> expected_files(MovieLensFormat format);

PreparedData prepare_movielens(const std::filesystem::path& raw_dir, MovieLensFormat format);

nlohmann::json to_json(const PreparedData& data);
PreparedData prepared_from_json(const nlohmann::json& doc);

void save_prepared(const PreparedData& data, const std::filesystem::path& path);
PreparedData load_prepared(const std::filesystem::path& path);

}  // namespace semiae
