#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semiae/dataset.hpp"
#include "semiae/eval.hpp"
#include "semiae/trainer.hpp"

namespace semiae {

/// Split explicit ratings, train an item-based model on the training part
/// and score it on the held-out part.
EvalReport run_rating(const PreparedData& data, const SplitSpec& split, const TrainConfig& cfg,
                      TrainedModel* trained = nullptr);

struct RankingOutcome {
  EvalReport model;
  EvalReport most_popular;
};

/// Split explicit ratings, binarize both halves, train a user-based model
/// and compare its Recall@n with the MostPopular baseline.
RankingOutcome run_ranking(const PreparedData& data, const SplitSpec& split,
                           const TrainConfig& cfg, const std::vector<int>& ns,
                           TrainedModel* trained = nullptr);

/// The train/test halves the pipeline uses for a task: ranking binarizes
/// both halves with the config's threshold.
std::pair<RatingDataset, RatingDataset> task_split(const PreparedData& data, Task task,
                                                   const SplitSpec& split,
                                                   const TrainConfig& cfg);

struct ReproduceRow {
  std::string dataset;
  Task task = Task::kRating;
  double split = 0.0;
  std::uint64_t seed = 0;
  std::string method;  // "semiae" or "most_popular"
  std::string metric;  // "rmse", "recall@5", ...
  double value = 0.0;
};

struct ReproduceSummaryRow {
  std::string dataset;
  Task task = Task::kRating;
  double split = 0.0;
  std::string method;
  std::string metric;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t runs = 0;
  std::optional<double> published;
};

struct ReproduceOptions {
  int table = 1;
  std::filesystem::path ml100k_dir;
  std::optional<std::filesystem::path> ml1m_dir;  // table 1 only
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TrainConfig rating = TrainConfig::defaults(Task::kRating);
  TrainConfig ranking = TrainConfig::defaults(Task::kRanking);
  int jobs = 1;
};

/// The published numbers each reproduced cell is compared against.
std::optional<double> published_value(const std::string& dataset, Task task, double split,
                                      const std::string& method, const std::string& metric);

/// Runs every (dataset, split, seed) cell of table 1 (RMSE) or table 2
/// (Recall@5/10 with MostPopular). Rows are ordered by dataset, split,
/// seed, method, metric regardless of `jobs`.
std::vector<ReproduceRow> reproduce(const ReproduceOptions& options);

std::vector<ReproduceSummaryRow> summarize(const std::vector<ReproduceRow>& rows);

std::string reproduce_csv(const std::vector<ReproduceRow>& rows);
std::string summary_csv(const std::vector<ReproduceSummaryRow>& rows);
std::string summary_table(const std::vector<ReproduceSummaryRow>& rows);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::optional<std::string> config_path;
  std::vector<std::string> dataset_paths;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;
  std::map<std::string, std::string> artifact_hashes;  // path -> sha256
  std::string started_at;
  std::string finished_at;

  void record(const std::filesystem::path& artifact);
};

std::string utc_timestamp();
nlohmann::json to_json(const RunManifest& manifest);
void save_manifest(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace semiae
