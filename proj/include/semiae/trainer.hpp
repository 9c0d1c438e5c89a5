#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "semiae/dataset.hpp"
#include "semiae/model.hpp"
#include "semiae/optim.hpp"

namespace semiae {

enum class Task { kRanking, kRating };

Task parse_task(std::string_view name);
std::string to_string(Task task);

struct TrainConfig {
  Task task = Task::kRating;
  int hidden_dim = 500;
  double learning_rate = 0.001;
  double reg = 0.1;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  Activation g = Activation::kSigmoid;
  Activation f = Activation::kIdentity;
  int epochs = 500;
  int batch_size = 4096;
  std::uint64_t seed = 1;
  double binarize_threshold = 4.0;  // ranking only
  bool binarize_inclusive = false;  // ">=" instead of ">"
  bool masked_loss = true;          // restrict the loss to observed targets
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double rmsprop_decay = 0.9;
  double epsilon = 1e-8;

  /// Task defaults (see README for where each value comes from).
  static TrainConfig defaults(Task task);

  /// Throws ConfigError if any field is out of range.
  void validate() const;

  OptimizerHyper optimizer_hyper() const;
};

/// Starts from defaults(task) and overrides keys present in `j`. Unknown
/// keys, wrong types and a `task` key disagreeing with `task` are errors.
TrainConfig config_from_json(const nlohmann::json& j, Task task);
TrainConfig load_config(const std::filesystem::path& path, Task task);
nlohmann::json to_json(const TrainConfig& cfg);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 1;

  bool operator==(const SplitSpec&) const = default;
};

struct TrainedModel {
  SemiAEParams params;
  Task task = Task::kRating;
  Orientation orientation = Orientation::kItemBased;
  int side_dim = 0;
  std::vector<double> loss_history;
  TrainConfig config;
  std::optional<SplitSpec> split;  // set by the CLI; evaluation must reuse it
};

/// User-based model over binarized training data; `profiles` has one row
/// per user (K may be 0).
TrainedModel train_ranking(const RatingDataset& train, const SideInfoMatrix& profiles,
                           const TrainConfig& cfg);

/// Item-based model over explicit ratings; `features` has one row per item.
TrainedModel train_rating(const RatingDataset& train, const SideInfoMatrix& features,
                          const TrainConfig& cfg);

/// N x M matrix of predicted ratings clipped to the training scale. Items
/// without training ratings get the global training mean.
Eigen::MatrixXd predict_ratings(const TrainedModel& model, const RatingDataset& train,
                                const SideInfoMatrix& features);

/// M x N reconstruction scores of the ranking model.
Eigen::MatrixXd score_users(const TrainedModel& model, const RatingDataset& train,
                            const SideInfoMatrix& profiles);

/// Top-n unseen items for one user, best first, ties by ascending index.
std::vector<int> recommend_top_n(const TrainedModel& model, const RatingDataset& train,
                                 const SideInfoMatrix& profiles, int user, int n);

/// Precomputes every user's scores once for repeated top-n queries.
class ModelRecommender {
 public:
  ModelRecommender(const TrainedModel& model, const RatingDataset& train,
                   const SideInfoMatrix& profiles);

  std::vector<int> operator()(int user, int n) const;

 private:
  Eigen::MatrixXd scores_;
  std::vector<std::vector<int>> seen_;
};

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

/// CSV with header `epoch,loss`, one row per epoch.
void save_training_log(const TrainedModel& model, const std::filesystem::path& path);

}  // namespace semiae
