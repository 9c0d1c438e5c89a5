#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "semiae/dataset.hpp"
#include "semiae/trainer.hpp"

namespace semiae {

/// user, n -> ranked item indices (best first, at most n).
using Recommender = std::function<std::vector<int>(int user, int n)>;

/// Items sorted by score descending, ties by ascending index, skipping the
/// ascending-sorted `excluded` items; at most n entries.
std::vector<int> top_n(std::span<const double> scores, std::span<const int> excluded, int n);

/// Root mean squared error over the test triples of an item x user
/// prediction matrix. Throws DataError on an empty test set.
double rmse(const Eigen::MatrixXd& item_by_user, const RatingDataset& test);

struct RecallResult {
  std::map<int, double> recall;  // n -> percentage in [0, 100]
  int num_evaluated_users = 0;
};

/// Per-user recall averaged over users with at least one test item, as a
/// percentage. Throws DataError when no user has a test item.
double recall_at_n(const Recommender& recommender, const RatingDataset& test, int n);
RecallResult recall_at(const Recommender& recommender, const RatingDataset& test,
                       const std::vector<int>& ns);

/// Frequency-ranked baseline; deterministic for a given training set.
class MostPopular {
 public:
  explicit MostPopular(const RatingDataset& train);

  std::vector<int> operator()(int user, int n) const;
  const std::vector<double>& counts() const { return counts_; }

 private:
  std::vector<double> counts_;
  std::vector<std::vector<int>> seen_;
};

std::vector<int> most_popular(const RatingDataset& train, int user, int n);

struct EvalReport {
  Task task = Task::kRating;
  std::optional<double> rmse;
  std::optional<std::map<int, double>> recall;
  int num_evaluated_users = 0;
  nlohmann::json config_echo;
  std::uint64_t seed = 0;
  std::string dataset;
  double train_fraction = 0.0;
};

nlohmann::json to_json(const EvalReport& report);

/// Rows `dataset,task,split,seed,metric,value` (no header).
std::string to_csv_rows(const EvalReport& report);
inline constexpr const char* kEvalCsvHeader = "dataset,task,split,seed,metric,value";

/// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace semiae
