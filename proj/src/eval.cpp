#include "semiae/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "semiae/errors.hpp"

namespace semiae {

std::vector<int> top_n(std::span<const double> scores, std::span<const int> excluded, int n) {
  std::vector<int> candidates;
  candidates.reserve(scores.size());
  auto skip = excluded.begin();
  for (int item = 0; item < static_cast<int>(scores.size()); ++item) {
    while (skip != excluded.end() && *skip < item) ++skip;
    if (skip != excluded.end() && *skip == item) continue;
    candidates.push_back(item);
  }
  const auto keep = static_cast<std::size_t>(std::clamp(n, 0, static_cast<int>(candidates.size())));
  const auto better = [&scores](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                    candidates.end(), better);
  candidates.resize(keep);
  return candidates;
}

double rmse(const Eigen::MatrixXd& item_by_user, const RatingDataset& test) {
  if (test.empty()) throw DataError("rmse of an empty test set");
  if (item_by_user.rows() < test.num_items() || item_by_user.cols() < test.num_users()) {
    throw DimensionError("prediction matrix is smaller than the test dataset");
  }
  double sum = 0.0;
  for (const Rating& r : test.triples()) {
    const double e = r.value - item_by_user(r.item, r.user);
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(test.size()));
}

RecallResult recall_at(const Recommender& recommender, const RatingDataset& test,
                       const std::vector<int>& ns) {
  const auto relevant = test.items_by_user();
  const int longest = ns.empty() ? 0 : std::max(0, *std::max_element(ns.begin(), ns.end()));
  std::map<int, double> sums;
  for (int n : ns) sums[n] = 0.0;

  RecallResult out;
  for (int user = 0; user < test.num_users(); ++user) {
    const auto& rel = relevant[static_cast<std::size_t>(user)];
    if (rel.empty()) continue;
    ++out.num_evaluated_users;
    const auto ranked = recommender(user, longest);
    for (int n : ns) {
      const auto upto = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(std::max(n, 0)));
      int hits = 0;
      for (std::size_t k = 0; k < upto; ++k) {
        if (std::binary_search(rel.begin(), rel.end(), ranked[k])) ++hits;
      }
      sums[n] += static_cast<double>(hits) / static_cast<double>(rel.size());
    }
  }
  if (out.num_evaluated_users == 0) throw DataError("no user has a relevant test item");
  for (const auto& [n, s] : sums) out.recall[n] = 100.0 * s / out.num_evaluated_users;
  return out;
}

double recall_at_n(const Recommender& recommender, const RatingDataset& test, int n) {
  return recall_at(recommender, test, {n}).recall.at(n);
}

MostPopular::MostPopular(const RatingDataset& train)
    : counts_(static_cast<std::size_t>(train.num_items()), 0.0), seen_(train.items_by_user()) {
  for (const Rating& r : train.triples()) counts_[static_cast<std::size_t>(r.item)] += 1.0;
}

std::vector<int> MostPopular::operator()(int user, int n) const {
  return top_n(counts_, seen_.at(static_cast<std::size_t>(user)), n);
}

std::vector<int> most_popular(const RatingDataset& train, int user, int n) {
  return MostPopular(train)(user, n);
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j = {{"task", to_string(report.task)},
                      {"dataset", report.dataset},
                      {"train_fraction", report.train_fraction},
                      {"seed", report.seed},
                      {"num_evaluated_users", report.num_evaluated_users},
                      {"config_echo", report.config_echo}};
  if (report.rmse) j["rmse"] = *report.rmse;
  if (report.recall) {
    nlohmann::json recall = nlohmann::json::object();
    for (const auto& [n, v] : *report.recall) recall[std::to_string(n)] = v;
    j["recall"] = std::move(recall);
  }
  return j;
}

std::string to_csv_rows(const EvalReport& report) {
  const std::string prefix = report.dataset + "," + to_string(report.task) + "," +
                             format_double(report.train_fraction) + "," +
                             std::to_string(report.seed) + ",";
  std::string out;
  if (report.rmse) out += prefix + "rmse," + format_double(*report.rmse) + "\n";
  if (report.recall) {
    for (const auto& [n, v] : *report.recall) {
      out += prefix + "recall@" + std::to_string(n) + "," + format_double(v) + "\n";
    }
  }
  return out;
}

}  // namespace semiae
