#include "semiae/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "logging.hpp"
#include "semiae/errors.hpp"

namespace semiae {

namespace {

struct Published {
  const char* dataset;
  Task task;
  double split;
  const char* method;
  const char* metric;
  double value;
};

constexpr Published kPublished[] = {
    {"ml-100k", Task::kRating, 0.8, "semiae", "rmse", 0.896},
    {"ml-100k", Task::kRating, 0.5, "semiae", "rmse", 0.926},
    {"ml-1m", Task::kRating, 0.8, "semiae", "rmse", 0.858},
    {"ml-1m", Task::kRating, 0.5, "semiae", "rmse", 0.882},
    {"ml-100k", Task::kRanking, 0.3, "semiae", "recall@5", 9.487},
    {"ml-100k", Task::kRanking, 0.3, "semiae", "recall@10", 14.836},
    {"ml-100k", Task::kRanking, 0.5, "semiae", "recall@5", 9.543},
    {"ml-100k", Task::kRanking, 0.5, "semiae", "recall@10", 15.909},
    {"ml-100k", Task::kRanking, 0.3, "most_popular", "recall@5", 7.036},
    {"ml-100k", Task::kRanking, 0.3, "most_popular", "recall@10", 11.297},
    {"ml-100k", Task::kRanking, 0.5, "most_popular", "recall@5", 7.535},
    {"ml-100k", Task::kRanking, 0.5, "most_popular", "recall@10", 13.185},
};

EvalReport base_report(const PreparedData& data, Task task, const SplitSpec& split,
                       const TrainConfig& cfg) {
  EvalReport r;
  r.task = task;
  r.dataset = to_string(data.format);
  r.train_fraction = split.train_fraction;
  r.seed = split.seed;
  r.config_echo = to_json(cfg);
  return r;
}

struct Cell {
  const PreparedData* data;
  Task task;
  double split;
  std::uint64_t seed;
};

std::vector<ReproduceRow> run_cell(const Cell& cell, const ReproduceOptions& options) {
  std::vector<ReproduceRow> rows;
  const SplitSpec split{cell.split, cell.seed};
  const std::string dataset = to_string(cell.data->format);
  const auto row = [&](const std::string& method, const std::string& metric, double value) {
    rows.push_back({dataset, cell.task, cell.split, cell.seed, method, metric, value});
  };
  if (cell.task == Task::kRating) {
    TrainConfig cfg = options.rating;
    cfg.seed = cell.seed;
    const auto report = run_rating(*cell.data, split, cfg);
    row("semiae", "rmse", *report.rmse);
  } else {
    TrainConfig cfg = options.ranking;
    cfg.seed = cell.seed;
    const auto outcome = run_ranking(*cell.data, split, cfg, {5, 10});
    for (const auto& [n, v] : *outcome.model.recall) row("semiae", "recall@" + std::to_string(n), v);
    for (const auto& [n, v] : *outcome.most_popular.recall) {
      row("most_popular", "recall@" + std::to_string(n), v);
    }
  }
  return rows;
}

std::string split_label(double split) { return format_double(split); }

}  // namespace

std::pair<RatingDataset, RatingDataset> task_split(const PreparedData& data, Task task,
                                                   const SplitSpec& split,
                                                   const TrainConfig& cfg) {
  auto halves = semiae::split(data.ratings, split.train_fraction, split.seed);
  if (task == Task::kRanking) {
    halves.first = binarize(halves.first, cfg.binarize_threshold, cfg.binarize_inclusive);
    halves.second = binarize(halves.second, cfg.binarize_threshold, cfg.binarize_inclusive);
  }
  return halves;
}

EvalReport run_rating(const PreparedData& data, const SplitSpec& split, const TrainConfig& cfg,
                      TrainedModel* trained) {
  const auto [train, test] = task_split(data, Task::kRating, split, cfg);
  TrainedModel model = train_rating(train, data.item_side, cfg);
  model.split = split;
  EvalReport report = base_report(data, Task::kRating, split, cfg);
  report.rmse = rmse(predict_ratings(model, train, data.item_side), test);
  const auto by_user = test.items_by_user();
  report.num_evaluated_users = static_cast<int>(
      std::count_if(by_user.begin(), by_user.end(), [](const auto& v) { return !v.empty(); }));
  log::info("{} rating split={} seed={}: RMSE {:.4f}", report.dataset, split.train_fraction,
            split.seed, *report.rmse);
  if (trained) *trained = std::move(model);
  return report;
}

RankingOutcome run_ranking(const PreparedData& data, const SplitSpec& split,
                           const TrainConfig& cfg, const std::vector<int>& ns,
                           TrainedModel* trained) {
  const auto [train, test] = task_split(data, Task::kRanking, split, cfg);
  TrainedModel model = train_ranking(train, data.user_side, cfg);
  model.split = split;

  RankingOutcome out{base_report(data, Task::kRanking, split, cfg),
                     base_report(data, Task::kRanking, split, cfg)};
  const ModelRecommender ours(model, train, data.user_side);
  const auto recall = recall_at(std::cref(ours), test, ns);
  out.model.recall = recall.recall;
  out.model.num_evaluated_users = recall.num_evaluated_users;

  const MostPopular baseline(train);
  const auto base = recall_at(std::cref(baseline), test, ns);
  out.most_popular.recall = base.recall;
  out.most_popular.num_evaluated_users = base.num_evaluated_users;
  out.most_popular.config_echo = {{"method", "most_popular"}};

  for (int n : ns) {
    log::info("{} ranking split={} seed={}: Recall@{} {:.3f}% (MostPopular {:.3f}%)",
              out.model.dataset, split.train_fraction, split.seed, n, recall.recall.at(n),
              base.recall.at(n));
  }
  if (trained) *trained = std::move(model);
  return out;
}

std::optional<double> published_value(const std::string& dataset, Task task, double split,
                                      const std::string& method, const std::string& metric) {
  for (const auto& p : kPublished) {
    if (dataset == p.dataset && task == p.task && std::abs(split - p.split) < 1e-9 &&
        method == p.method && metric == p.metric) {
      return p.value;
    }
  }
  return std::nullopt;
}

std::vector<ReproduceRow> reproduce(const ReproduceOptions& options) {
  if (options.table != 1 && options.table != 2) throw ConfigError("--table must be 1 or 2");
  if (options.seeds.empty()) throw ConfigError("at least one seed is required");

  std::vector<std::unique_ptr<PreparedData>> datasets;
  datasets.push_back(std::make_unique<PreparedData>(prepare_movielens(options.ml100k_dir, MovieLensFormat::kMl100k)));
  if (options.table == 1 && options.ml1m_dir) {
    datasets.push_back(std::make_unique<PreparedData>(prepare_movielens(*options.ml1m_dir, MovieLensFormat::kMl1m)));
  }

  const Task task = options.table == 1 ? Task::kRating : Task::kRanking;
  const std::vector<double> splits = options.table == 1 ? std::vector<double>{0.8, 0.5}
                                                        : std::vector<double>{0.3, 0.5};
  std::vector<Cell> cells;
  for (const auto& data : datasets) {
    for (double s : splits) {
      for (auto seed : options.seeds) cells.push_back({data.get(), task, s, seed});
    }
  }

  std::vector<std::vector<ReproduceRow>> results(cells.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = run_cell(cells[i], options);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, static_cast<int>(cells.size()));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  std::vector<ReproduceRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

std::vector<ReproduceSummaryRow> summarize(const std::vector<ReproduceRow>& rows) {
  std::vector<ReproduceSummaryRow> out;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ReproduceSummaryRow& s) {
      return s.dataset == r.dataset && s.task == r.task && s.split == r.split &&
             s.method == r.method && s.metric == r.metric;
    });
    if (it == out.end()) {
      out.push_back({r.dataset, r.task, r.split, r.method, r.metric, 0.0, 0.0, 0,
                     published_value(r.dataset, r.task, r.split, r.method, r.metric)});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.value);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& v = values[i];
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[i].mean = mean;
    out[i].stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out[i].runs = v.size();
  }
  return out;
}

std::string reproduce_csv(const std::vector<ReproduceRow>& rows) {
  std::string out = "dataset,task,split,seed,method,metric,value\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", r.dataset, to_string(r.task), split_label(r.split),
                       r.seed, r.method, r.metric, format_double(r.value));
  }
  return out;
}

std::string summary_csv(const std::vector<ReproduceSummaryRow>& rows) {
  std::string out = "dataset,task,split,method,metric,runs,mean,std,published\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.dataset, to_string(r.task),
                       split_label(r.split), r.method, r.metric, r.runs, format_double(r.mean),
                       format_double(r.stddev), r.published ? format_double(*r.published) : "");
  }
  return out;
}

std::string summary_table(const std::vector<ReproduceSummaryRow>& rows) {
  std::string out = fmt::format("{:<8} {:<8} {:>5}  {:<13} {:<10} {:>18}  {:>9}\n", "dataset",
                                "task", "train", "method", "metric", "reproduced", "published");
  for (const auto& r : rows) {
    const int digits = r.metric == "rmse" ? 4 : 3;
    out += fmt::format("{:<8} {:<8} {:>4}%  {:<13} {:<10} {:>9.{}f} ± {:<6.{}f}  {:>9}\n", r.dataset,
                       to_string(r.task), static_cast<int>(std::lround(r.split * 100)), r.method,
                       r.metric, r.mean, digits, r.stddev, digits,
                       r.published ? fmt::format("{:.{}f}", *r.published, digits) : "-");
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string() + " for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 initialisation failed");
  }
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

void RunManifest::record(const std::filesystem::path& artifact) {
  artifact_hashes[artifact.string()] = sha256_file(artifact);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j = {{"command", m.command},
                      {"dataset_paths", m.dataset_paths},
                      {"seeds", m.seeds},
                      {"output_dir", m.output_dir},
                      {"artifact_hashes", m.artifact_hashes},
                      {"started_at", m.started_at},
                      {"finished_at", m.finished_at}};
  j["config_path"] = m.config_path ? nlohmann::json(*m.config_path) : nlohmann::json(nullptr);
  return j;
}

void save_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(manifest).dump(2) << '\n';
}

}  // namespace semiae
