// Command-line driver: prepare, train, evaluate, recommend, reproduce.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "semiae/dataset.hpp"
#include "semiae/errors.hpp"
#include "semiae/eval.hpp"
#include "semiae/experiment.hpp"
#include "semiae/trainer.hpp"

namespace fs = std::filesystem;
using namespace semiae;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
  return path.parent_path() / (path.filename().string() + suffix);
}

struct PrepareArgs {
  std::string raw;
  std::string format;
  std::string out;
};

int cmd_prepare(const PrepareArgs& a) {
  RunManifest manifest;
  manifest.command = "prepare";
  manifest.started_at = utc_timestamp();
  manifest.dataset_paths = {a.raw};
  manifest.output_dir = fs::path(a.out).parent_path().string();

  const auto data = prepare_movielens(a.raw, parse_format(a.format));
  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_prepared(data, out);
  fmt::print("M={} N={} |Ω|={} K_user={} K_item={}\n", data.ratings.num_users(),
             data.ratings.num_items(), data.ratings.size(), data.user_side.dim(),
             data.item_side.dim());
  if (data.item_side.missing_value_count > 0) {
    fmt::print(stderr, "warning: {} items have no release year (year feature set to 0)\n",
               data.item_side.missing_value_count);
  }
  manifest.record(out);
  manifest.finished_at = utc_timestamp();
  save_manifest(manifest, sibling(out, ".manifest.json"));
  return 0;
}

struct TrainArgs {
  std::string data;
  std::string task;
  std::string config;
  std::string out;
  std::string log;
  std::optional<double> train_fraction;
  std::optional<std::uint64_t> split_seed;
};

double default_fraction(Task task) { return task == Task::kRating ? 0.8 : 0.3; }

int cmd_train(const TrainArgs& a) {
  RunManifest manifest;
  manifest.command = "train";
  manifest.started_at = utc_timestamp();
  manifest.dataset_paths = {a.data};
  if (!a.config.empty()) manifest.config_path = a.config;

  const Task task = parse_task(a.task);
  const TrainConfig cfg = a.config.empty() ? TrainConfig::defaults(task) : load_config(a.config, task);
  const auto data = load_prepared(a.data);
  const SplitSpec split{a.train_fraction.value_or(default_fraction(task)), a.split_seed.value_or(cfg.seed)};
  const auto [train, test] = task_split(data, task, split, cfg);

  TrainedModel model = task == Task::kRating ? train_rating(train, data.item_side, cfg)
                                             : train_ranking(train, data.user_side, cfg);
  model.split = split;

  const fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_model(model, out);
  const fs::path log = a.log.empty() ? sibling(out, ".log.csv") : fs::path(a.log);
  save_training_log(model, log);
  fmt::print("trained {} model: S={} H={} D={} epochs={} final loss {}\n", to_string(task),
             model.params.input_dim(), model.params.hidden_dim(), model.params.output_dim(),
             model.loss_history.size(), format_double(model.loss_history.back()));

  manifest.seeds = {cfg.seed, split.seed};
  manifest.output_dir = out.parent_path().string();
  manifest.record(a.data);
  manifest.record(out);
  manifest.record(log);
  manifest.finished_at = utc_timestamp();
  save_manifest(manifest, sibling(out, ".manifest.json"));
  return 0;
}

struct EvaluateArgs {
  std::string model;
  std::string data;
  double train_fraction = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> recall;
  bool rmse = false;
  std::string out;
  std::string csv;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const auto model = load_model(a.model);
  const auto data = load_prepared(a.data);
  const SplitSpec split{a.train_fraction, a.seed};
  if (model.split && !(*model.split == split)) {
    throw ConfigError(fmt::format(
        "model was trained on split fraction={} seed={}; evaluating on fraction={} seed={} would "
        "leak test ratings into training",
        format_double(model.split->train_fraction), model.split->seed,
        format_double(split.train_fraction), split.seed));
  }
  if (model.task == Task::kRating && !a.recall.empty()) {
    throw ConfigError("--recall needs a ranking model; this is a rating model");
  }
  if (model.task == Task::kRanking && a.rmse) {
    throw ConfigError("--rmse needs a rating model; this is a ranking model");
  }

  const auto [train, test] = task_split(data, model.task, split, model.config);
  EvalReport report;
  report.task = model.task;
  report.dataset = to_string(data.format);
  report.train_fraction = split.train_fraction;
  report.seed = split.seed;
  report.config_echo = to_json(model.config);
  if (model.task == Task::kRating) {
    report.rmse = rmse(predict_ratings(model, train, data.item_side), test);
    const auto by_user = test.items_by_user();
    for (const auto& items : by_user) report.num_evaluated_users += items.empty() ? 0 : 1;
  } else {
    const std::vector<int> ns = a.recall.empty() ? std::vector<int>{5, 10} : a.recall;
    const ModelRecommender recommender(model, train, data.user_side);
    const auto result = recall_at(std::cref(recommender), test, ns);
    report.recall = result.recall;
    report.num_evaluated_users = result.num_evaluated_users;
  }

  const std::string json = to_json(report).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << json;
  } else {
    write_text(a.out, json);
  }
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv);
    std::ofstream csv(a.csv, std::ios::app | std::ios::binary);
    if (!csv) throw DataError("cannot write " + a.csv);
    if (fresh) csv << kEvalCsvHeader << '\n';
    csv << to_csv_rows(report);
  }
  return 0;
}

struct RecommendArgs {
  std::string model;
  std::string data;
  long user = 0;
  int n = 10;
};

int cmd_recommend(const RecommendArgs& a) {
  const auto model = load_model(a.model);
  if (model.task != Task::kRanking) throw ConfigError("recommend needs a ranking model");
  const auto data = load_prepared(a.data);
  const SplitSpec split = model.split.value_or(SplitSpec{default_fraction(Task::kRanking), model.config.seed});
  const auto [train, test] = task_split(data, Task::kRanking, split, model.config);
  const int user = data.user_index(a.user);
  for (int item : recommend_top_n(model, train, data.user_side, user, a.n)) {
    fmt::print("{}\n", data.item_ids[static_cast<std::size_t>(item)]);
  }
  return 0;
}

struct ReproduceArgs {
  int table = 1;
  std::string raw;
  std::string ml1m_raw;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out = "reproduce_out";
  std::string rating_config;
  std::string ranking_config;
  int jobs = 1;
};

int cmd_reproduce(const ReproduceArgs& a) {
  RunManifest manifest;
  manifest.command = "reproduce --table " + std::to_string(a.table);
  manifest.started_at = utc_timestamp();
  manifest.seeds = a.seeds;
  manifest.output_dir = a.out;
  manifest.dataset_paths = {a.raw};

  ReproduceOptions options;
  options.table = a.table;
  options.ml100k_dir = a.raw;
  if (!a.ml1m_raw.empty()) {
    options.ml1m_dir = fs::path(a.ml1m_raw);
    manifest.dataset_paths.push_back(a.ml1m_raw);
  }
  options.seeds = a.seeds;
  options.jobs = a.jobs;
  if (!a.rating_config.empty()) {
    options.rating = load_config(a.rating_config, Task::kRating);
    manifest.config_path = a.rating_config;
  }
  if (!a.ranking_config.empty()) {
    options.ranking = load_config(a.ranking_config, Task::kRanking);
    manifest.config_path = a.ranking_config;
  }

  const auto rows = reproduce(options);
  const auto summary = summarize(rows);
  const fs::path dir(a.out);
  const std::string stem = "table" + std::to_string(a.table);
  write_text(dir / (stem + ".csv"), reproduce_csv(rows));
  write_text(dir / (stem + "_summary.csv"), summary_csv(summary));
  std::cout << summary_table(summary);

  manifest.record(dir / (stem + ".csv"));
  manifest.record(dir / (stem + "_summary.csv"));
  manifest.finished_at = utc_timestamp();
  save_manifest(manifest, dir / (stem + ".manifest.json"));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-AutoEncoder hybrid recommender"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* p = app.add_subcommand("prepare", "Parse a raw MovieLens directory into prepared JSON");
  p->add_option("--raw", prepare.raw, "Raw MovieLens directory")->required();
  p->add_option("--format", prepare.format, "ml-100k or ml-1m")->required()->check(CLI::IsMember({"ml-100k", "ml-1m"}));
  p->add_option("--out", prepare.out, "Prepared dataset file")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a rating or ranking model");
  t->add_option("--data", train.data, "Prepared dataset file")->required();
  t->add_option("--task", train.task, "rating or ranking")->required()->check(CLI::IsMember({"rating", "ranking"}));
  t->add_option("--config", train.config, "Flat JSON config (optional; task defaults otherwise)");
  t->add_option("--out", train.out, "Model file")->required();
  t->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
  t->add_option("--train-fraction", train.train_fraction, "Training share of the ratings (rating 0.8, ranking 0.3)");
  t->add_option("--split-seed", train.split_seed, "Split seed (default: config seed)");

  EvaluateArgs evaluate;
  std::string recall_list;
  auto* e = app.add_subcommand("evaluate", "Score a model on its held-out split");
  e->add_option("--model", evaluate.model, "Model file")->required();
  e->add_option("--data", evaluate.data, "Prepared dataset file")->required();
  e->add_option("--train-fraction", evaluate.train_fraction, "Training share used for the model")->required();
  e->add_option("--seed", evaluate.seed, "Split seed used for the model")->required();
  e->add_option("--recall", recall_list, "Comma-separated list of n for Recall@n");
  e->add_flag("--rmse", evaluate.rmse, "Report RMSE (rating models)");
  e->add_option("--out", evaluate.out, "Report JSON file (default stdout)");
  e->add_option("--csv", evaluate.csv, "Append dataset,task,split,seed,metric,value rows");

  RecommendArgs recommend;
  auto* r = app.add_subcommand("recommend", "Top-n items for one user");
  r->add_option("--model", recommend.model, "Ranking model file")->required();
  r->add_option("--data", recommend.data, "Prepared dataset file")->required();
  r->add_option("--user", recommend.user, "User id as it appears in the raw files")->required();
  r->add_option("--n", recommend.n, "List length")->required()->check(CLI::NonNegativeNumber);

  ReproduceArgs reproduce_args;
  std::string seed_list;
  auto* x = app.add_subcommand("reproduce", "Rerun the RMSE (1) or Recall (2) comparison table");
  x->add_option("--table", reproduce_args.table, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  x->add_option("--raw", reproduce_args.raw, "Raw ML-100K directory")->required();
  x->add_option("--ml-1m-raw", reproduce_args.ml1m_raw, "Raw ML-1M directory (table 1)");
  x->add_option("--seeds", seed_list, "Comma-separated seeds (default 1,2,3,4,5)");
  x->add_option("--out", reproduce_args.out, "Output directory");
  x->add_option("--rating-config", reproduce_args.rating_config, "Config overrides for the rating model");
  x->add_option("--ranking-config", reproduce_args.ranking_config, "Config overrides for the ranking model");
  x->add_option("--jobs", reproduce_args.jobs, "Worker threads")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  const auto parse_list = [](const std::string& text, auto& out) {
    out.clear();
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = text.find(',', start);
      const auto token = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (token.empty()) throw ConfigError("empty entry in list '" + text + "'");
      std::size_t used = 0;
      const long long v = std::stoll(token, &used);
      if (used != token.size() || v < 0) throw ConfigError("bad list entry '" + token + "'");
      out.push_back(static_cast<typename std::decay_t<decltype(out)>::value_type>(v));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  };

  try {
    if (*p) return cmd_prepare(prepare);
    if (*t) return cmd_train(train);
    if (*e) {
      if (!recall_list.empty()) parse_list(recall_list, evaluate.recall);
      return cmd_evaluate(evaluate);
    }
    if (*r) return cmd_recommend(recommend);
    if (*x) {
      if (!seed_list.empty()) parse_list(seed_list, reproduce_args.seeds);
      return cmd_reproduce(reproduce_args);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
  return 1;
}
