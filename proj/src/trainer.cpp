#include "semiae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "logging.hpp"
#include "semiae/errors.hpp"
#include "semiae/eval.hpp"

namespace semiae {

namespace {

struct FitResult {
  SemiAEParams params;
  std::vector<double> loss_history;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const int> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(rows[k]);
  return out;
}

// Shared minibatch loop. `mask` holds 0/1 weights or is empty for the
// unmasked loss; `rows` lists the training rows in their initial order.
FitResult fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
              const Eigen::MatrixXd& mask, std::vector<int> rows, const TrainConfig& cfg,
              const char* label) {
  std::mt19937_64 rng(cfg.seed);
  FitResult out;
  out.params = SemiAEParams::glorot(static_cast<int>(inputs.cols()), cfg.hidden_dim,
                                    static_cast<int>(targets.cols()), cfg.g, cfg.f, rng);
  OptimizerState optimizer(cfg.optimizer, cfg.optimizer_hyper(), out.params);
  const bool masked = mask.size() > 0;
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const int report_every = std::max(1, cfg.epochs / 10);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(rows.begin(), rows.end(), rng);
    double weighted = 0.0;
    for (std::size_t start = 0; start < rows.size(); start += batch) {
      const std::span<const int> chunk(rows.data() + start, std::min(batch, rows.size() - start));
      const Eigen::MatrixXd bx = gather_rows(inputs, chunk);
      const Eigen::MatrixXd bt = gather_rows(targets, chunk);
      std::pair<double, GradientSet> result;
      if (masked) {
        const Eigen::MatrixXd bm = gather_rows(mask, chunk);
        result = loss_and_gradients(out.params, bx, bt, &bm, cfg.reg);
      } else {
        result = loss_and_gradients(out.params, bx, bt, nullptr, cfg.reg);
      }
      weighted += result.first * static_cast<double>(chunk.size());
      optimizer.step(out.params, result.second);
    }
    const double epoch_loss = rows.empty() ? 0.0 : weighted / static_cast<double>(rows.size());
    if (!std::isfinite(epoch_loss)) {
      throw DataError(std::string(label) + " training diverged at epoch " + std::to_string(epoch + 1));
    }
    out.loss_history.push_back(epoch_loss);
    if ((epoch + 1) % report_every == 0 || epoch + 1 == cfg.epochs) {
      log::debug("{} epoch {}/{} loss {:.6f}", label, epoch + 1, cfg.epochs, epoch_loss);
    }
  }
  return out;
}

void check_side(const SideInfoMatrix& side, int entities, const char* what) {
  if (side.num_entities() != entities) {
    throw DimensionError(std::string(what) + " has " + std::to_string(side.num_entities()) +
                         " rows, expected " + std::to_string(entities));
  }
}

const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "task",          "hidden_dim",         "learning_rate", "reg",        "optimizer",
      "g",             "f",                  "epochs",        "batch_size", "seed",
      "binarize_threshold", "binarize_inclusive", "masked_loss", "adam_beta1", "adam_beta2",
      "rmsprop_decay", "epsilon"};
  return keys;
}

template <typename T>
T get_typed(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

Task parse_task(std::string_view name) {
  if (name == "ranking") return Task::kRanking;
  if (name == "rating") return Task::kRating;
  throw ConfigError("unknown task '" + std::string(name) + "' (valid: rating, ranking)");
}

std::string to_string(Task task) { return task == Task::kRanking ? "ranking" : "rating"; }

TrainConfig TrainConfig::defaults(Task task) {
  TrainConfig cfg;
  cfg.task = task;
  if (task == Task::kRanking) {
    cfg.hidden_dim = 10;
    cfg.learning_rate = 0.01;
    cfg.reg = 0.03;
    cfg.optimizer = OptimizerKind::kSgd;
    cfg.epochs = 1000;
    cfg.batch_size = 64;
    cfg.masked_loss = false;
  }
  return cfg;
}

void TrainConfig::validate() const {
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
  if (!(reg >= 0.0) || !std::isfinite(reg)) throw ConfigError("reg must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0,1)");
  }
  if (!(rmsprop_decay >= 0.0 && rmsprop_decay < 1.0)) throw ConfigError("rmsprop_decay must lie in [0,1)");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
}

OptimizerHyper TrainConfig::optimizer_hyper() const {
  return {learning_rate, adam_beta1, adam_beta2, rmsprop_decay, epsilon};
}

TrainConfig config_from_json(const nlohmann::json& j, Task task) {
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!config_keys().contains(key)) {
      std::string valid;
      for (const auto& k : config_keys()) valid += (valid.empty() ? "" : ", ") + k;
      throw ConfigError("unknown config key '" + key + "' (valid: " + valid + ")");
    }
  }
  if (j.contains("task") && parse_task(get_typed<std::string>(j, "task")) != task) {
    throw ConfigError("config task '" + j["task"].get<std::string>() + "' disagrees with --task " +
                      to_string(task));
  }
  TrainConfig cfg = TrainConfig::defaults(task);
  if (j.contains("hidden_dim")) cfg.hidden_dim = get_typed<int>(j, "hidden_dim");
  if (j.contains("learning_rate")) cfg.learning_rate = get_typed<double>(j, "learning_rate");
  if (j.contains("reg")) cfg.reg = get_typed<double>(j, "reg");
  if (j.contains("optimizer")) cfg.optimizer = parse_optimizer(get_typed<std::string>(j, "optimizer"));
  if (j.contains("g")) cfg.g = parse_activation(get_typed<std::string>(j, "g"));
  if (j.contains("f")) cfg.f = parse_activation(get_typed<std::string>(j, "f"));
  if (j.contains("epochs")) cfg.epochs = get_typed<int>(j, "epochs");
  if (j.contains("batch_size")) cfg.batch_size = get_typed<int>(j, "batch_size");
  if (j.contains("seed")) cfg.seed = get_typed<std::uint64_t>(j, "seed");
  if (j.contains("binarize_threshold")) cfg.binarize_threshold = get_typed<double>(j, "binarize_threshold");
  if (j.contains("binarize_inclusive")) cfg.binarize_inclusive = get_typed<bool>(j, "binarize_inclusive");
  if (j.contains("masked_loss")) cfg.masked_loss = get_typed<bool>(j, "masked_loss");
  if (j.contains("adam_beta1")) cfg.adam_beta1 = get_typed<double>(j, "adam_beta1");
  if (j.contains("adam_beta2")) cfg.adam_beta2 = get_typed<double>(j, "adam_beta2");
  if (j.contains("rmsprop_decay")) cfg.rmsprop_decay = get_typed<double>(j, "rmsprop_decay");
  if (j.contains("epsilon")) cfg.epsilon = get_typed<double>(j, "epsilon");
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path, Task task) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, task);
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"task", to_string(cfg.task)},
          {"hidden_dim", cfg.hidden_dim},
          {"learning_rate", cfg.learning_rate},
          {"reg", cfg.reg},
          {"optimizer", to_string(cfg.optimizer)},
          {"g", to_string(cfg.g)},
          {"f", to_string(cfg.f)},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"binarize_threshold", cfg.binarize_threshold},
          {"binarize_inclusive", cfg.binarize_inclusive},
          {"masked_loss", cfg.masked_loss},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"rmsprop_decay", cfg.rmsprop_decay},
          {"epsilon", cfg.epsilon}};
}

TrainedModel train_ranking(const RatingDataset& train, const SideInfoMatrix& profiles,
                           const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.task != Task::kRanking) throw ConfigError("train_ranking needs a ranking config");
  check_side(profiles, train.num_users(), "user profiles");
  const auto vectors = build_vectors(train, Orientation::kUserBased);
  const Eigen::MatrixXd inputs = concat_rows(vectors.values, profiles.rows);

  Eigen::MatrixXd mask;
  std::vector<int> rows(static_cast<std::size_t>(train.num_users()));
  std::iota(rows.begin(), rows.end(), 0);
  if (cfg.masked_loss) {
    mask = vectors.mask.cast<double>();
    std::erase_if(rows, [&](int u) { return !vectors.mask.row(u).any(); });
  }
  log::info("training ranking model: {} users x {} items, K={}, H={}", train.num_users(),
            train.num_items(), profiles.dim(), cfg.hidden_dim);
  auto fitted = fit(inputs, vectors.values, mask, std::move(rows), cfg, "ranking");

  TrainedModel model;
  model.params = std::move(fitted.params);
  model.task = Task::kRanking;
  model.orientation = Orientation::kUserBased;
  model.side_dim = profiles.dim();
  model.loss_history = std::move(fitted.loss_history);
  model.config = cfg;
  return model;
}

TrainedModel train_rating(const RatingDataset& train, const SideInfoMatrix& features,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.task != Task::kRating) throw ConfigError("train_rating needs a rating config");
  check_side(features, train.num_items(), "item features");
  const auto vectors = build_vectors(train, Orientation::kItemBased);
  const Eigen::MatrixXd inputs = concat_rows(vectors.values, features.rows);

  Eigen::MatrixXd mask;
  std::vector<int> rows;
  for (int i = 0; i < train.num_items(); ++i) {
    if (vectors.mask.row(i).any()) rows.push_back(i);
  }
  if (cfg.masked_loss) mask = vectors.mask.cast<double>();
  log::info("training rating model: {} items ({} with ratings) x {} users, K={}, H={}",
            train.num_items(), rows.size(), train.num_users(), features.dim(), cfg.hidden_dim);
  auto fitted = fit(inputs, vectors.values, mask, std::move(rows), cfg, "rating");

  TrainedModel model;
  model.params = std::move(fitted.params);
  model.task = Task::kRating;
  model.orientation = Orientation::kItemBased;
  model.side_dim = features.dim();
  model.loss_history = std::move(fitted.loss_history);
  model.config = cfg;
  return model;
}

Eigen::MatrixXd predict_ratings(const TrainedModel& model, const RatingDataset& train,
                                const SideInfoMatrix& features) {
  if (model.task != Task::kRating) throw ConfigError("predict_ratings needs a rating model");
  check_side(features, train.num_items(), "item features");
  const auto vectors = build_vectors(train, Orientation::kItemBased);
  Eigen::MatrixXd pred = forward(model.params, concat_rows(vectors.values, features.rows)).output;
  const auto& scale = train.scale();
  pred = pred.cwiseMax(scale.min).cwiseMin(scale.max);
  const double fallback = train.mean_rating();
  for (Eigen::Index i = 0; i < pred.rows(); ++i) {
    if (!vectors.mask.row(i).any()) pred.row(i).setConstant(fallback);
  }
  return pred;
}

Eigen::MatrixXd score_users(const TrainedModel& model, const RatingDataset& train,
                            const SideInfoMatrix& profiles) {
  if (model.task != Task::kRanking) throw ConfigError("score_users needs a ranking model");
  check_side(profiles, train.num_users(), "user profiles");
  const auto vectors = build_vectors(train, Orientation::kUserBased);
  return forward(model.params, concat_rows(vectors.values, profiles.rows)).output;
}

std::vector<int> recommend_top_n(const TrainedModel& model, const RatingDataset& train,
                                 const SideInfoMatrix& profiles, int user, int n) {
  if (user < 0 || user >= train.num_users()) throw DataError("user index out of range");
  const auto vectors = build_vectors(train, Orientation::kUserBased);
  const Eigen::VectorXd x = concat_input(vectors.values.row(user).transpose(),
                                         profiles.rows.row(user).transpose());
  const Eigen::VectorXd scores = forward(model.params, x).second;
  std::vector<int> seen;
  for (int i = 0; i < train.num_items(); ++i) {
    if (vectors.mask(user, i)) seen.push_back(i);
  }
  return top_n(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), seen, n);
}

ModelRecommender::ModelRecommender(const TrainedModel& model, const RatingDataset& train,
                                   const SideInfoMatrix& profiles)
    : scores_(score_users(model, train, profiles).transpose()), seen_(train.items_by_user()) {}

std::vector<int> ModelRecommender::operator()(int user, int n) const {
  // scores_ is item x user, so each user's scores are one contiguous column.
  const double* col = scores_.col(user).data();
  return top_n(std::span<const double>(col, static_cast<std::size_t>(scores_.rows())),
               seen_.at(static_cast<std::size_t>(user)), n);
}

nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json j = params_to_json(model.params);
  j["schema_version"] = kModelSchemaVersion;
  j["task"] = to_string(model.task);
  j["orientation"] = to_string(model.orientation);
  j["side_dim"] = model.side_dim;
  j["loss_history"] = model.loss_history;
  j["training_config_echo"] = to_json(model.config);
  if (model.split) {
    j["split"] = {{"train_fraction", model.split->train_fraction}, {"seed", model.split->seed}};
  }
  return j;
}

TrainedModel model_from_json(const nlohmann::json& doc) {
  const int version = doc.at("schema_version").get<int>();
  if (version != kModelSchemaVersion) {
    throw DataError("unsupported model schema_version " + std::to_string(version));
  }
  TrainedModel model;
  model.params = params_from_json(doc);
  model.task = parse_task(doc.at("task").get<std::string>());
  model.orientation = model.task == Task::kRanking ? Orientation::kUserBased : Orientation::kItemBased;
  model.side_dim = doc.at("side_dim").get<int>();
  model.loss_history = doc.at("loss_history").get<std::vector<double>>();
  model.config = config_from_json(doc.at("training_config_echo"), model.task);
  if (doc.contains("split")) {
    model.split = SplitSpec{doc["split"].at("train_fraction").get<double>(),
                            doc["split"].at("seed").get<std::uint64_t>()};
  }
  if (model.params.input_dim() != model.params.output_dim() + model.side_dim) {
    throw DimensionError("model input_dim does not equal output_dim + side_dim");
  }
  return model;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

void save_training_log(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,loss\n";
  for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
    out << (e + 1) << ',' << format_double(model.loss_history[e]) << '\n';
  }
}

}  // namespace semiae
