#include "semiae/model.hpp"

#include <cmath>
#include <string>

#include "semiae/errors.hpp"

namespace semiae {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_batch(const SemiAEParams& params, const Eigen::MatrixXd& batch_x) {
  if (batch_x.cols() != params.Q.rows()) {
    throw DimensionError("input width " + std::to_string(batch_x.cols()) +
                         " does not match the model's input_dim " +
                         std::to_string(params.Q.rows()));
  }
}

void check_targets(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                   const Eigen::MatrixXd& targets) {
  check_batch(params, batch_x);
  if (targets.rows() != batch_x.rows() || targets.cols() != params.Q1.cols()) {
    throw DimensionError("targets are " + shape(targets) + ", expected " +
                         std::to_string(batch_x.rows()) + "x" + std::to_string(params.Q1.cols()));
  }
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* name) {
  if (j.size() != static_cast<std::size_t>(rows)) {
    throw DimensionError(std::string(name) + " has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<std::size_t>(i)];
    if (row.size() != static_cast<std::size_t>(cols)) {
      throw DimensionError(std::string(name) + " row " + std::to_string(i) + " has the wrong width");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, Eigen::Index size, const char* name) {
  if (j.size() != static_cast<std::size_t>(size)) {
    throw DimensionError(std::string(name) + " has length " + std::to_string(j.size()) + ", expected " + std::to_string(size));
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

}  // namespace

SemiAEParams SemiAEParams::zeros(int input_dim, int hidden_dim, int output_dim, Activation g,
                                 Activation f) {
  SemiAEParams params;
  params.Q = Eigen::MatrixXd::Zero(input_dim, hidden_dim);
  params.Q1 = Eigen::MatrixXd::Zero(hidden_dim, output_dim);
  params.p = Eigen::VectorXd::Zero(hidden_dim);
  params.p1 = Eigen::VectorXd::Zero(output_dim);
  params.g = g;
  params.f = f;
  params.validate();
  return params;
}

SemiAEParams SemiAEParams::glorot(int input_dim, int hidden_dim, int output_dim, Activation g,
                                  Activation f, std::mt19937_64& rng) {
  SemiAEParams params = zeros(input_dim, hidden_dim, output_dim, g, f);
  const auto fill = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Column-major fill order is part of the seed contract.
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
    }
  };
  fill(params.Q);
  fill(params.Q1);
  return params;
}

void SemiAEParams::validate() const {
  if (Q.cols() < 1) throw DimensionError("hidden_dim must be at least 1");
  if (Q1.rows() != Q.cols()) {
    throw DimensionError("Q is " + shape(Q) + " but Q1 is " + shape(Q1));
  }
  if (p.size() != Q.cols() || p1.size() != Q1.cols()) {
    throw DimensionError("bias lengths do not match the weight shapes");
  }
  if (Q1.cols() > Q.rows()) {
    throw DimensionError("output_dim " + std::to_string(Q1.cols()) + " exceeds input_dim " +
                         std::to_string(Q.rows()));
  }
}

bool SemiAEParams::all_finite() const {
  return Q.allFinite() && Q1.allFinite() && p.allFinite() && p1.allFinite();
}

bool SemiAEParams::operator==(const SemiAEParams& o) const {
  const auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
  };
  return g == o.g && f == o.f && same(Q, o.Q) && same(Q1, o.Q1) && same(p, o.p) && same(p1, o.p1);
}

GradientSet GradientSet::zeros_like(const SemiAEParams& params) {
  return {Eigen::MatrixXd::Zero(params.Q.rows(), params.Q.cols()),
          Eigen::MatrixXd::Zero(params.Q1.rows(), params.Q1.cols()),
          Eigen::VectorXd::Zero(params.p.size()), Eigen::VectorXd::Zero(params.p1.size())};
}

Eigen::VectorXd concat_input(const Eigen::VectorXd& ratings, const Eigen::VectorXd& side) {
  Eigen::VectorXd x(ratings.size() + side.size());
  x << ratings, side;
  return x;
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& ratings, const Eigen::MatrixXd& side) {
  if (side.rows() != ratings.rows()) {
    throw DimensionError("side information has " + std::to_string(side.rows()) +
                         " rows, ratings have " + std::to_string(ratings.rows()));
  }
  Eigen::MatrixXd x(ratings.rows(), ratings.cols() + side.cols());
  x.leftCols(ratings.cols()) = ratings;
  x.rightCols(side.cols()) = side;
  return x;
}

Eigen::MatrixXd subset(const Eigen::MatrixXd& batch_x, int output_dim) {
  if (output_dim > batch_x.cols()) throw DimensionError("subset wider than the input");
  return batch_x.leftCols(output_dim);
}

ForwardResult forward(const SemiAEParams& params, const Eigen::MatrixXd& batch_x) {
  check_batch(params, batch_x);
  Eigen::MatrixXd pre_hidden = batch_x * params.Q;
  pre_hidden.rowwise() += params.p.transpose();
  ForwardResult out;
  out.hidden = activate(params.g, pre_hidden);
  Eigen::MatrixXd pre_out = out.hidden * params.Q1;
  pre_out.rowwise() += params.p1.transpose();
  out.output = activate(params.f, pre_out);
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> forward(const SemiAEParams& params,
                                                    const Eigen::VectorXd& x) {
  if (x.size() != params.Q.rows()) {
    throw DimensionError("input length " + std::to_string(x.size()) + " does not match input_dim " +
                         std::to_string(params.Q.rows()));
  }
  auto result = forward(params, Eigen::MatrixXd(x.transpose()));
  return {result.hidden.row(0).transpose(), result.output.row(0).transpose()};
}

double regularizer(const SemiAEParams& params, double reg) {
  if (reg == 0.0) return 0.0;
  return 0.5 * reg * (params.Q.squaredNorm() + params.Q1.squaredNorm());
}

double subset_loss(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                   const Eigen::MatrixXd& targets, double reg) {
  check_targets(params, batch_x, targets);
  const auto fwd = forward(params, batch_x);
  const double data = batch_x.rows() == 0 ? 0.0
                                          : (targets - fwd.output).squaredNorm() /
                                                static_cast<double>(batch_x.rows());
  return data + regularizer(params, reg);
}

double masked_loss(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                   const Eigen::MatrixXd& targets, const MaskMatrix& mask, double reg) {
  check_targets(params, batch_x, targets);
  if (mask.rows() != targets.rows() || mask.cols() != targets.cols()) {
    throw DimensionError("mask shape does not match the targets");
  }
  const auto fwd = forward(params, batch_x);
  const Eigen::MatrixXd err = mask.select(targets - fwd.output, 0.0);
  const double data =
      batch_x.rows() == 0 ? 0.0 : err.squaredNorm() / static_cast<double>(batch_x.rows());
  return data + regularizer(params, reg);
}

std::pair<double, GradientSet> loss_and_gradients(const SemiAEParams& params,
                                                  const Eigen::MatrixXd& batch_x,
                                                  const Eigen::MatrixXd& targets,
                                                  const Eigen::MatrixXd* mask, double reg) {
  check_targets(params, batch_x, targets);
  if (mask && (mask->rows() != targets.rows() || mask->cols() != targets.cols())) {
    throw DimensionError("mask shape does not match the targets");
  }
  const auto batch = static_cast<double>(batch_x.rows());

  Eigen::MatrixXd pre_hidden = batch_x * params.Q;
  pre_hidden.rowwise() += params.p.transpose();
  const Eigen::MatrixXd hidden = activate(params.g, pre_hidden);
  Eigen::MatrixXd pre_out = hidden * params.Q1;
  pre_out.rowwise() += params.p1.transpose();
  const Eigen::MatrixXd out = activate(params.f, pre_out);

  Eigen::MatrixXd err = out - targets;
  if (mask) err = (mask->array() != 0.0).select(err, 0.0);

  GradientSet grads;
  double loss = regularizer(params, reg);
  if (batch_x.rows() > 0) {
    loss += err.squaredNorm() / batch;
    Eigen::MatrixXd d_pre_out = (2.0 / batch) * err;
    if (params.f != Activation::kIdentity) {
      d_pre_out.array() *= activation_derivative(params.f, pre_out, out).array();
    }
    Eigen::MatrixXd d_pre_hidden = d_pre_out * params.Q1.transpose();
    if (params.g != Activation::kIdentity) {
      d_pre_hidden.array() *= activation_derivative(params.g, pre_hidden, hidden).array();
    }
    grads.dQ1.noalias() = hidden.transpose() * d_pre_out;
    grads.dp1 = d_pre_out.colwise().sum().transpose();
    grads.dQ.noalias() = batch_x.transpose() * d_pre_hidden;
    grads.dp = d_pre_hidden.colwise().sum().transpose();
  } else {
    grads = GradientSet::zeros_like(params);
  }
  if (reg != 0.0) {
    grads.dQ += reg * params.Q;
    grads.dQ1 += reg * params.Q1;
  }
  return {loss, std::move(grads)};
}

GradientSet backward(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                     const Eigen::MatrixXd& targets, const MaskMatrix* mask, double reg) {
  if (!mask) return loss_and_gradients(params, batch_x, targets, nullptr, reg).second;
  const Eigen::MatrixXd weights = mask->cast<double>();
  return loss_and_gradients(params, batch_x, targets, &weights, reg).second;
}

nlohmann::json params_to_json(const SemiAEParams& params) {
  return {{"dims", {{"S", params.input_dim()}, {"H", params.hidden_dim()}, {"D", params.output_dim()}}},
          {"activations", {{"g", to_string(params.g)}, {"f", to_string(params.f)}}},
          {"Q", matrix_to_json(params.Q)},
          {"Q1", matrix_to_json(params.Q1)},
          {"p", std::vector<double>(params.p.data(), params.p.data() + params.p.size())},
          {"p1", std::vector<double>(params.p1.data(), params.p1.data() + params.p1.size())}};
}

SemiAEParams params_from_json(const nlohmann::json& j) {
  const auto& dims = j.at("dims");
  const int s = dims.at("S").get<int>();
  const int h = dims.at("H").get<int>();
  const int d = dims.at("D").get<int>();
  SemiAEParams params;
  params.g = parse_activation(j.at("activations").at("g").get<std::string>());
  params.f = parse_activation(j.at("activations").at("f").get<std::string>());
  params.Q = matrix_from_json(j.at("Q"), s, h, "Q");
  params.Q1 = matrix_from_json(j.at("Q1"), h, d, "Q1");
  params.p = vector_from_json(j.at("p"), h, "p");
  params.p1 = vector_from_json(j.at("p1"), d, "p1");
  params.validate();
  if (!params.all_finite()) throw DimensionError("model parameters contain non-finite values");
  return params;
}

}  // namespace semiae
