#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include <Eigen/Dense>
#include <json.hpp>

#include "semiae/activation.hpp"

namespace semiae {

using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// One Semi-AutoEncoder: input of width S (rating block then side
/// information), hidden layer of width H, reconstruction of width D <= S.
/// Row-vector convention: h = g(x Q + p), out = f(h Q1 + p1).
struct SemiAEParams {
  Eigen::MatrixXd Q;   // S x H
  Eigen::MatrixXd Q1;  // H x D
  Eigen::VectorXd p;   // H
  Eigen::VectorXd p1;  // D
  Activation g = Activation::kSigmoid;
  Activation f = Activation::kIdentity;

  int input_dim() const { return static_cast<int>(Q.rows()); }
  int hidden_dim() const { return static_cast<int>(Q.cols()); }
  int output_dim() const { return static_cast<int>(Q1.cols()); }

  /// Zero weights and biases with the given shape.
  static SemiAEParams zeros(int input_dim, int hidden_dim, int output_dim, Activation g,
                            Activation f);

  /// Glorot-uniform weights, zero biases.
  static SemiAEParams glorot(int input_dim, int hidden_dim, int output_dim, Activation g,
                             Activation f, std::mt19937_64& rng);

  /// Throws DimensionError on inconsistent shapes or D > S.
  void validate() const;
  bool all_finite() const;

  bool operator==(const SemiAEParams&) const;
};

struct GradientSet {
  Eigen::MatrixXd dQ;
  Eigen::MatrixXd dQ1;
  Eigen::VectorXd dp;
  Eigen::VectorXd dp1;

  static GradientSet zeros_like(const SemiAEParams& params);
};

struct ForwardResult {
  Eigen::MatrixXd hidden;  // B x H
  Eigen::MatrixXd output;  // B x D
};

Eigen::VectorXd concat_input(const Eigen::VectorXd& ratings, const Eigen::VectorXd& side);

/// Row-wise concatenation [ratings | side]; side may have zero columns.
Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& ratings, const Eigen::MatrixXd& side);

/// sub(x): the leading `output_dim` coordinates of each row.
Eigen::MatrixXd subset(const Eigen::MatrixXd& batch_x, int output_dim);

std::pair<Eigen::VectorXd, Eigen::VectorXd> forward(const SemiAEParams& params,
                                                    const Eigen::VectorXd& x);
ForwardResult forward(const SemiAEParams& params, const Eigen::MatrixXd& batch_x);

double regularizer(const SemiAEParams& params, double reg);

/// (1/B) sum_rows ||target - out||^2 + (reg/2)(||Q||^2 + ||Q1||^2).
double subset_loss(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                   const Eigen::MatrixXd& targets, double reg);

/// As subset_loss, but squared errors are summed only where `mask` is true.
double masked_loss(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                   const Eigen::MatrixXd& targets, const MaskMatrix& mask, double reg);

/// Analytic gradients of subset_loss (mask == nullptr) or masked_loss.
GradientSet backward(const SemiAEParams& params, const Eigen::MatrixXd& batch_x,
                     const Eigen::MatrixXd& targets, const MaskMatrix* mask, double reg);

/// Loss and gradients from one forward pass. `mask` is a 0/1 weight matrix
/// of the target shape, or nullptr for the unmasked loss.
std::pair<double, GradientSet> loss_and_gradients(const SemiAEParams& params,
                                                  const Eigen::MatrixXd& batch_x,
                                                  const Eigen::MatrixXd& targets,
                                                  const Eigen::MatrixXd* mask, double reg);

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json params_to_json(const SemiAEParams& params);
SemiAEParams params_from_json(const nlohmann::json& j);

}  // namespace semiae
