#pragma once

#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace semiae {

enum class Activation { kIdentity, kSigmoid, kRelu, kTanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

/// Elementwise activation of a pre-activation matrix.
Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre);

/// Derivative with respect to the pre-activation, given both the
/// pre-activation and the already computed activation.
Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& pre,
                                      const Eigen::MatrixXd& post);

double activate(Activation a, double pre);
double activation_derivative(Activation a, double pre);

}  // namespace semiae
