#include "semiae/activation.hpp"

#include <cmath>

#include "semiae/errors.hpp"

namespace semiae {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (valid: identity, sigmoid, relu, tanh)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "identity";
}

double activate(Activation a, double pre) {
  switch (a) {
    case Activation::kIdentity: return pre;
    case Activation::kSigmoid: return stable_sigmoid(pre);
    case Activation::kRelu: return pre > 0.0 ? pre : 0.0;
    case Activation::kTanh: return std::tanh(pre);
  }
  return pre;
}

double activation_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kSigmoid: {
      const double s = stable_sigmoid(pre);
      return s * (1.0 - s);
    }
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& pre) {
  switch (a) {
    case Activation::kIdentity: return pre;
    case Activation::kSigmoid: return pre.unaryExpr([](double x) { return stable_sigmoid(x); });
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

Eigen::MatrixXd activation_derivative(Activation a, const Eigen::MatrixXd& pre,
                                      const Eigen::MatrixXd& post) {
  switch (a) {
    case Activation::kIdentity: return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    case Activation::kSigmoid: return (post.array() * (1.0 - post.array())).matrix();
    case Activation::kRelu: return (pre.array() > 0.0).cast<double>().matrix();
    case Activation::kTanh: return (1.0 - post.array().square()).matrix();
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

}  // namespace semiae
