#include "semiae/optim.hpp"

#include <cmath>

#include "semiae/errors.hpp"

namespace semiae {

namespace {

template <typename Param>
void check_shape(const Param& param, const Param& grad, const char* name) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw DimensionError(std::string("gradient for ") + name + " has the wrong shape");
  }
  if (!grad.allFinite()) throw DataError(std::string("non-finite gradient entry in ") + name);
}

template <typename Param>
void apply(OptimizerKind kind, const OptimizerHyper& hp, std::int64_t t, Param& param,
           const Param& grad, Param& first, Param& second) {
  const double lr = hp.learning_rate;
  switch (kind) {
    case OptimizerKind::kSgd:
      param.noalias() -= lr * grad;
      break;
    case OptimizerKind::kRmsProp:
      second.array() = hp.decay * second.array() + (1.0 - hp.decay) * grad.array().square();
      param.array() -= lr * grad.array() / (second.array() + hp.epsilon).sqrt();
      break;
    case OptimizerKind::kAdam: {
      first.array() = hp.beta1 * first.array() + (1.0 - hp.beta1) * grad.array();
      second.array() = hp.beta2 * second.array() + (1.0 - hp.beta2) * grad.array().square();
      const double c1 = 1.0 - std::pow(hp.beta1, static_cast<double>(t));
      const double c2 = 1.0 - std::pow(hp.beta2, static_cast<double>(t));
      param.array() -= lr * (first.array() / c1) / ((second.array() / c2).sqrt() + hp.epsilon);
      break;
    }
  }
}

}  // namespace

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (valid: sgd, rmsprop, adam)");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kAdam: return "adam";
  }
  return "sgd";
}

OptimizerState::OptimizerState(OptimizerKind kind, const OptimizerHyper& hyper,
                               const SemiAEParams& params)
    : kind_(kind),
      hyper_(hyper),
      first_(GradientSet::zeros_like(params)),
      second_(GradientSet::zeros_like(params)) {
  if (!(hyper.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

void OptimizerState::step(SemiAEParams& params, const GradientSet& grads) {
  check_shape(params.Q, grads.dQ, "Q");
  check_shape(params.Q1, grads.dQ1, "Q1");
  check_shape(params.p, grads.dp, "p");
  check_shape(params.p1, grads.dp1, "p1");
  if (first_.dQ.rows() != params.Q.rows() || first_.dQ1.cols() != params.Q1.cols()) {
    throw DimensionError("optimizer state was built for a different parameter shape");
  }
  ++t_;
  apply(kind_, hyper_, t_, params.Q, grads.dQ, first_.dQ, second_.dQ);
  apply(kind_, hyper_, t_, params.Q1, grads.dQ1, first_.dQ1, second_.dQ1);
  apply(kind_, hyper_, t_, params.p, grads.dp, first_.dp, second_.dp);
  apply(kind_, hyper_, t_, params.p1, grads.dp1, first_.dp1, second_.dp1);
}

std::pair<OptimizerState, SemiAEParams> update(OptimizerState state, SemiAEParams params,
                                               const GradientSet& grads) {
  state.step(params, grads);
  return {std::move(state), std::move(params)};
}

}  // namespace semiae
