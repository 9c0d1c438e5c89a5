#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>

#include "semiae/model.hpp"

namespace semiae {

enum class OptimizerKind { kSgd, kRmsProp, kAdam };

OptimizerKind parse_optimizer(std::string_view name);
std::string to_string(OptimizerKind kind);

struct OptimizerHyper {
  double learning_rate = 0.001;
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;   // adam
  double decay = 0.9;     // rmsprop
  double epsilon = 1e-8;  // adam and rmsprop
};

/// Optimizer accumulators for one SemiAEParams. For adam, `first` and
/// `second` are the moment estimates; rmsprop uses only `second`.
class OptimizerState {
 public:
  OptimizerState(OptimizerKind kind, const OptimizerHyper& hyper, const SemiAEParams& params);

  OptimizerKind kind() const { return kind_; }
  const OptimizerHyper& hyper() const { return hyper_; }
  std::int64_t step_count() const { return t_; }
  const GradientSet& first_moment() const { return first_; }
  const GradientSet& second_moment() const { return second_; }

  /// Applies one update in place. Throws DataError, naming the parameter,
  /// if any gradient entry is non-finite; nothing is modified in that case.
  void step(SemiAEParams& params, const GradientSet& grads);

 private:
  OptimizerKind kind_;
  OptimizerHyper hyper_;
  GradientSet first_;
  GradientSet second_;
  std::int64_t t_ = 0;
};

/// Value-semantics form of OptimizerState::step.
std::pair<OptimizerState, SemiAEParams> update(OptimizerState state, SemiAEParams params,
                                               const GradientSet& grads);

}  // namespace semiae
