#pragma once

// Private: streaming loss accumulation over per-step hazards, shared by the
// latent and Cox optimizers so censoring and terminal-step handling cannot
// drift apart. lam_at is called with j = 0..t_max-1 in order.

#include <cstddef>

#include "lshm/errors.hpp"
#include "lshm/likelihood.hpp"
#include "lshm/types.hpp"

namespace lshm::detail {

template <class LambdaAt>
double streamed_loss(std::size_t t_max, Event event, LambdaAt&& lam_at) {
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < t_max; ++j) acc += lam_at(j);
  const double lam_t = lam_at(t_max - 1);
  if (event == Event::Failed) {
    if (lam_t < 1e-300) {
      throw numeric_range_error("terminal hazard underflow");
    }
    acc -= series::log1m_exp(lam_t);
  } else {
    acc += lam_t;
  }
  return acc;
}

}  // namespace lshm::detail
