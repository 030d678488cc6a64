#include "refvae/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace refvae {

void LossWeights::validate() const {
  for (double w : {content, style, lpips, tv, kl, adversarial}) {
    if (!(w >= 0.0)) throw std::invalid_argument("LossWeights: every weight must be >= 0");
  }
  if (!(tv_beta > 0.0)) throw std::invalid_argument("LossWeights: tv_beta must be > 0");
}

double total_loss(const LossWeights& w, const LossParts& p) {
  const std::pair<const char*, double> named[] = {{"content", p.content}, {"style", p.style}, {"lpips", p.lpips},
                                                  {"tv", p.tv},           {"kl", p.kl},       {"adv_g", p.adversarial}};
  for (const auto& [name, value] : named) {
    if (!std::isfinite(value)) throw std::domain_error(std::string("non-finite loss term '") + name + "'");
  }
  return w.content * p.content + w.style * p.style + w.lpips * p.lpips + w.tv * p.tv + w.kl * p.kl +
         w.adversarial * p.adversarial;
}

}  // namespace refvae
