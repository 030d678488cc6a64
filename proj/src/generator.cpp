#include "refvae/generator.hpp"

#include <stdexcept>

namespace refvae {

std::string to_string(InferenceMode mode) {
  switch (mode) {
    case InferenceMode::Reference: return "reference";
    case InferenceMode::Random: return "random";
    case InferenceMode::LrAsRef: return "lr_as_ref";
    case InferenceMode::HrAsRef: return "hr_as_ref";
  }
  return "unknown";
}

InferenceMode parse_mode(const std::string& name) {
  for (auto m : {InferenceMode::Reference, InferenceMode::Random, InferenceMode::LrAsRef, InferenceMode::HrAsRef}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("unknown inference mode '" + name + "' (expected reference|random|lr_as_ref|hr_as_ref)");
}

}  // namespace refvae
