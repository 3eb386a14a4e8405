#include "tactex/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace tactex {

double total_loss(double vm, double tm, double vg, double tg, const LossWeights& w) {
  if (!std::isfinite(vm) || !std::isfinite(tm) || !std::isfinite(vg) || !std::isfinite(tg))
    throw std::runtime_error("total_loss: non-finite loss part");
  return w.vm * vm + w.tm * tm + w.vg * vg + w.tg * tg;
}

}  // namespace tactex
