/* Copyright 2026 The pcseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstddef>
#include <span>

#include "pcseg/error.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

/// Classical momentum SGD on one parameter tensor:
///   velocity <- momentum * velocity + grad
///   param    <- param - lr * velocity
/// With lr == 0 the parameter is left untouched bit for bit.
inline void sgd_step(Tensor& param, const Tensor& grad, Tensor& velocity,
                     double lr, double momentum) {
  PCSG_CHECK(lr >= 0.0, "sgd_step: negative learning rate");
  PCSG_CHECK(param.shape() == grad.shape(), "sgd_step: gradient shape ",
             shape_string(grad.shape()), " does not match parameter ",
             shape_string(param.shape()));
  if (velocity.shape() != param.shape()) velocity = Tensor(param.shape());
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grad[i];
    if (lr != 0.0) param[i] -= lr * velocity[i];
  }
}

/// Scalar overload, used for CRF kernel weights.
inline void sgd_step(double& param, double grad, double& velocity, double lr,
                     double momentum) {
  PCSG_CHECK(lr >= 0.0, "sgd_step: negative learning rate");
  velocity = momentum * velocity + grad;
  if (lr != 0.0) param -= lr * velocity;
}

}  // namespace pcseg
