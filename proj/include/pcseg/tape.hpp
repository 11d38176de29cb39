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
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "pcseg/error.hpp"
#include "pcseg/ops.hpp"
#include "pcseg/tensor.hpp"

namespace pcseg {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Records executed ops with what their backward needs, then replays them in
/// exact reverse order. Gradients reaching the same node are summed.
class Tape {
 public:
  Var constant(Tensor value) { return push(std::move(value), false, {}); }
  Var parameter(Tensor value) { return push(std::move(value), true, {}); }

  Var conv3d(Var x, Var w, Var b, std::size_t stride, std::size_t pad) {
    Tensor out = ops::conv3d_forward(value(x), value(w), value(b), stride, pad);
    const bool rg = needs(x) || needs(w) || needs(b);
    return push(std::move(out), rg, [=](Tape& t, const Tensor& g) {
      Tensor gx, gw, gb;
      ops::conv3d_backward(t.value(x), t.value(w), g, stride, pad,
                           t.needs(x) ? &gx : nullptr, t.needs(w) ? &gw : nullptr,
                           t.needs(b) ? &gb : nullptr);
      if (t.needs(x)) t.accumulate(x, gx);
      if (t.needs(w)) t.accumulate(w, gw);
      if (t.needs(b)) t.accumulate(b, gb);
    });
  }

  Var maxpool3d(Var x, std::size_t stride) {
    ops::PoolResult r = ops::maxpool3d_forward(value(x), stride);
    auto argmax = std::make_shared<std::vector<std::size_t>>(std::move(r.argmax));
    return push(std::move(r.output), needs(x), [=](Tape& t, const Tensor& g) {
      t.accumulate(x, ops::maxpool3d_backward(*argmax, g, t.value(x).shape()));
    });
  }

  Var relu(Var x) {
    return push(ops::relu_forward(value(x)), needs(x), [=](Tape& t, const Tensor& g) {
      t.accumulate(x, ops::relu_backward(t.value(x), g));
    });
  }

  Var add(Var a, Var b) {
    return push(ops::add_forward(value(a), value(b)), needs(a) || needs(b),
                [=](Tape& t, const Tensor& g) {
                  if (t.needs(a)) t.accumulate(a, g);
                  if (t.needs(b)) t.accumulate(b, g);
                });
  }

  Var softmax(Var x) {
    const Var self{nodes_.size()};
    return push(ops::softmax_over_labels(value(x)), needs(x),
                [=](Tape& t, const Tensor& g) {
                  t.accumulate(x, ops::softmax_over_labels_backward(t.value(self), g));
                });
  }

  const Tensor& value(Var v) const { return node(v).value; }

  /// Gradient of the last backward() target wrt v; zeros if nothing reached v.
  Tensor grad(Var v) const {
    const Node& n = node(v);
    return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
  }

  bool needs(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Seeds d(target)/d(output) = seed and propagates to every recorded input.
  void backward(Var output, const Tensor& seed) {
    PCSG_CHECK(seed.shape() == value(output).shape(),
               "backward: seed shape ", shape_string(seed.shape()),
               " does not match output ", shape_string(value(output).shape()));
    for (Node& n : nodes_) n.grad = Tensor();
    accumulate(output, seed);
    for (std::size_t i = output.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, n.grad);
    }
  }

 private:
  using Backward = std::function<void(Tape&, const Tensor&)>;
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };

  const Node& node(Var v) const {
    PCSG_CHECK(v.id < nodes_.size(), "tape: invalid variable");
    return nodes_[v.id];
  }

  Var push(Tensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor(), requires_grad,
                          requires_grad ? std::move(backward) : Backward()});
    return Var{nodes_.size() - 1};
  }

  void accumulate(Var v, const Tensor& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty())
      n.grad = g;
    else
      n.grad += g;
  }

  std::vector<Node> nodes_;
};

}  // namespace pcseg
