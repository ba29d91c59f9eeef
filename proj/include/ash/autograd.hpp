#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ash/tensor.hpp"

namespace ash {

// Reverse-mode tape. Graphs are built per forward pass and released when the
// last Var handle goes out of scope; only leaf parameters persist.
struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool leaf = false;
    std::string name;  // parameters only
    std::vector<Var> parents;
    std::function<void(Node&)> backprop;

    const Shape& shape() const { return value.shape(); }
    void ensure_grad() {
        if (grad.numel() != value.numel()) grad = Tensor(value.shape());
    }
    void zero_grad() { grad = Tensor(); }
};

Var constant(Tensor v);
Var parameter(Tensor v, std::string name);
Var detach(const Var& v);

// Elementwise with stat broadcasting: operands must share (B, C) and either
// share (H, W) or have one operand with 1x1 spatial extent. A (1,1,1,1)
// scalar broadcasts against anything.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var divide(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var mul_scalar(const Var& a, double s);

Var relu(const Var& a);
Var tanh_op(const Var& a);
Var sigmoid(const Var& a);
Var clamp01(const Var& a);

Var conv2d(const Var& x, const Var& w, const Var& b, const Conv2dSpec& spec);
Var upsample2x(const Var& x);

// Batch replication (style features are encoded once and tiled across the
// source batch). x must have batch 1.
Var batch_tile(const Var& x, int batch);

// Channel statistics over the spatial extent, shape (B, C, 1, 1).
Var mean_hw(const Var& x);
// Population standard deviation floored at eps (zero gradient on the floor).
Var std_hw(const Var& x, double eps);

Var sum_all(const Var& x);             // scalar
Var dot(const Var& a, const Var& b);   // scalar probe
Var l2_norm(const Var& x);             // scalar, sqrt(sum x^2)

Var softmax_c(const Var& logits);  // along the channel axis, per pixel

// Runs reverse accumulation from a scalar node.
void backward(const Var& loss);

inline double scalar_value(const Var& v) { return v->value[0]; }

}  // namespace ash
