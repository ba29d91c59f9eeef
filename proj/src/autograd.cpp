#include "ash/autograd.hpp"

#include <cmath>
#include <unordered_set>

namespace ash {

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->leaf = true;
    return n;
}

Var parameter(Tensor v, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = true;
    n->leaf = true;
    n->name = std::move(name);
    return n;
}

Var detach(const Var& v) { return constant(v->value); }

static Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    if (rg) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

// Broadcast classes for the elementwise ops.
enum class Bc { same, b_stat, b_scalar, a_stat, a_scalar };

static Bc bc_class(const Shape& a, const Shape& b) {
    if (a == b) return Bc::same;
    if (b.b == 1 && b.c == 1 && b.h == 1 && b.w == 1) return Bc::b_scalar;
    if (a.b == 1 && a.c == 1 && a.h == 1 && a.w == 1) return Bc::a_scalar;
    if (a.b == b.b && a.c == b.c && b.h == 1 && b.w == 1) return Bc::b_stat;
    if (a.b == b.b && a.c == b.c && a.h == 1 && a.w == 1) return Bc::a_stat;
    throw ShapeError("elementwise op on " + a.str() + " vs " + b.str());
}

// Applies f(av, bv) with b (or a) broadcast over the spatial extent.
template <class F>
static Tensor bc_apply(const Tensor& a, const Tensor& b, Bc cls, F&& f) {
    const bool swap = (cls == Bc::a_stat || cls == Bc::a_scalar);
    const Tensor& big = swap ? b : a;
    const Tensor& small = swap ? a : b;
    Tensor out(big.shape());
    const Shape s = big.shape();
    const int64_t plane = int64_t(s.h) * s.w;
    if (cls == Bc::same) {
        for (int64_t i = 0; i < big.numel(); ++i)
            out[size_t(i)] = f(a[size_t(i)], b[size_t(i)]);
        return out;
    }
    const bool scalar = (cls == Bc::b_scalar || cls == Bc::a_scalar);
    for (int b_ = 0; b_ < s.b; ++b_) {
        for (int c = 0; c < s.c; ++c) {
            const double sv = scalar ? small[0] : small[size_t(b_) * s.c + c];
            const double* bp = &big.at(b_, c, 0, 0);
            double* op = &out.at(b_, c, 0, 0);
            for (int64_t i = 0; i < plane; ++i)
                op[size_t(i)] = swap ? f(sv, bp[size_t(i)]) : f(bp[size_t(i)], sv);
        }
    }
    return out;
}

// Accumulates grad g (full shape) into a node whose shape may be a stat/scalar
// broadcast of it, optionally scaled elementwise by a functor of both values.
static void accumulate_bc(Node& dst, const Tensor& g) {
    dst.ensure_grad();
    const Shape ds = dst.value.shape(), gs = g.shape();
    if (ds == gs) {
        for (int64_t i = 0; i < g.numel(); ++i) dst.grad[size_t(i)] += g[size_t(i)];
        return;
    }
    if (ds.b == 1 && ds.c == 1 && ds.h == 1 && ds.w == 1) {
        double acc = 0.0;
        for (int64_t i = 0; i < g.numel(); ++i) acc += g[size_t(i)];
        dst.grad[0] += acc;
        return;
    }
    // stat shape (B, C, 1, 1)
    const int64_t plane = int64_t(gs.h) * gs.w;
    for (int b = 0; b < gs.b; ++b) {
        for (int c = 0; c < gs.c; ++c) {
            const double* gp = &g.at(b, c, 0, 0);
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += gp[size_t(i)];
            dst.grad[size_t(b) * gs.c + c] += acc;
        }
    }
}

Var add(const Var& a, const Var& b) {
    const Bc cls = bc_class(a->shape(), b->shape());
    Tensor out = bc_apply(a->value, b->value, cls, [](double x, double y) { return x + y; });
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate_bc(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) accumulate_bc(*n.parents[1], n.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    const Bc cls = bc_class(a->shape(), b->shape());
    Tensor out = bc_apply(a->value, b->value, cls, [](double x, double y) { return x - y; });
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) accumulate_bc(*n.parents[0], n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor neg(n.grad.shape());
            for (int64_t i = 0; i < neg.numel(); ++i) neg[size_t(i)] = -n.grad[size_t(i)];
            accumulate_bc(*n.parents[1], neg);
        }
    });
}

Var mul(const Var& a, const Var& b) {
    const Bc cls = bc_class(a->shape(), b->shape());
    Tensor out = bc_apply(a->value, b->value, cls, [](double x, double y) { return x * y; });
    return make_op(std::move(out), {a, b}, [cls](Node& n) {
        if (n.parents[0]->requires_grad) {
            Tensor ga = bc_apply(n.grad, n.parents[1]->value,
                                 bc_class(n.grad.shape(), n.parents[1]->value.shape()),
                                 [](double g, double y) { return g * y; });
            accumulate_bc(*n.parents[0], ga);
        }
        if (n.parents[1]->requires_grad) {
            Tensor gb = bc_apply(n.grad, n.parents[0]->value,
                                 bc_class(n.grad.shape(), n.parents[0]->value.shape()),
                                 [](double g, double x) { return g * x; });
            accumulate_bc(*n.parents[1], gb);
        }
        (void)cls;
    });
}

Var divide(const Var& a, const Var& b) {
    const Bc cls = bc_class(a->shape(), b->shape());
    Tensor out = bc_apply(a->value, b->value, cls, [](double x, double y) { return x / y; });
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) {
            Tensor ga = bc_apply(n.grad, n.parents[1]->value,
                                 bc_class(n.grad.shape(), n.parents[1]->value.shape()),
                                 [](double g, double y) { return g / y; });
            accumulate_bc(*n.parents[0], ga);
        }
        if (n.parents[1]->requires_grad) {
            // d/dy (x/y) = -x/y^2; combine grad with the output value x/y.
            Tensor gy = bc_apply(n.grad, n.value,
                                 bc_class(n.grad.shape(), n.value.shape()),
                                 [](double g, double q) { return g * q; });
            Tensor gb = bc_apply(gy, n.parents[1]->value,
                                 bc_class(gy.shape(), n.parents[1]->value.shape()),
                                 [](double gq, double y) { return -gq / y; });
            accumulate_bc(*n.parents[1], gb);
        }
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[size_t(i)] += s;
    return make_op(std::move(out), {a},
                   [](Node& n) { accumulate_bc(*n.parents[0], n.grad); });
}

Var mul_scalar(const Var& a, double s) {
    Tensor out = a->value;
    for (int64_t i = 0; i < out.numel(); ++i) out[size_t(i)] *= s;
    return make_op(std::move(out), {a}, [s](Node& n) {
        Tensor g(n.grad.shape());
        for (int64_t i = 0; i < g.numel(); ++i) g[size_t(i)] = n.grad[size_t(i)] * s;
        accumulate_bc(*n.parents[0], g);
    });
}

template <class FwdF, class GateF>
static Var unary_op(const Var& a, FwdF fwd, GateF gate) {
    Tensor out(a->shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[size_t(i)] = fwd(a->value[size_t(i)]);
    return make_op(std::move(out), {a}, [gate](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        for (int64_t i = 0; i < n.grad.numel(); ++i)
            p.grad[size_t(i)] += n.grad[size_t(i)] * gate(p.value[size_t(i)], n.value[size_t(i)]);
    });
}

Var relu(const Var& a) {
    return unary_op(
        a, [](double x) { return x > 0 ? x : 0.0; },
        [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var tanh_op(const Var& a) {
    return unary_op(
        a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(const Var& a) {
    return unary_op(
        a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double, double y) { return y * (1.0 - y); });
}

Var clamp01(const Var& a) {
    return unary_op(
        a, [](double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); },
        [](double x, double) { return (x > 0.0 && x < 1.0) ? 1.0 : 0.0; });
}

Var conv2d(const Var& x, const Var& w, const Var& b, const Conv2dSpec& spec) {
    if (b->shape().numel() != w->shape().b)
        throw ShapeError("conv2d bias " + b->shape().str() + " vs weight " + w->shape().str());
    Tensor out(conv2d_out_shape(x->shape(), w->shape(), spec));
    conv2d_forward(x->value, w->value, b->value, spec, out);
    return make_op(std::move(out), {x, w, b}, [spec](Node& n) {
        Node& px = *n.parents[0];
        Node& pw = *n.parents[1];
        Node& pb = *n.parents[2];
        if (px.requires_grad) {
            px.ensure_grad();
            conv2d_backward_input(n.grad, pw.value, spec, px.grad);
        }
        if (pw.requires_grad || pb.requires_grad) {
            pw.ensure_grad();
            pb.ensure_grad();
            conv2d_backward_params(n.grad, px.value, spec, pw.grad, pb.grad);
        }
    });
}

Var upsample2x(const Var& x) {
    const Shape s = x->shape();
    Tensor out(Shape{s.b, s.c, 2 * s.h, 2 * s.w});
    upsample2x_forward(x->value, out);
    return make_op(std::move(out), {x}, [](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        upsample2x_backward(n.grad, p.grad);
    });
}

Var batch_tile(const Var& x, int batch) {
    const Shape s = x->shape();
    if (s.b != 1) throw ShapeError("batch_tile expects batch 1, got " + s.str());
    Tensor out(Shape{batch, s.c, s.h, s.w});
    const int64_t plane = s.numel();
    for (int b = 0; b < batch; ++b)
        for (int64_t i = 0; i < plane; ++i) out[size_t(b * plane + i)] = x->value[size_t(i)];
    return make_op(std::move(out), {x}, [batch, plane](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        for (int b = 0; b < batch; ++b)
            for (int64_t i = 0; i < plane; ++i)
                p.grad[size_t(i)] += n.grad[size_t(b * plane + i)];
    });
}

Var mean_hw(const Var& x) {
    const Shape s = x->shape();
    const int64_t plane = int64_t(s.h) * s.w;
    Tensor out(Shape{s.b, s.c, 1, 1});
    for (int b = 0; b < s.b; ++b) {
        for (int c = 0; c < s.c; ++c) {
            const double* p = &x->value.at(b, c, 0, 0);
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += p[size_t(i)];
            out[size_t(b) * s.c + c] = acc / static_cast<double>(plane);
        }
    }
    return make_op(std::move(out), {x}, [plane](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        const Shape s = p.value.shape();
        for (int b = 0; b < s.b; ++b) {
            for (int c = 0; c < s.c; ++c) {
                const double g = n.grad[size_t(b) * s.c + c] / static_cast<double>(plane);
                double* gp = &p.grad.at(b, c, 0, 0);
                for (int64_t i = 0; i < plane; ++i) gp[size_t(i)] += g;
            }
        }
    });
}

Var std_hw(const Var& x, double eps) {
    const Shape s = x->shape();
    const int64_t plane = int64_t(s.h) * s.w;
    Tensor out(Shape{s.b, s.c, 1, 1});
    Tensor means(Shape{s.b, s.c, 1, 1});
    for (int b = 0; b < s.b; ++b) {
        for (int c = 0; c < s.c; ++c) {
            const double* p = &x->value.at(b, c, 0, 0);
            double acc = 0.0;
            for (int64_t i = 0; i < plane; ++i) acc += p[size_t(i)];
            const double mu = acc / static_cast<double>(plane);
            double var = 0.0;
            for (int64_t i = 0; i < plane; ++i) {
                const double d = p[size_t(i)] - mu;
                var += d * d;
            }
            var /= static_cast<double>(plane);
            means[size_t(b) * s.c + c] = mu;
            out[size_t(b) * s.c + c] = std::max(eps, std::sqrt(var));
        }
    }
    return make_op(std::move(out), {x}, [plane, eps, means](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        const Shape s = p.value.shape();
        for (int b = 0; b < s.b; ++b) {
            for (int c = 0; c < s.c; ++c) {
                const size_t sc = size_t(b) * s.c + c;
                const double sd = n.value[sc];
                if (sd <= eps) continue;  // clamped branch: flat
                const double g = n.grad[sc] / (static_cast<double>(plane) * sd);
                const double mu = means[sc];
                const double* vp = &p.value.at(b, c, 0, 0);
                double* gp = &p.grad.at(b, c, 0, 0);
                for (int64_t i = 0; i < plane; ++i)
                    gp[size_t(i)] += g * (vp[size_t(i)] - mu);
            }
        }
    });
}

Var sum_all(const Var& x) {
    double acc = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) acc += x->value[size_t(i)];
    Tensor out(Shape{1, 1, 1, 1});
    out[0] = acc;
    return make_op(std::move(out), {x}, [](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        const double g = n.grad[0];
        for (int64_t i = 0; i < p.grad.numel(); ++i) p.grad[size_t(i)] += g;
    });
}

Var dot(const Var& a, const Var& b) {
    if (a->shape() != b->shape())
        throw ShapeError("dot on " + a->shape().str() + " vs " + b->shape().str());
    double acc = 0.0;
    for (int64_t i = 0; i < a->value.numel(); ++i)
        acc += a->value[size_t(i)] * b->value[size_t(i)];
    Tensor out(Shape{1, 1, 1, 1});
    out[0] = acc;
    return make_op(std::move(out), {a, b}, [](Node& n) {
        Node& pa = *n.parents[0];
        Node& pb = *n.parents[1];
        const double g = n.grad[0];
        if (pa.requires_grad) {
            pa.ensure_grad();
            for (int64_t i = 0; i < pa.grad.numel(); ++i)
                pa.grad[size_t(i)] += g * pb.value[size_t(i)];
        }
        if (pb.requires_grad) {
            pb.ensure_grad();
            for (int64_t i = 0; i < pb.grad.numel(); ++i)
                pb.grad[size_t(i)] += g * pa.value[size_t(i)];
        }
    });
}

Var l2_norm(const Var& x) {
    double acc = 0.0;
    for (int64_t i = 0; i < x->value.numel(); ++i) {
        const double v = x->value[size_t(i)];
        acc += v * v;
    }
    Tensor out(Shape{1, 1, 1, 1});
    out[0] = std::sqrt(acc);
    return make_op(std::move(out), {x}, [](Node& n) {
        Node& p = *n.parents[0];
        const double norm = n.value[0];
        if (norm <= 0.0) return;  // subgradient 0 at the kink
        p.ensure_grad();
        const double g = n.grad[0] / norm;
        for (int64_t i = 0; i < p.grad.numel(); ++i)
            p.grad[size_t(i)] += g * p.value[size_t(i)];
    });
}

Var softmax_c(const Var& logits) {
    const Shape s = logits->shape();
    Tensor out(s);
    const int64_t plane = int64_t(s.h) * s.w;
    for (int b = 0; b < s.b; ++b) {
        for (int64_t i = 0; i < plane; ++i) {
            double mx = -1e300;
            for (int c = 0; c < s.c; ++c)
                mx = std::max(mx, logits->value[(size_t(b) * s.c + c) * plane + size_t(i)]);
            double z = 0.0;
            for (int c = 0; c < s.c; ++c) {
                const size_t idx = (size_t(b) * s.c + c) * plane + size_t(i);
                const double e = std::exp(logits->value[idx] - mx);
                out[idx] = e;
                z += e;
            }
            for (int c = 0; c < s.c; ++c) out[(size_t(b) * s.c + c) * plane + size_t(i)] /= z;
        }
    }
    return make_op(std::move(out), {logits}, [](Node& n) {
        Node& p = *n.parents[0];
        p.ensure_grad();
        const Shape s = n.value.shape();
        const int64_t plane = int64_t(s.h) * s.w;
        for (int b = 0; b < s.b; ++b) {
            for (int64_t i = 0; i < plane; ++i) {
                double dy_dot_y = 0.0;
                for (int c = 0; c < s.c; ++c) {
                    const size_t idx = (size_t(b) * s.c + c) * plane + size_t(i);
                    dy_dot_y += n.grad[idx] * n.value[idx];
                }
                for (int c = 0; c < s.c; ++c) {
                    const size_t idx = (size_t(b) * s.c + c) * plane + size_t(i);
                    p.grad[idx] += n.value[idx] * (n.grad[idx] - dy_dot_y);
                }
            }
        }
    });
}

void backward(const Var& loss) {
    if (loss->value.numel() != 1)
        throw ShapeError("backward expects a scalar, got " + loss->shape().str());
    if (!loss->requires_grad) return;

    // Post-order DFS; reverse gives a valid topological order.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(loss.get(), 0);
    seen.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* next = node->parents[idx].get();
            ++idx;
            if (next->requires_grad && !seen.count(next)) {
                seen.insert(next);
                stack.emplace_back(next, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && n->grad.numel() == n->value.numel()) n->backprop(*n);
    }
}

}  // namespace ash
