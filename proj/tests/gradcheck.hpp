#pragma once

// Central finite-difference oracle used by the unit and acceptance suites.
// Independent of the reverse-mode path it checks: the loss is re-evaluated
// from scratch at perturbed inputs.

#include <cmath>
#include <functional>
#include <vector>

#include "ash/autograd.hpp"

namespace ashtest {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
};

// loss_fn must rebuild the graph from current leaf values and return the
// scalar loss. leaves are the tensors to probe; analytic grads are read from
// the same leaf nodes after backward().
inline GradCheckResult gradcheck(const std::function<ash::Var()>& loss_fn,
                                 const std::vector<ash::Var>& leaves, double step = 1e-4,
                                 int max_probes_per_leaf = -1) {
    using namespace ash;
    for (const auto& l : leaves) l->zero_grad();
    Var loss = loss_fn();
    backward(loss);

    GradCheckResult res;
    for (const auto& leaf : leaves) {
        Tensor analytic = leaf->grad.numel() ? leaf->grad : Tensor(leaf->value.shape());
        const int64_t n = leaf->value.numel();
        const int64_t probes =
            (max_probes_per_leaf > 0) ? std::min<int64_t>(n, max_probes_per_leaf) : n;
        for (int64_t k = 0; k < probes; ++k) {
            // Spread probes across the tensor when subsampling.
            const int64_t i = (probes == n) ? k : (k * n) / probes;
            const double orig = leaf->value[size_t(i)];
            const double h = step * std::max(1.0, std::fabs(orig));
            leaf->value[size_t(i)] = orig + h;
            const double fp = scalar_value(loss_fn());
            leaf->value[size_t(i)] = orig - h;
            const double fm = scalar_value(loss_fn());
            leaf->value[size_t(i)] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double an = analytic[size_t(i)];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8});
            res.max_rel_err = std::max(res.max_rel_err, std::fabs(fd - an) / denom);
            ++res.checked;
        }
    }
    return res;
}

}  // namespace ashtest
