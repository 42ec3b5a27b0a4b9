#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vano/errors.hpp"
#include "vano/params.hpp"

namespace vano {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    int64_t step = 0;
    double base_lr = 1e-3;
    double decay_rate = 0.9;
    int64_t decay_every = 1000;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState make(size_t n_params, double base_lr, double decay_rate,
                          int64_t decay_every) {
        AdamState s;
        s.m.assign(n_params, 0.0);
        s.v.assign(n_params, 0.0);
        s.base_lr = base_lr;
        s.decay_rate = decay_rate;
        s.decay_every = decay_every;
        return s;
    }
};

// Stepwise-constant schedule: lr = base_lr * decay^(step / decay_every) with
// integer division. Computed by repeated multiplication so consecutive
// plateaus differ by exactly decay_rate.
inline double effective_lr(const AdamState& s) {
    const int64_t k = s.step / s.decay_every;
    double lr = s.base_lr;
    for (int64_t i = 0; i < k; ++i) lr *= s.decay_rate;
    return lr;
}

inline void adam_step(AdamState& st, ParamStore& ps) {
    if (st.m.size() != ps.values.size() || st.v.size() != ps.values.size())
        throw DimError("adam_step: state size does not match parameter count");
    const std::string bad = ps.first_nonfinite_grad();
    if (!bad.empty())
        throw NumericalError("adam_step: non-finite gradient in tensor '" + bad + "'");

    const double lr = effective_lr(st);
    const int64_t t = st.step + 1;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(t));
    const size_t n = ps.values.size();
    for (size_t i = 0; i < n; ++i) {
        const double g = ps.grads[i];
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        ps.values[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
    st.step = t;
    if (!ps.all_finite()) throw NumericalError("adam_step: parameters became non-finite");
}

} // namespace vano
