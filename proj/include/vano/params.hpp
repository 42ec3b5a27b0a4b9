#pragma once

#include <cmath>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vano/errors.hpp"
#include "vano/mat.hpp"
#include "vano/rng.hpp"

namespace vano {

// All trainable state lives in one flat array; named tensors are disjoint
// slices of it. Gradients mirror the layout one-to-one.
class ParamStore {
public:
    struct TensorRec {
        std::string name;
        std::vector<int> shape;
        size_t offset = 0;
        size_t len = 0;
    };

    int add(const std::string& name, const std::vector<int>& shape) {
        if (index_.count(name)) throw ConfigError("ParamStore: duplicate tensor " + name);
        TensorRec rec;
        rec.name = name;
        rec.shape = shape;
        rec.offset = values.size();
        rec.len = 1;
        for (int d : shape) {
            if (d <= 0) throw ConfigError("ParamStore: non-positive dim in " + name);
            rec.len *= static_cast<size_t>(d);
        }
        values.resize(values.size() + rec.len, 0.0);
        grads.resize(values.size(), 0.0);
        index_[name] = static_cast<int>(recs_.size());
        recs_.push_back(rec);
        return static_cast<int>(recs_.size()) - 1;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    const TensorRec& rec(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ConfigError("ParamStore: unknown tensor " + name);
        return recs_[it->second];
    }

    const std::vector<TensorRec>& records() const { return recs_; }

    std::span<double> tensor(const std::string& name) {
        const TensorRec& r = rec(name);
        return {values.data() + r.offset, r.len};
    }
    std::span<const double> tensor(const std::string& name) const {
        const TensorRec& r = rec(name);
        return {values.data() + r.offset, r.len};
    }
    std::span<double> grad(const std::string& name) {
        const TensorRec& r = rec(name);
        return {grads.data() + r.offset, r.len};
    }

    Mat tensor_mat(const std::string& name) const {
        const TensorRec& r = rec(name);
        int rows = r.shape.empty() ? 1 : r.shape[0];
        int cols = 1;
        for (size_t i = 1; i < r.shape.size(); ++i) cols *= r.shape[i];
        Mat m(rows, cols);
        std::copy(values.begin() + r.offset, values.begin() + r.offset + r.len, m.v.begin());
        return m;
    }

    void set_tensor(const std::string& name, const Mat& m) {
        const TensorRec& r = rec(name);
        if (m.size() != r.len) throw DimError("set_tensor: size mismatch for " + name);
        std::copy(m.v.begin(), m.v.end(), values.begin() + r.offset);
    }

    void zero_grads() { std::fill(grads.begin(), grads.end(), 0.0); }

    bool all_finite() const {
        for (double x : values)
            if (!std::isfinite(x)) return false;
        return true;
    }

    // Name of the first tensor whose gradient slice contains a non-finite value.
    std::string first_nonfinite_grad() const {
        for (const TensorRec& r : recs_) {
            for (size_t i = r.offset; i < r.offset + r.len; ++i)
                if (!std::isfinite(grads[i])) return r.name;
        }
        return {};
    }

    std::vector<double> values;
    std::vector<double> grads;

private:
    std::vector<TensorRec> recs_;
    std::unordered_map<std::string, int> index_;
};

// Glorot-uniform fill for a (out, in) weight tensor.
inline void glorot_init(std::span<double> w, int out, int in, RngStream& rng) {
    const double a = std::sqrt(6.0 / (static_cast<double>(in) + out));
    for (double& x : w) x = (2.0 * rng.uniform() - 1.0) * a;
}

// Rewrites every rank-2 tensor named "*.W" as a per-output-row factorization
//   W = exp(s) * V,
// with s ~ N(0.5, init_std) and V chosen so the initial product reproduces W.
// When disabled the store is returned unchanged.
inline ParamStore rwf_reparameterize(const ParamStore& ps, bool enabled, double init_std,
                                     uint64_t seed) {
    if (!enabled) return ps;
    ParamStore out;
    RngStream rng(seed, StreamPurpose::init, 0x52574600ULL /* tag for this pass */);
    for (const auto& r : ps.records()) {
        const bool is_weight =
            r.shape.size() == 2 && r.name.size() > 2 && r.name.rfind(".W") == r.name.size() - 2;
        if (!is_weight) {
            out.add(r.name, r.shape);
            auto src = ps.tensor(r.name);
            auto dst = out.tensor(r.name);
            std::copy(src.begin(), src.end(), dst.begin());
            continue;
        }
        const std::string base = r.name.substr(0, r.name.size() - 2);
        const int rows = r.shape[0];
        const int cols = r.shape[1];
        out.add(base + ".s", {rows});
        out.add(base + ".V", {rows, cols});
        auto s = out.tensor(base + ".s");
        auto v = out.tensor(base + ".V");
        auto w = ps.tensor(r.name);
        for (int i = 0; i < rows; ++i) s[i] = 0.5 + init_std * rng.normal();
        for (int i = 0; i < rows; ++i) {
            const double inv = std::exp(-s[i]);
            for (int j = 0; j < cols; ++j) v[static_cast<size_t>(i) * cols + j] =
                w[static_cast<size_t>(i) * cols + j] * inv;
        }
    }
    return out;
}

} // namespace vano
