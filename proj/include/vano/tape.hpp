#pragma once

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "vano/activations.hpp"
#include "vano/blas.hpp"
#include "vano/mat.hpp"
#include "vano/params.hpp"

namespace vano {

using NodeId = int;

// Reverse-mode tape over matrix-valued primitives. Ops append nodes in
// topological order; backward() replays them once in reverse. Gradients are
// only materialized for nodes on a differentiable path.
class Tape {
public:
    struct Node {
        Mat val;
        Mat grad;
        bool requires_grad = false;
        std::function<void(Tape&)> back; // empty for leaves/constants
    };

    // ---- leaves ----

    NodeId constant(Mat v) { return push(std::move(v), false, {}); }

    NodeId input(Mat v, bool requires_grad) { return push(std::move(v), requires_grad, {}); }

    // Leaf bound to a named ParamStore tensor; backward() accumulates its
    // gradient into the store.
    NodeId param(const ParamStore& ps, const std::string& name) {
        NodeId id = push(ps.tensor_mat(name), true, {});
        const auto& r = ps.rec(name);
        bindings_.push_back({id, r.offset, r.len});
        return id;
    }

    // ---- primitives ----

    NodeId matmul(NodeId a, NodeId b, bool ta = false, bool tb = false) {
        Mat c;
        gemm(val(a), ta, val(b), tb, c);
        return push(std::move(c), needs_grad(a) || needs_grad(b), [a, b, ta, tb](Tape& t) {
            NodeId y = t.current_;
            const Mat& dy = t.gradref(y);
            if (t.needs_grad(a)) {
                Mat& da = t.gradref(a);
                if (!ta && !tb) gemm(dy, false, t.val(b), true, da, 1.0, 1.0);
                else if (!ta && tb) gemm(dy, false, t.val(b), false, da, 1.0, 1.0);
                else if (ta && !tb) gemm(t.val(b), false, dy, true, da, 1.0, 1.0);
                else gemm(t.val(b), true, dy, true, da, 1.0, 1.0);
            }
            if (t.needs_grad(b)) {
                Mat& db = t.gradref(b);
                if (!ta && !tb) gemm(t.val(a), true, dy, false, db, 1.0, 1.0);
                else if (!ta && tb) gemm(dy, true, t.val(a), false, db, 1.0, 1.0);
                else if (ta && !tb) gemm(t.val(a), false, dy, false, db, 1.0, 1.0);
                else gemm(dy, true, t.val(a), true, db, 1.0, 1.0);
            }
        });
    }

    // X + broadcast row vector b (shape (1, cols) or (cols, 1)).
    NodeId add_rowvec(NodeId x, NodeId b) {
        const Mat& X = val(x);
        const Mat& B = val(b);
        if (static_cast<int>(B.size()) != X.cols) throw DimError("add_rowvec: bias length mismatch");
        Mat y = X;
        for (int i = 0; i < y.rows; ++i)
            for (int j = 0; j < y.cols; ++j) y(i, j) += B.v[j];
        return push(std::move(y), needs_grad(x) || needs_grad(b), [x, b](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            if (t.needs_grad(x)) axpy(t.gradref(x), dy);
            if (t.needs_grad(b)) {
                Mat& db = t.gradref(b);
                for (int i = 0; i < dy.rows; ++i)
                    for (int j = 0; j < dy.cols; ++j) db.v[j] += dy(i, j);
            }
        });
    }

    NodeId act(NodeId x, Activation a) {
        if (a == Activation::identity) return x;
        const Mat& X = val(x);
        Mat y(X.rows, X.cols);
        const size_t n = X.size();
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 16384)
        for (size_t i = 0; i < n; ++i) y.v[i] = act_apply(a, X.v[i]);
        return push(std::move(y), needs_grad(x), [x, a](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            if (!t.needs_grad(x)) return;
            Mat& dx = t.gradref(x);
            const Mat& X = t.val(x);
            const size_t n = X.size();
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 16384)
            for (size_t i = 0; i < n; ++i) dx.v[i] += act_grad(a, X.v[i]) * dy.v[i];
        });
    }

    // W = exp(s) (x) V, scaling row i of V by exp(s_i). s is (rows, 1).
    NodeId rwf_weight(NodeId s, NodeId v) {
        const Mat& S = val(s);
        const Mat& V = val(v);
        if (static_cast<int>(S.size()) != V.rows) throw DimError("rwf_weight: scale length mismatch");
        Mat w(V.rows, V.cols);
        for (int i = 0; i < V.rows; ++i) {
            const double e = std::exp(S.v[i]);
            for (int j = 0; j < V.cols; ++j) w(i, j) = e * V(i, j);
        }
        return push(std::move(w), needs_grad(s) || needs_grad(v), [s, v](Tape& t) {
            NodeId y = t.current_;
            const Mat& dw = t.gradref(y);
            const Mat& W = t.val(y);
            const Mat& S = t.val(s);
            const Mat& V = t.val(v);
            if (t.needs_grad(v)) {
                Mat& dv = t.gradref(v);
                for (int i = 0; i < V.rows; ++i) {
                    const double e = std::exp(S.v[i]);
                    for (int j = 0; j < V.cols; ++j) dv(i, j) += e * dw(i, j);
                }
            }
            if (t.needs_grad(s)) {
                Mat& ds = t.gradref(s);
                for (int i = 0; i < V.rows; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < V.cols; ++j) acc += dw(i, j) * W(i, j);
                    ds.v[i] += acc;
                }
            }
        });
    }

    NodeId add(NodeId a, NodeId b) {
        require_same_shape(val(a), val(b), "add");
        Mat y = val(a);
        axpy(y, val(b));
        return push(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            if (t.needs_grad(a)) axpy(t.gradref(a), dy);
            if (t.needs_grad(b)) axpy(t.gradref(b), dy);
        });
    }

    NodeId sub(NodeId a, NodeId b) {
        require_same_shape(val(a), val(b), "sub");
        Mat y = val(a);
        const Mat& B = val(b);
        for (size_t i = 0; i < y.size(); ++i) y.v[i] -= B.v[i];
        return push(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            if (t.needs_grad(a)) axpy(t.gradref(a), dy);
            if (t.needs_grad(b)) {
                Mat& db = t.gradref(b);
                for (size_t i = 0; i < dy.size(); ++i) db.v[i] -= dy.v[i];
            }
        });
    }

    NodeId hadamard(NodeId a, NodeId b) {
        require_same_shape(val(a), val(b), "hadamard");
        const Mat& A = val(a);
        const Mat& B = val(b);
        Mat y(A.rows, A.cols);
        const size_t n = y.size();
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 65536)
        for (size_t i = 0; i < n; ++i) y.v[i] = A.v[i] * B.v[i];
        return push(std::move(y), needs_grad(a) || needs_grad(b), [a, b](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            const size_t n = dy.size();
            if (t.needs_grad(a)) {
                Mat& da = t.gradref(a);
                const Mat& B = t.val(b);
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 65536)
                for (size_t i = 0; i < n; ++i) da.v[i] += dy.v[i] * B.v[i];
            }
            if (t.needs_grad(b)) {
                Mat& db = t.gradref(b);
                const Mat& A = t.val(a);
#pragma omp parallel for schedule(static) if (threads() > 1 && n > 65536)
                for (size_t i = 0; i < n; ++i) db.v[i] += dy.v[i] * A.v[i];
            }
        });
    }

    NodeId scale(NodeId a, double c) {
        Mat y = val(a);
        for (double& x : y.v) x *= c;
        return push(std::move(y), needs_grad(a), [a, c](Tape& t) {
            if (!t.needs_grad(a)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& da = t.gradref(a);
            for (size_t i = 0; i < dy.size(); ++i) da.v[i] += c * dy.v[i];
        });
    }

    NodeId add_scalar(NodeId a, double c) {
        Mat y = val(a);
        for (double& x : y.v) x += c;
        return push(std::move(y), needs_grad(a), [a](Tape& t) {
            if (t.needs_grad(a)) axpy(t.gradref(a), t.gradref(t.current_));
        });
    }

    NodeId exp_elem(NodeId a) {
        Mat y = val(a);
        for (double& x : y.v) x = std::exp(x);
        return push(std::move(y), needs_grad(a), [a](Tape& t) {
            if (!t.needs_grad(a)) return;
            NodeId y = t.current_;
            const Mat& dy = t.gradref(y);
            const Mat& Y = t.val(y);
            Mat& da = t.gradref(a);
            for (size_t i = 0; i < dy.size(); ++i) da.v[i] += Y.v[i] * dy.v[i];
        });
    }

    // Hard clamp with a straight-through backward: the raw value keeps its
    // gradient even when saturated, so the boundary is not absorbing under
    // noisy updates.
    NodeId clamp(NodeId a, double lo, double hi) {
        Mat y = val(a);
        for (double& x : y.v) x = std::min(std::max(x, lo), hi);
        return push(std::move(y), needs_grad(a), [a](Tape& t) {
            if (!t.needs_grad(a)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& da = t.gradref(a);
            for (size_t i = 0; i < dy.size(); ++i) da.v[i] += dy.v[i];
        });
    }

    NodeId concat_cols(NodeId a, NodeId b) {
        const Mat& A = val(a);
        const Mat& B = val(b);
        if (A.rows != B.rows) throw DimError("concat_cols: row mismatch");
        Mat y(A.rows, A.cols + B.cols);
        for (int i = 0; i < A.rows; ++i) {
            double* dst = &y(i, 0);
            std::copy(&A(i, 0), &A(i, 0) + A.cols, dst);
            std::copy(&B(i, 0), &B(i, 0) + B.cols, dst + A.cols);
        }
        const int ca = A.cols;
        return push(std::move(y), needs_grad(a) || needs_grad(b), [a, b, ca](Tape& t) {
            const Mat& dy = t.gradref(t.current_);
            if (t.needs_grad(a)) {
                Mat& da = t.gradref(a);
                for (int i = 0; i < da.rows; ++i)
                    for (int j = 0; j < da.cols; ++j) da(i, j) += dy(i, j);
            }
            if (t.needs_grad(b)) {
                Mat& db = t.gradref(b);
                for (int i = 0; i < db.rows; ++i)
                    for (int j = 0; j < db.cols; ++j) db(i, j) += dy(i, j + ca);
            }
        });
    }

    NodeId slice_cols(NodeId a, int c0, int c1) {
        const Mat& A = val(a);
        if (c0 < 0 || c1 > A.cols || c0 >= c1) throw DimError("slice_cols: bad range");
        Mat y(A.rows, c1 - c0);
        for (int i = 0; i < A.rows; ++i)
            std::copy(&A(i, c0), &A(i, c0) + (c1 - c0), &y(i, 0));
        return push(std::move(y), needs_grad(a), [a, c0](Tape& t) {
            if (!t.needs_grad(a)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& da = t.gradref(a);
            for (int i = 0; i < dy.rows; ++i)
                for (int j = 0; j < dy.cols; ++j) da(i, j + c0) += dy(i, j);
        });
    }

    // Each row repeated k consecutive times: (r, c) -> (r*k, c).
    NodeId repeat_rows(NodeId a, int k) {
        const Mat& A = val(a);
        Mat y(A.rows * k, A.cols);
        for (int i = 0; i < A.rows; ++i)
            for (int t = 0; t < k; ++t)
                std::copy(&A(i, 0), &A(i, 0) + A.cols, &y(i * k + t, 0));
        return push(std::move(y), needs_grad(a), [a, k](Tape& t) {
            if (!t.needs_grad(a)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& da = t.gradref(a);
            for (int i = 0; i < da.rows; ++i)
                for (int rep = 0; rep < k; ++rep) {
                    const double* src = &dy(i * k + rep, 0);
                    double* dst = &da(i, 0);
                    for (int j = 0; j < da.cols; ++j) dst[j] += src[j];
                }
        });
    }

    // Whole block repeated k times: (r, c) -> (k*r, c).
    NodeId tile_rows(NodeId a, int k) {
        const Mat& A = val(a);
        Mat y(A.rows * k, A.cols);
        for (int t = 0; t < k; ++t)
            std::copy(A.v.begin(), A.v.end(), y.v.begin() + static_cast<size_t>(t) * A.size());
        return push(std::move(y), needs_grad(a), [a, k](Tape& t) {
            if (!t.needs_grad(a)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& da = t.gradref(a);
            for (int rep = 0; rep < k; ++rep)
                for (size_t i = 0; i < da.size(); ++i)
                    da.v[i] += dy.v[rep * da.size() + i];
        });
    }

    // Row-major reinterpretation; element count must match.
    NodeId reshape(NodeId a, int r, int c) {
        const Mat& A = val(a);
        if (static_cast<size_t>(r) * c != A.size()) throw DimError("reshape: element count mismatch");
        Mat y(r, c);
        y.v = A.v;
        return push(std::move(y), needs_grad(a), [a](Tape& t) {
            if (t.needs_grad(a)) {
                const Mat& dy = t.gradref(t.current_);
                Mat& da = t.gradref(a);
                for (size_t i = 0; i < dy.size(); ++i) da.v[i] += dy.v[i];
            }
        });
    }

    // y_i = sum_j w_j X_ij, output (rows, 1).
    NodeId row_weighted_sum(NodeId x, std::vector<double> w) {
        const Mat& X = val(x);
        if (static_cast<int>(w.size()) != X.cols) throw DimError("row_weighted_sum: weight length");
        Mat y(X.rows, 1);
        for (int i = 0; i < X.rows; ++i) {
            double acc = 0.0;
            const double* row = &X(i, 0);
            for (int j = 0; j < X.cols; ++j) acc += w[j] * row[j];
            y.v[i] = acc;
        }
        auto wp = std::make_shared<std::vector<double>>(std::move(w));
        return push(std::move(y), needs_grad(x), [x, wp](Tape& t) {
            if (!t.needs_grad(x)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& dx = t.gradref(x);
            const auto& w = *wp;
            for (int i = 0; i < dx.rows; ++i) {
                const double g = dy.v[i];
                double* row = &dx(i, 0);
                for (int j = 0; j < dx.cols; ++j) row[j] += g * w[j];
            }
        });
    }

    NodeId row_sum(NodeId x) { return row_weighted_sum(x, std::vector<double>(val(x).cols, 1.0)); }

    // Mean over groups of k consecutive rows: (r, c) -> (r/k, c).
    NodeId segment_mean_rows(NodeId x, int k) {
        const Mat& X = val(x);
        if (X.rows % k != 0) throw DimError("segment_mean_rows: rows not divisible");
        Mat y(X.rows / k, X.cols);
        const double inv = 1.0 / k;
        for (int i = 0; i < y.rows; ++i)
            for (int t = 0; t < k; ++t) {
                const double* src = &X(i * k + t, 0);
                double* dst = &y(i, 0);
                for (int j = 0; j < X.cols; ++j) dst[j] += inv * src[j];
            }
        return push(std::move(y), needs_grad(x), [x, k](Tape& t) {
            if (!t.needs_grad(x)) return;
            const Mat& dy = t.gradref(t.current_);
            Mat& dx = t.gradref(x);
            const double inv = 1.0 / k;
            for (int i = 0; i < dy.rows; ++i)
                for (int rep = 0; rep < k; ++rep)
                    for (int j = 0; j < dy.cols; ++j) dx(i * k + rep, j) += inv * dy(i, j);
        });
    }

    NodeId mean_all(NodeId x) {
        const Mat& X = val(x);
        double acc = 0.0;
        for (double v : X.v) acc += v;
        Mat y(1, 1);
        y.v[0] = acc / static_cast<double>(X.size());
        return push(std::move(y), needs_grad(x), [x](Tape& t) {
            if (!t.needs_grad(x)) return;
            Mat& dx = t.gradref(x);
            const double g = t.gradref(t.current_).v[0] / static_cast<double>(dx.size());
            for (double& v : dx.v) v += g;
        });
    }

    NodeId sum_all(NodeId x) {
        const Mat& X = val(x);
        double acc = 0.0;
        for (double v : X.v) acc += v;
        Mat y(1, 1);
        y.v[0] = acc;
        return push(std::move(y), needs_grad(x), [x](Tape& t) {
            if (!t.needs_grad(x)) return;
            Mat& dx = t.gradref(x);
            const double g = t.gradref(t.current_).v[0];
            for (double& v : dx.v) v += g;
        });
    }

    // ---- access / backward ----

    const Mat& val(NodeId id) const { return nodes_[id].val; }
    bool needs_grad(NodeId id) const { return nodes_[id].requires_grad; }

    Mat& gradref(NodeId id) {
        Node& n = nodes_[id];
        if (n.grad.empty()) n.grad = Mat(n.val.rows, n.val.cols);
        return n.grad;
    }

    // Reverse sweep from a scalar loss node; visits each node exactly once.
    // Parameter-leaf gradients are accumulated into `sink` when given.
    void backward(NodeId loss, ParamStore* sink = nullptr) {
        if (val(loss).size() != 1)
            throw ContractError("backward: loss node must be scalar");
        gradref(loss).v[0] = 1.0;
        for (NodeId id = loss; id >= 0; --id) {
            Node& n = nodes_[id];
            if (!n.requires_grad || !n.back || n.grad.empty()) continue;
            current_ = id;
            n.back(*this);
        }
        if (sink) {
            for (const auto& b : bindings_) {
                const Node& n = nodes_[b.node];
                if (n.grad.empty()) continue;
                for (size_t i = 0; i < b.len; ++i) sink->grads[b.offset + i] += n.grad.v[i];
            }
        }
    }

    size_t node_count() const { return nodes_.size(); }

    void clear() {
        nodes_.clear();
        bindings_.clear();
    }

private:
    struct Binding {
        NodeId node;
        size_t offset;
        size_t len;
    };

    static void axpy(Mat& y, const Mat& x) {
        for (size_t i = 0; i < y.size(); ++i) y.v[i] += x.v[i];
    }

    NodeId push(Mat v, bool rg, std::function<void(Tape&)> back) {
        nodes_.push_back(Node{std::move(v), Mat(), rg, std::move(back)});
        return static_cast<NodeId>(nodes_.size()) - 1;
    }

    std::vector<Node> nodes_;
    std::vector<Binding> bindings_;
    NodeId current_ = -1;
};

// Single-vector dense layer: activation(W x + b). W is (out, in); x and the
// result are column vectors. Pass b with size 0 for a bias-free layer.
inline Mat forward_dense(const Mat& W, const Mat& b, const Mat& x, Activation a) {
    if (W.cols != static_cast<int>(x.size()))
        throw DimError("forward_dense: weight shape (" + std::to_string(W.rows) + "," +
                       std::to_string(W.cols) + ") does not match input length " +
                       std::to_string(x.size()));
    if (!b.empty() && static_cast<int>(b.size()) != W.rows)
        throw DimError("forward_dense: bias length mismatch");
    Mat y(W.rows, 1);
    for (int i = 0; i < W.rows; ++i) {
        double acc = b.empty() ? 0.0 : b.v[i];
        const double* row = &W(i, 0);
        for (int j = 0; j < W.cols; ++j) acc += row[j] * x.v[j];
        y.v[i] = act_apply(a, acc);
    }
    return y;
}

} // namespace vano
