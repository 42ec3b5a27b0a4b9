#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "vano/errors.hpp"

namespace vano {

// Dense row-major matrix of doubles. Vectors are (n,1) or (1,n) as noted per use.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}
    Mat(int r, int c, double fill) : rows(r), cols(c), v(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    const double& operator()(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return v.size(); }
    bool empty() const { return v.empty(); }
    double* data() { return v.data(); }
    const double* data() const { return v.data(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline Mat col_vector(const std::vector<double>& x) {
    Mat m(static_cast<int>(x.size()), 1);
    m.v = x;
    return m;
}

inline void require_same_shape(const Mat& a, const Mat& b, const char* where) {
    if (!a.same_shape(b))
        throw DimError(std::string(where) + ": shape mismatch (" + std::to_string(a.rows) + "x" +
                       std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                       std::to_string(b.cols) + ")");
}

} // namespace vano
