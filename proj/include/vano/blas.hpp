#pragma once

#include <cstdlib>
#include <string>

#include "vano/mat.hpp"

#ifdef VANO_HAVE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

#ifdef __GLIBC__
#include <malloc.h>
#endif

namespace vano {

// Large step temporaries are allocated and freed every iteration; keeping
// them on the heap instead of per-call mmap regions roughly halves step time.
inline void tune_allocator() {
#ifdef __GLIBC__
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

namespace detail {
inline int& thread_count() {
    static int n = 1;
    return n;
}
} // namespace detail

// Worker-thread cap. Resolution order: explicit set_threads() call,
// VANO_THREADS env var, default 1. VANO_DETERMINISTIC=1 forces 1.
inline void set_threads(int n) {
    if (n < 1) n = 1;
    const char* det = std::getenv("VANO_DETERMINISTIC");
    if (det && std::string(det) == "1") n = 1;
    detail::thread_count() = n;
#ifdef VANO_HAVE_CBLAS
    openblas_set_num_threads(n);
#endif
}

inline int threads() { return detail::thread_count(); }

inline void init_threads_from_env() {
    tune_allocator();
    int n = 1;
    if (const char* env = std::getenv("VANO_THREADS")) n = std::atoi(env);
    set_threads(n);
}

// C = alpha * op(A) * op(B) + beta * C, row-major.
inline void gemm(const Mat& A, bool ta, const Mat& B, bool tb, Mat& C, double alpha = 1.0,
                 double beta = 0.0) {
    const int M = ta ? A.cols : A.rows;
    const int K = ta ? A.rows : A.cols;
    const int Kb = tb ? B.cols : B.rows;
    const int N = tb ? B.rows : B.cols;
    if (K != Kb) throw DimError("gemm: inner dimensions disagree");
    if (C.rows != M || C.cols != N) {
        if (beta != 0.0) throw DimError("gemm: output shape mismatch with beta != 0");
        C = Mat(M, N);
    }
#ifdef VANO_HAVE_CBLAS
    cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans, M,
                N, K, alpha, A.data(), A.cols, B.data(), B.cols, beta, C.data(), C.cols);
#else
    // Fallback triple loop; adequate for tests, not for training throughput.
    auto at = [&](int i, int k) { return ta ? A(k, i) : A(i, k); };
    auto bt = [&](int k, int j) { return tb ? B(j, k) : B(k, j); };
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < N; ++j) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) acc += at(i, k) * bt(k, j);
            C(i, j) = alpha * acc + beta * C(i, j);
        }
    }
#endif
}

} // namespace vano
