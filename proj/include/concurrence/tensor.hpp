#pragma once

#include <cstddef>
#include <vector>

namespace concurrence {

/// Dense (batch x channels x length) array of doubles, row-major with length
/// fastest. The only tensor shape the engine needs.
struct Tensor3 {
    int batch = 0;
    int channels = 0;
    int length = 0;
    std::vector<double> v;

    Tensor3() = default;
    Tensor3(int b, int c, int l)
        : batch(b), channels(c), length(l),
          v(static_cast<std::size_t>(b) * c * l, 0.0) {}

    double& operator()(int b, int c, int t) {
        return v[(static_cast<std::size_t>(b) * channels + c) * length + t];
    }
    double operator()(int b, int c, int t) const {
        return v[(static_cast<std::size_t>(b) * channels + c) * length + t];
    }

    double* row(int b, int c) {
        return v.data() + (static_cast<std::size_t>(b) * channels + c) * length;
    }
    const double* row(int b, int c) const {
        return v.data() + (static_cast<std::size_t>(b) * channels + c) * length;
    }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor3& o) const {
        return batch == o.batch && channels == o.channels && length == o.length;
    }
};

/// C[m x n] (+)= A[m x k] * B[k x n], all row-major. Tuned for tall A and a
/// B small enough to stay cache-resident.
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate = false);

/// C[m x n] += A^T * B with A[k x m], B[k x n], all row-major. C must be
/// small enough to stay cache-resident; zero rows of A are skipped.
void matmul_at_b_acc(const double* a, const double* b, double* c, int k, int m, int n);

}  // namespace concurrence
