#include "concurrence/tensor.hpp"

#include <cstring>

namespace concurrence {

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool accumulate) {
    if (!accumulate)
        std::memset(c, 0, sizeof(double) * static_cast<std::size_t>(m) * n);
    int i = 0;
    // 4-row blocks share each streamed row of B
    for (; i + 4 <= m; i += 4) {
        const double* a0 = a + static_cast<std::size_t>(i) * k;
        const double* a1 = a0 + k;
        const double* a2 = a1 + k;
        const double* a3 = a2 + k;
        double* c0 = c + static_cast<std::size_t>(i) * n;
        double* c1 = c0 + n;
        double* c2 = c1 + n;
        double* c3 = c2 + n;
        for (int kk = 0; kk < k; ++kk) {
            const double v0 = a0[kk], v1 = a1[kk], v2 = a2[kk], v3 = a3[kk];
            const double* bk = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) {
                c0[j] += v0 * bk[j];
                c1[j] += v1 * bk[j];
                c2[j] += v2 * bk[j];
                c3[j] += v3 * bk[j];
            }
        }
    }
    for (; i < m; ++i) {
        const double* ai = a + static_cast<std::size_t>(i) * k;
        double* ci = c + static_cast<std::size_t>(i) * n;
        for (int kk = 0; kk < k; ++kk) {
            const double v = ai[kk];
            if (v == 0.0) continue;
            const double* bk = b + static_cast<std::size_t>(kk) * n;
            for (int j = 0; j < n; ++j) ci[j] += v * bk[j];
        }
    }
}

void matmul_at_b_acc(const double* a, const double* b, double* c, int k, int m, int n) {
    for (int kk = 0; kk < k; ++kk) {
        const double* arow = a + static_cast<std::size_t>(kk) * m;
        const double* brow = b + static_cast<std::size_t>(kk) * n;
        for (int i = 0; i < m; ++i) {
            const double v = arow[i];
            if (v == 0.0) continue;  // pays off behind relu/dropout
            double* ci = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) ci[j] += v * brow[j];
        }
    }
}

}  // namespace concurrence
