#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

#include "crossdiff/error.hpp"

extern "C" void dgbsv_(const int* n, const int* kl, const int* ku, const int* nrhs, double* ab, const int* ldab,
                       int* ipiv, double* b, const int* ldb, int* info);

namespace crossdiff {

/// Square band matrix in LAPACK general-band storage, solved by LU with
/// partial pivoting (dgbsv). kl sub-diagonals, ku super-diagonals.
class BandedMatrix {
public:
    BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(ldab_ * n, 0.0) {}

    std::size_t size() const { return n_; }
    std::size_t lower_bandwidth() const { return kl_; }
    std::size_t upper_bandwidth() const { return ku_; }

    bool in_band(std::size_t row, std::size_t col) const {
        return row < n_ && col < n_ && row <= col + kl_ && col <= row + ku_;
    }

    void add(std::size_t row, std::size_t col, double v) {
        assert(in_band(row, col));
        ab_[slot(row, col)] += v;
    }

    double operator()(std::size_t row, std::size_t col) const { return in_band(row, col) ? ab_[slot(row, col)] : 0.0; }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t lo = j > ku_ ? j - ku_ : 0;
            const std::size_t hi = std::min(n_ - 1, j + kl_);
            for (std::size_t i = lo; i <= hi; ++i) y[i] += ab_[slot(i, j)] * x[j];
        }
        return y;
    }

    /// Solves A x = rhs. The matrix itself is left untouched.
    std::vector<double> solve(std::vector<double> rhs) const {
        if (rhs.size() != n_) throw InvalidInput("rhs size does not match banded matrix");
        std::vector<double> work = ab_;
        std::vector<int> ipiv(n_);
        const int n = static_cast<int>(n_);
        const int kl = static_cast<int>(kl_);
        const int ku = static_cast<int>(ku_);
        const int ldab = static_cast<int>(ldab_);
        const int nrhs = 1;
        int info = 0;
        dgbsv_(&n, &kl, &ku, &nrhs, work.data(), &ldab, ipiv.data(), rhs.data(), &n, &info);
        if (info > 0) throw NonConvergence("singular linear system at pivot " + std::to_string(info));
        if (info < 0) throw InvalidInput("dgbsv rejected argument " + std::to_string(-info));
        return rhs;
    }

private:
    std::size_t slot(std::size_t row, std::size_t col) const { return (kl_ + ku_ + row - col) + col * ldab_; }

    std::size_t n_, kl_, ku_, ldab_;
    std::vector<double> ab_;
};

}  // namespace crossdiff
