#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace rsb {

/// Square CSR matrix. Column indices are strictly increasing inside every row.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(int n, std::vector<int> row_offsets, std::vector<int> column_indices, std::vector<double> values);

    struct Triplet {
        int row;
        int col;
        double value;
    };
    /// Duplicates are summed.
    static CsrMatrix from_triplets(int n, std::vector<Triplet> triplets);
    static CsrMatrix identity(int n);
    /// Pattern given as per-row sorted column lists, values zero.
    static CsrMatrix from_pattern(const std::vector<std::vector<int>>& rows);

    int rows() const noexcept { return n_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    std::span<const int> row_offsets() const noexcept { return row_offsets_; }
    std::span<const int> column_indices() const noexcept { return column_indices_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    /// Position of (row, col) in the value array, or -1 when outside the pattern.
    int find(int row, int col) const;
    double at(int row, int col) const;
    /// Adds into an existing pattern entry; throws when (row, col) is not stored.
    void add(int row, int col, double value);

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;

    CsrMatrix transpose() const;
    std::vector<double> row_sums() const;
    double frobenius_norm() const;
    bool same_pattern(const CsrMatrix& other) const noexcept;

    void validate() const;

private:
    int n_ = 0;
    std::vector<int> row_offsets_{0};
    std::vector<int> column_indices_;
    std::vector<double> values_;
};

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x);

/// alpha*A + beta*B over the union of the two patterns.
CsrMatrix add_scaled(const CsrMatrix& a, double alpha, const CsrMatrix& b, double beta);

/// Max |A_ij - A_ji| relative to max |A_ij|.
double symmetry_defect(const CsrMatrix& a);

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a);

class Preconditioner {
public:
    virtual ~Preconditioner() = default;
    /// out = P^{-1} in
    virtual void apply(std::span<const double> in, std::span<double> out) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
public:
    void apply(std::span<const double> in, std::span<double> out) const override;
};

/// Incomplete LU with zero fill: L (unit diagonal, implied) and U stored together on the
/// pattern of the input matrix.
class Ilu0Preconditioner final : public Preconditioner {
public:
    explicit Ilu0Preconditioner(const CsrMatrix& a);

    void apply(std::span<const double> in, std::span<double> out) const override;
    const CsrMatrix& factors() const noexcept { return lu_; }

private:
    CsrMatrix lu_;
    std::vector<int> diagonal_;
};

Ilu0Preconditioner ilu0_factor(const CsrMatrix& a);

struct GmresSettings {
    double rel_tol = 1e-10;
    int restart = 50;
    int max_iters = 1000;
};

struct GmresResult {
    std::vector<double> x;
    int iterations = 0;
    double residual = 0.0; // true ||b - Ax|| / ||b||
    bool converged = false;
    std::vector<double> residual_history; // Arnoldi estimates, one per inner step
};

/// Right-preconditioned restarted GMRES with Givens rotations. `initial_guess` may be
/// empty (zero start). Budget exhaustion is reported through `converged`, not thrown.
GmresResult gmres(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                  const GmresSettings& settings, std::span<const double> initial_guess = {});

} // namespace rsb
