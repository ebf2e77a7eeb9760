#include "rsb/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rsb/errors.hpp"

namespace rsb {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void check_size(std::size_t got, int expected, const char* what) {
    if (got != static_cast<std::size_t>(expected)) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << got << " vs " << expected << ")";
        throw std::invalid_argument(os.str());
    }
}

} // namespace

CsrMatrix::CsrMatrix(int n, std::vector<int> row_offsets, std::vector<int> column_indices, std::vector<double> values)
    : n_(n), row_offsets_(std::move(row_offsets)), column_indices_(std::move(column_indices)), values_(std::move(values)) {
    validate();
}

void CsrMatrix::validate() const {
    if (row_offsets_.size() != static_cast<std::size_t>(n_) + 1 || row_offsets_.front() != 0 ||
        static_cast<std::size_t>(row_offsets_.back()) != column_indices_.size() ||
        column_indices_.size() != values_.size()) {
        throw std::invalid_argument("inconsistent CSR arrays");
    }
    for (int i = 0; i < n_; ++i) {
        if (row_offsets_[i + 1] < row_offsets_[i]) {
            throw std::invalid_argument("CSR row offsets decrease");
        }
        for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            const int c = column_indices_[p];
            if (c < 0 || c >= n_ || (p > row_offsets_[i] && column_indices_[p - 1] >= c)) {
                throw std::invalid_argument("CSR column indices must be in range and strictly increasing");
            }
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(int n, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    std::vector<int> offsets(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    cols.reserve(triplets.size());
    vals.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size();) {
        const Triplet& t = triplets[i];
        if (t.row < 0 || t.row >= n || t.col < 0 || t.col >= n) {
            throw std::invalid_argument("triplet index out of range");
        }
        double v = 0.0;
        std::size_t j = i;
        while (j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col) {
            v += triplets[j].value;
            ++j;
        }
        cols.push_back(t.col);
        vals.push_back(v);
        ++offsets[t.row + 1];
        i = j;
    }
    for (int i = 0; i < n; ++i) {
        offsets[i + 1] += offsets[i];
    }
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(int n) {
    std::vector<int> offsets(n + 1);
    std::vector<int> cols(n);
    for (int i = 0; i <= n; ++i) {
        offsets[i] = i;
    }
    for (int i = 0; i < n; ++i) {
        cols[i] = i;
    }
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

CsrMatrix CsrMatrix::from_pattern(const std::vector<std::vector<int>>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<int> offsets(n + 1, 0);
    std::vector<int> cols;
    for (int i = 0; i < n; ++i) {
        offsets[i + 1] = offsets[i] + static_cast<int>(rows[i].size());
        cols.insert(cols.end(), rows[i].begin(), rows[i].end());
    }
    std::vector<double> vals(cols.size(), 0.0);
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

int CsrMatrix::find(int row, int col) const {
    const auto begin = column_indices_.begin() + row_offsets_[row];
    const auto end = column_indices_.begin() + row_offsets_[row + 1];
    const auto it = std::lower_bound(begin, end, col);
    if (it == end || *it != col) {
        return -1;
    }
    return static_cast<int>(it - column_indices_.begin());
}

double CsrMatrix::at(int row, int col) const {
    const int p = find(row, col);
    return p < 0 ? 0.0 : values_[p];
}

void CsrMatrix::add(int row, int col, double value) {
    const int p = find(row, col);
    if (p < 0) {
        throw std::out_of_range("entry outside the sparsity pattern");
    }
    values_[p] += value;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    check_size(x.size(), n_, "spmv input");
    check_size(y.size(), n_, "spmv output");
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            s += values_[p] * x[column_indices_[p]];
        }
        y[i] = s;
    }
}

std::vector<double> CsrMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

CsrMatrix CsrMatrix::transpose() const {
    std::vector<int> offsets(n_ + 1, 0);
    for (int c : column_indices_) {
        ++offsets[c + 1];
    }
    for (int i = 0; i < n_; ++i) {
        offsets[i + 1] += offsets[i];
    }
    std::vector<int> cursor(offsets.begin(), offsets.end() - 1);
    std::vector<int> cols(nnz());
    std::vector<double> vals(nnz());
    for (int i = 0; i < n_; ++i) {
        for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            const int q = cursor[column_indices_[p]]++;
            cols[q] = i;
            vals[q] = values_[p];
        }
    }
    return CsrMatrix(n_, std::move(offsets), std::move(cols), std::move(vals));
}

std::vector<double> CsrMatrix::row_sums() const {
    std::vector<double> s(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        for (int p = row_offsets_[i]; p < row_offsets_[i + 1]; ++p) {
            s[i] += values_[p];
        }
    }
    return s;
}

double CsrMatrix::frobenius_norm() const {
    double s = 0.0;
    for (double v : values_) {
        s += v * v;
    }
    return std::sqrt(s);
}

bool CsrMatrix::same_pattern(const CsrMatrix& other) const noexcept {
    return n_ == other.n_ && row_offsets_ == other.row_offsets_ && column_indices_ == other.column_indices_;
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> x) { return a.multiply(x); }

CsrMatrix add_scaled(const CsrMatrix& a, double alpha, const CsrMatrix& b, double beta) {
    if (a.rows() != b.rows()) {
        throw std::invalid_argument("add_scaled: dimension mismatch");
    }
    if (a.same_pattern(b)) {
        std::vector<double> vals(a.nnz());
        for (std::size_t p = 0; p < vals.size(); ++p) {
            vals[p] = alpha * a.values()[p] + beta * b.values()[p];
        }
        return CsrMatrix(a.rows(), {a.row_offsets().begin(), a.row_offsets().end()},
                         {a.column_indices().begin(), a.column_indices().end()}, std::move(vals));
    }
    const int n = a.rows();
    std::vector<int> offsets(n + 1, 0);
    std::vector<int> cols;
    std::vector<double> vals;
    for (int i = 0; i < n; ++i) {
        int p = a.row_offsets()[i];
        int q = b.row_offsets()[i];
        const int pe = a.row_offsets()[i + 1];
        const int qe = b.row_offsets()[i + 1];
        while (p < pe || q < qe) {
            const int ca = p < pe ? a.column_indices()[p] : n;
            const int cb = q < qe ? b.column_indices()[q] : n;
            if (ca == cb) {
                cols.push_back(ca);
                vals.push_back(alpha * a.values()[p++] + beta * b.values()[q++]);
            } else if (ca < cb) {
                cols.push_back(ca);
                vals.push_back(alpha * a.values()[p++]);
            } else {
                cols.push_back(cb);
                vals.push_back(beta * b.values()[q++]);
            }
        }
        offsets[i + 1] = static_cast<int>(cols.size());
    }
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

double symmetry_defect(const CsrMatrix& a) {
    double max_entry = 0.0;
    double max_defect = 0.0;
    for (int i = 0; i < a.rows(); ++i) {
        for (int p = a.row_offsets()[i]; p < a.row_offsets()[i + 1]; ++p) {
            const int j = a.column_indices()[p];
            max_entry = std::max(max_entry, std::abs(a.values()[p]));
            max_defect = std::max(max_defect, std::abs(a.values()[p] - a.at(j, i)));
        }
    }
    return max_entry > 0.0 ? max_defect / max_entry : 0.0;
}

void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& a) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << a.rows() << ' ' << a.rows() << ' ' << a.nnz() << '\n';
    out << std::setprecision(17);
    for (int i = 0; i < a.rows(); ++i) {
        for (int p = a.row_offsets()[i]; p < a.row_offsets()[i + 1]; ++p) {
            out << i + 1 << ' ' << a.column_indices()[p] + 1 << ' ' << a.values()[p] << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void IdentityPreconditioner::apply(std::span<const double> in, std::span<double> out) const {
    std::copy(in.begin(), in.end(), out.begin());
}

Ilu0Preconditioner::Ilu0Preconditioner(const CsrMatrix& a) : lu_(a), diagonal_(a.rows(), -1) {
    const int n = lu_.rows();
    const auto offsets = lu_.row_offsets();
    const auto cols = lu_.column_indices();
    auto vals = lu_.values();

    for (int i = 0; i < n; ++i) {
        diagonal_[i] = lu_.find(i, i);
        if (diagonal_[i] < 0) {
            throw SolverError("ILU(0): diagonal entry missing from pattern in row " + std::to_string(i));
        }
    }

    std::vector<int> position(n, -1);
    for (int i = 0; i < n; ++i) {
        for (int p = offsets[i]; p < offsets[i + 1]; ++p) {
            position[cols[p]] = p;
        }
        for (int p = offsets[i]; p < offsets[i + 1] && cols[p] < i; ++p) {
            const int k = cols[p];
            vals[p] /= vals[diagonal_[k]];
            const double lik = vals[p];
            for (int q = diagonal_[k] + 1; q < offsets[k + 1]; ++q) {
                const int target = position[cols[q]];
                if (target >= 0) {
                    vals[target] -= lik * vals[q];
                }
            }
        }
        for (int p = offsets[i]; p < offsets[i + 1]; ++p) {
            position[cols[p]] = -1;
        }
        if (!(std::abs(vals[diagonal_[i]]) >= 1e-300)) {
            throw SolverError("ILU(0): zero pivot in row " + std::to_string(i));
        }
    }
}

void Ilu0Preconditioner::apply(std::span<const double> in, std::span<double> out) const {
    const int n = lu_.rows();
    const auto offsets = lu_.row_offsets();
    const auto cols = lu_.column_indices();
    const auto vals = lu_.values();
    for (int i = 0; i < n; ++i) {
        double s = in[i];
        for (int p = offsets[i]; p < diagonal_[i]; ++p) {
            s -= vals[p] * out[cols[p]];
        }
        out[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = out[i];
        for (int p = diagonal_[i] + 1; p < offsets[i + 1]; ++p) {
            s -= vals[p] * out[cols[p]];
        }
        out[i] = s / vals[diagonal_[i]];
    }
}

Ilu0Preconditioner ilu0_factor(const CsrMatrix& a) { return Ilu0Preconditioner(a); }

GmresResult gmres(const CsrMatrix& a, std::span<const double> b, const Preconditioner& m,
                  const GmresSettings& settings, std::span<const double> initial_guess) {
    if (!(settings.rel_tol > 0.0) || settings.restart < 1) {
        throw std::invalid_argument("gmres: rel_tol must be positive and restart at least 1");
    }
    const int n = a.rows();
    check_size(b.size(), n, "gmres right-hand side");

    GmresResult result;
    result.x.assign(n, 0.0);
    if (!initial_guess.empty()) {
        check_size(initial_guess.size(), n, "gmres initial guess");
        std::copy(initial_guess.begin(), initial_guess.end(), result.x.begin());
    }

    const double b_norm = norm2(b);
    if (b_norm == 0.0) {
        std::fill(result.x.begin(), result.x.end(), 0.0);
        result.converged = true;
        return result;
    }

    std::vector<double> r(n);
    auto true_residual = [&]() {
        a.multiply(result.x, r);
        for (int i = 0; i < n; ++i) {
            r[i] = b[i] - r[i];
        }
        return norm2(r);
    };

    double beta = true_residual();
    result.residual = beta / b_norm;
    if (result.residual <= settings.rel_tol) {
        result.converged = true;
        return result;
    }

    const int m_dim = settings.restart;
    std::vector<std::vector<double>> basis(m_dim + 1, std::vector<double>(n));
    std::vector<std::vector<double>> h(m_dim + 1, std::vector<double>(m_dim, 0.0));
    std::vector<double> cs(m_dim), sn(m_dim), g(m_dim + 1);
    std::vector<double> z(n), w(n);

    while (result.iterations < settings.max_iters) {
        for (int i = 0; i < n; ++i) {
            basis[0][i] = r[i] / beta;
        }
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        int columns = 0;
        for (int j = 0; j < m_dim && result.iterations < settings.max_iters; ++j) {
            m.apply(basis[j], z);
            a.multiply(z, w);
            for (int i = 0; i <= j; ++i) {
                h[i][j] = dot(w, basis[i]);
                for (int q = 0; q < n; ++q) {
                    w[q] -= h[i][j] * basis[i][q];
                }
            }
            h[j + 1][j] = norm2(w);

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            const double denom = std::hypot(h[j][j], h[j + 1][j]);
            const double happy = h[j + 1][j];
            if (denom == 0.0) {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = h[j][j] / denom;
                sn[j] = happy / denom;
            }
            h[j][j] = cs[j] * h[j][j] + sn[j] * happy;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            ++result.iterations;
            columns = j + 1;
            const double estimate = std::abs(g[j + 1]) / b_norm;
            result.residual_history.push_back(estimate);
            if (estimate <= settings.rel_tol || happy <= 1e-300) {
                break;
            }
            for (int q = 0; q < n; ++q) {
                basis[j + 1][q] = w[q] / happy;
            }
        }

        std::vector<double> y(columns);
        for (int i = columns - 1; i >= 0; --i) {
            double s = g[i];
            for (int k = i + 1; k < columns; ++k) {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        std::fill(w.begin(), w.end(), 0.0);
        for (int k = 0; k < columns; ++k) {
            for (int q = 0; q < n; ++q) {
                w[q] += y[k] * basis[k][q];
            }
        }
        m.apply(w, z);
        for (int q = 0; q < n; ++q) {
            result.x[q] += z[q];
        }

        beta = true_residual();
        result.residual = beta / b_norm;
        if (result.residual <= settings.rel_tol) {
            result.converged = true;
            break;
        }
    }
    return result;
}

} // namespace rsb
