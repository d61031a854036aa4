#include "cantorflow/intmatrix.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace cantorflow {

IntMatrix IntMatrix::identity(int n) {
    IntMatrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<Int>>& rows) {
    int r = static_cast<int>(rows.size());
    int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
    IntMatrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(rows[i].size()) != c) throw std::invalid_argument("ragged rows");
        for (int j = 0; j < c; ++j) m.at(i, j) = rows[i][j];
    }
    return m;
}

IntMatrix IntMatrix::operator*(const IntMatrix& other) const {
    if (cols_ != other.rows_) throw std::invalid_argument("dimension mismatch in matrix product");
    IntMatrix out(rows_, other.cols_);
    for (int i = 0; i < rows_; ++i)
        for (int k = 0; k < cols_; ++k) {
            const Int& aik = at(i, k);
            if (aik == 0) continue;
            for (int j = 0; j < other.cols_; ++j) out.at(i, j) += aik * other.at(k, j);
        }
    return out;
}

std::vector<Int> IntMatrix::apply(const std::vector<Int>& v) const {
    if (static_cast<int>(v.size()) != cols_) throw std::invalid_argument("dimension mismatch in matrix apply");
    std::vector<Int> out(rows_);
    for (int i = 0; i < rows_; ++i) {
        Int s = 0;
        for (int j = 0; j < cols_; ++j)
            if (at(i, j) != 0) s += at(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

IntMatrix IntMatrix::transposed() const {
    IntMatrix out(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) out.at(j, i) = at(i, j);
    return out;
}

bool IntMatrix::operator==(const IntMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && a_ == other.a_;
}

void IntMatrix::swap_rows(int i, int j) {
    if (i == j) return;
    for (int k = 0; k < cols_; ++k) std::swap(at(i, k), at(j, k));
}

void IntMatrix::swap_cols(int i, int j) {
    if (i == j) return;
    for (int k = 0; k < rows_; ++k) std::swap(at(k, i), at(k, j));
}

void IntMatrix::add_row(int dst, int src, const Int& factor) {
    if (factor == 0) return;
    for (int k = 0; k < cols_; ++k) at(dst, k) += factor * at(src, k);
}

void IntMatrix::add_col(int dst, int src, const Int& factor) {
    if (factor == 0) return;
    for (int k = 0; k < rows_; ++k) at(k, dst) += factor * at(k, src);
}

void IntMatrix::negate_row(int i) {
    for (int k = 0; k < cols_; ++k) at(i, k) = -at(i, k);
}

void IntMatrix::negate_col(int j) {
    for (int k = 0; k < rows_; ++k) at(k, j) = -at(k, j);
}

Int IntMatrix::determinant() const {
    if (rows_ != cols_) throw std::invalid_argument("determinant of non-square matrix");
    int n = rows_;
    if (n == 0) return 1;
    IntMatrix m(*this);
    Int sign = 1, prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (m.at(k, k) == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i)
                if (m.at(i, k) != 0) { p = i; break; }
            if (p < 0) return 0;
            m.swap_rows(k, p);
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i)
            for (int j = k + 1; j < n; ++j) {
                Int t = m.at(i, j) * m.at(k, k) - m.at(i, k) * m.at(k, j);
                m.at(i, j) = t / prev;   // Bareiss: division is exact
            }
        prev = m.at(k, k);
    }
    return sign * m.at(n - 1, n - 1);
}

std::string IntMatrix::to_string() const {
    std::ostringstream os;
    for (int i = 0; i < rows_; ++i) {
        os << (i == 0 ? "[" : " ");
        for (int j = 0; j < cols_; ++j) os << at(i, j).str() << (j + 1 < cols_ ? " " : "");
        os << (i + 1 < rows_ ? ";\n" : "]");
    }
    return os.str();
}

namespace {

Int abs_int(const Int& x) { return x < 0 ? Int(-x) : x; }

// Position of the smallest-magnitude nonzero entry of D in the block
// [s.., s..); exits immediately on a unit, which keeps the elimination
// near-quadratic on the sparse +-1 matrices the cokernel computations use.
bool find_pivot(const IntMatrix& d, int s, int& pi, int& pj) {
    bool found = false;
    Int best = 0;
    for (int i = s; i < d.rows(); ++i)
        for (int j = s; j < d.cols(); ++j) {
            const Int& x = d.at(i, j);
            if (x == 0) continue;
            if (x == 1 || x == -1) {
                pi = i;
                pj = j;
                return true;
            }
            Int a = abs_int(x);
            if (!found || a < best) {
                found = true;
                best = a;
                pi = i;
                pj = j;
            }
        }
    return found;
}

} // namespace

SNFDecomposition smith_normal_form(const IntMatrix& a) {
    SNFDecomposition out;
    out.d = a;
    out.u = IntMatrix::identity(a.rows());
    out.v = IntMatrix::identity(a.cols());
    IntMatrix& d = out.d;
    IntMatrix& u = out.u;
    IntMatrix& v = out.v;

    int nmin = std::min(a.rows(), a.cols());
    int s = 0;
    while (s < nmin) {
        int pi = s, pj = s;
        if (!find_pivot(d, s, pi, pj)) break;
        d.swap_rows(s, pi);
        u.swap_rows(s, pi);
        d.swap_cols(s, pj);
        v.swap_cols(s, pj);

        bool clean = false;
        while (!clean) {
            clean = true;
            for (int i = s + 1; i < d.rows(); ++i) {
                if (d.at(i, s) == 0) continue;
                Int q = d.at(i, s) / d.at(s, s);
                d.add_row(i, s, -q);
                u.add_row(i, s, -q);
                if (d.at(i, s) != 0) {   // remainder smaller than pivot; promote it
                    d.swap_rows(s, i);
                    u.swap_rows(s, i);
                    clean = false;
                }
            }
            for (int j = s + 1; j < d.cols(); ++j) {
                if (d.at(s, j) == 0) continue;
                Int q = d.at(s, j) / d.at(s, s);
                d.add_col(j, s, -q);
                v.add_col(j, s, -q);
                if (d.at(s, j) != 0) {
                    d.swap_cols(s, j);
                    v.swap_cols(s, j);
                    clean = false;
                }
            }
        }

        // Divisibility: pivot must divide every remaining entry (trivially
        // true for unit pivots).
        bool divides = true;
        if (d.at(s, s) != 1 && d.at(s, s) != -1) {
            for (int i = s + 1; i < d.rows() && divides; ++i)
                for (int j = s + 1; j < d.cols() && divides; ++j)
                    if (d.at(i, j) % d.at(s, s) != 0) {
                        d.add_row(s, i, 1);
                        u.add_row(s, i, 1);
                        divides = false;
                    }
        }
        if (!divides) continue;   // re-eliminate with the enriched pivot row

        if (d.at(s, s) < 0) {
            d.negate_row(s);
            u.negate_row(s);
        }
        ++s;
    }
    out.rank = s;
    out.diagonal.assign(nmin, Int(0));
    for (int i = 0; i < s; ++i) out.diagonal[i] = d.at(i, i);
    out.invariant_factors.assign(a.rows(), Int(0));
    for (int i = 0; i < s && i < a.rows(); ++i) out.invariant_factors[i] = d.at(i, i);
    return out;
}

std::optional<std::vector<Int>> solve_linear(const SNFDecomposition& snf, const std::vector<Int>& b) {
    if (static_cast<int>(b.size()) != snf.u.cols())
        throw std::invalid_argument("dimension mismatch in solve_linear");
    std::vector<Int> c = snf.u.apply(b);
    std::vector<Int> y(snf.d.cols(), Int(0));
    for (int i = 0; i < snf.d.rows(); ++i) {
        if (i < snf.rank) {
            const Int& di = snf.d.at(i, i);
            if (c[i] % di != 0) return std::nullopt;
            y[i] = c[i] / di;
        } else if (c[i] != 0) {
            return std::nullopt;
        }
    }
    return snf.v.apply(y);
}

IntMatrix hstack(const IntMatrix& a, const IntMatrix& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    if (a.rows() != b.rows()) throw std::invalid_argument("hstack row mismatch");
    IntMatrix out(a.rows(), a.cols() + b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
        for (int j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
    }
    return out;
}

int joint_column_rank(const IntMatrix& a, const IntMatrix& b) {
    return smith_normal_form(hstack(a, b)).rank;
}

bool same_column_lattice(const IntMatrix& a, const IntMatrix& b) {
    if (!a.empty() && !b.empty() && a.rows() != b.rows()) return false;
    if (!b.empty()) {
        SNFDecomposition sa = smith_normal_form(a);
        for (int j = 0; j < b.cols(); ++j) {
            std::vector<Int> col(b.rows());
            for (int i = 0; i < b.rows(); ++i) col[i] = b.at(i, j);
            if (!in_image(sa, col)) return false;
        }
    }
    if (!a.empty()) {
        SNFDecomposition sb = smith_normal_form(b);
        for (int j = 0; j < a.cols(); ++j) {
            std::vector<Int> col(a.rows());
            for (int i = 0; i < a.rows(); ++i) col[i] = a.at(i, j);
            if (!in_image(sb, col)) return false;
        }
    }
    return true;
}

} // namespace cantorflow
