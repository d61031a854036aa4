// Dense integer matrices over arbitrary-precision integers and the Smith
// normal form machinery used for all cokernel and lattice computations.
#ifndef CANTORFLOW_INTMATRIX_HPP
#define CANTORFLOW_INTMATRIX_HPP

#include <optional>
#include <vector>

#include "cantorflow/rational.hpp"

namespace cantorflow {

class IntMatrix {
public:
    IntMatrix() : rows_(0), cols_(0) {}
    IntMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {}

    static IntMatrix identity(int n);
    static IntMatrix from_rows(const std::vector<std::vector<Int>>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    Int& at(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    const Int& at(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    IntMatrix operator*(const IntMatrix& other) const;
    std::vector<Int> apply(const std::vector<Int>& v) const;
    IntMatrix transposed() const;
    bool operator==(const IntMatrix& other) const;

    void swap_rows(int i, int j);
    void swap_cols(int i, int j);
    void add_row(int dst, int src, const Int& factor);   // row dst += factor * row src
    void add_col(int dst, int src, const Int& factor);
    void negate_row(int i);
    void negate_col(int j);

    // Fraction-free determinant (Bareiss). Square matrices only.
    Int determinant() const;

    std::string to_string() const;

private:
    int rows_, cols_;
    std::vector<Int> a_;
};

// U * A * V = D with U, V unimodular and D diagonal with d_1 | d_2 | ... .
struct SNFDecomposition {
    IntMatrix u, d, v;
    int rank = 0;
    // Diagonal of D padded with zeros to min(rows, cols).
    std::vector<Int> diagonal;
    // Diagonal padded with zeros to `rows` slots; the cokernel of A reads off
    // as  ⊕ Z/d_i  with d_i = 0 contributing a free Z summand.
    std::vector<Int> invariant_factors;
    int free_rank() const { return static_cast<int>(invariant_factors.size()) - rank; }
};

SNFDecomposition smith_normal_form(const IntMatrix& a);

// Solves A x = b exactly; nullopt if no integer solution exists.
std::optional<std::vector<Int>> solve_linear(const SNFDecomposition& snf, const std::vector<Int>& b);

inline bool in_image(const SNFDecomposition& snf, const std::vector<Int>& b) {
    return solve_linear(snf, b).has_value();
}

// Rank of the column lattice spanned jointly by the columns of A and B.
int joint_column_rank(const IntMatrix& a, const IntMatrix& b);

// True iff columns of A and B span the same subgroup of Z^rows.
bool same_column_lattice(const IntMatrix& a, const IntMatrix& b);

IntMatrix hstack(const IntMatrix& a, const IntMatrix& b);

} // namespace cantorflow

#endif
