#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace propneat {

// Dense row-major matrix of doubles. Column vectors are n x 1 matrices.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0.0) {
        assert(rows >= 0 && cols >= 0);
    }

    static Matrix zeros(int rows, int cols) { return Matrix(rows, cols); }
    static Matrix ones(int rows, int cols) {
        Matrix m(rows, cols);
        for (auto& v : m.data_) v = 1.0;
        return m;
    }
    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix column(const std::vector<double>& values) {
        Matrix m(static_cast<int>(values.size()), 1);
        m.data_ = values;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b); // DimensionMismatch
Matrix transpose(const Matrix& a);
Matrix add_bias(const Matrix& x, const Matrix& bias); // bias r x 1, broadcast over columns
Matrix vconcat(const std::vector<Matrix>& parts);     // stack rows, argument order
Matrix relu(const Matrix& x);
Matrix sigmoid(const Matrix& x);

// Mean binary cross entropy with probabilities clamped to [eps, 1-eps].
inline constexpr double kBceEpsilon = 1e-7;
double bce_loss(const Matrix& p, const Matrix& y); // DimensionMismatch

// Reverse-mode tape over the primitives above. Values are recorded as the
// graph is built; backward() fills gradients for every node, walking the
// record in reverse. One tape per training session.
class Tape {
public:
    int parameter(const Matrix& value);
    int constant(const Matrix& value);
    int matmul(int a, int b);
    int add_bias(int x, int bias);
    int concat(const std::vector<int>& parts); // vertical
    int relu(int x);
    int sigmoid(int x);
    int bce_loss(int p, const Matrix& targets);

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    // Replay support: overwrite a leaf value (same shape) and re-run the
    // recorded computation in place. No allocations after the first pass.
    void set_value(int id, const Matrix& v);
    void recompute();

    // `loss` must be a 1x1 node.
    void backward(int loss);

private:
    enum class Op { leaf, matmul, add_bias, concat, relu, sigmoid, bce };
    struct Node {
        Op op = Op::leaf;
        std::vector<int> inputs;
        Matrix value;
        Matrix grad;
        Matrix targets; // bce only
    };
    int push(Node n);
    std::vector<Node> nodes_;
};

struct AdadeltaConfig {
    double rho = 0.9;
    double epsilon = 1e-6;
};

struct AdadeltaState {
    Matrix acc_grad_sq;   // E[g^2]
    Matrix acc_update_sq; // E[dx^2]
    AdadeltaState() = default;
    AdadeltaState(int rows, int cols) : acc_grad_sq(rows, cols), acc_update_sq(rows, cols) {}
};

// Accumulate E[g^2], apply the update, accumulate E[dx^2], then project onto
// the mask so masked positions are exactly zero.
void adadelta_step(Matrix& params, const Matrix& grads, const Matrix& mask,
                   AdadeltaState& state, const AdadeltaConfig& cfg);

// Scalar twin of adadelta_step, in the same expression order, for per-gene
// optimizer state in the naive trainer.
struct AdadeltaScalar {
    double acc_grad_sq = 0.0;
    double acc_update_sq = 0.0;
    double step(double grad, const AdadeltaConfig& cfg);
};

} // namespace propneat
