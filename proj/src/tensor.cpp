#include "propneat/tensor.hpp"

#include <cmath>
#include <string>

#include "propneat/errors.hpp"

namespace propneat {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

} // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw DimensionMismatch("matmul " + shape_str(a) + " * " + shape_str(b));
    Matrix out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    for (int i = 0; i < n; ++i) {
        double* out_row = out.data() + static_cast<std::size_t>(i) * m;
        const double* a_row = a.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double aip = a_row[p];
            const double* b_row = b.data() + static_cast<std::size_t>(p) * m;
            for (int j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

Matrix add_bias(const Matrix& x, const Matrix& bias) {
    if (bias.cols() != 1 || bias.rows() != x.rows())
        throw DimensionMismatch("add_bias " + shape_str(x) + " + " + shape_str(bias));
    Matrix out = x;
    for (int i = 0; i < x.rows(); ++i) {
        const double b = bias(i, 0);
        for (int j = 0; j < x.cols(); ++j) out(i, j) += b;
    }
    return out;
}

Matrix vconcat(const std::vector<Matrix>& parts) {
    if (parts.empty()) throw DimensionMismatch("vconcat of empty sequence");
    const int cols = parts.front().cols();
    int rows = 0;
    for (const auto& p : parts) {
        if (p.cols() != cols) throw DimensionMismatch("vconcat column mismatch");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    int r = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < p.rows(); ++i)
            for (int j = 0; j < cols; ++j) out(r + i, j) = p(i, j);
        r += p.rows();
    }
    return out;
}

Matrix relu(const Matrix& x) {
    Matrix out = x;
    for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Matrix sigmoid(const Matrix& x) {
    Matrix out = x;
    for (auto& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

double bce_loss(const Matrix& p, const Matrix& y) {
    if (!p.same_shape(y))
        throw DimensionMismatch("bce_loss " + shape_str(p) + " vs " + shape_str(y));
    double total = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        double pi = p.values()[i];
        pi = pi < kBceEpsilon ? kBceEpsilon : (pi > 1.0 - kBceEpsilon ? 1.0 - kBceEpsilon : pi);
        const double yi = y.values()[i];
        total += -(yi * std::log(pi) + (1.0 - yi) * std::log(1.0 - pi));
    }
    return total / static_cast<double>(n);
}

int Tape::push(Node n) {
    if (nodes_.empty()) nodes_.reserve(64);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::parameter(const Matrix& value) {
    Node n;
    n.op = Op::leaf;
    n.value = value;
    return push(std::move(n));
}

int Tape::constant(const Matrix& value) { return parameter(value); }

int Tape::matmul(int a, int b) {
    Node n;
    n.op = Op::matmul;
    n.inputs = {a, b};
    n.value = propneat::matmul(value(a), value(b));
    return push(std::move(n));
}

int Tape::add_bias(int x, int bias) {
    Node n;
    n.op = Op::add_bias;
    n.inputs = {x, bias};
    n.value = propneat::add_bias(value(x), value(bias));
    return push(std::move(n));
}

int Tape::concat(const std::vector<int>& parts) {
    Node n;
    n.op = Op::concat;
    n.inputs = parts;
    std::vector<Matrix> values;
    values.reserve(parts.size());
    for (int p : parts) values.push_back(value(p));
    n.value = vconcat(values);
    return push(std::move(n));
}

int Tape::relu(int x) {
    Node n;
    n.op = Op::relu;
    n.inputs = {x};
    n.value = propneat::relu(value(x));
    return push(std::move(n));
}

int Tape::sigmoid(int x) {
    Node n;
    n.op = Op::sigmoid;
    n.inputs = {x};
    n.value = propneat::sigmoid(value(x));
    return push(std::move(n));
}

int Tape::bce_loss(int p, const Matrix& targets) {
    Node n;
    n.op = Op::bce;
    n.inputs = {p};
    n.targets = targets;
    Matrix v(1, 1);
    v(0, 0) = propneat::bce_loss(value(p), targets);
    n.value = v;
    return push(std::move(n));
}

void Tape::set_value(int id, const Matrix& v) {
    Node& n = nodes_.at(static_cast<std::size_t>(id));
    if (n.op != Op::leaf)
        throw DimensionMismatch("set_value targets a non-leaf tape node");
    if (!n.value.same_shape(v))
        throw DimensionMismatch("set_value shape mismatch");
    n.value = v;
}

void Tape::recompute() {
    for (auto& n : nodes_) {
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            const Matrix& a = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
            const Matrix& b = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
            std::fill(n.value.values().begin(), n.value.values().end(), 0.0);
            const int rows = a.rows(), k = a.cols(), m = b.cols();
            for (int i = 0; i < rows; ++i) {
                double* out_row = n.value.data() + static_cast<std::size_t>(i) * m;
                const double* a_row = a.data() + static_cast<std::size_t>(i) * k;
                for (int p = 0; p < k; ++p) {
                    const double aip = a_row[p];
                    const double* b_row = b.data() + static_cast<std::size_t>(p) * m;
                    for (int j = 0; j < m; ++j) out_row[j] += aip * b_row[j];
                }
            }
            break;
        }
        case Op::add_bias: {
            const Matrix& x = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
            const Matrix& bias = nodes_[static_cast<std::size_t>(n.inputs[1])].value;
            for (int i = 0; i < x.rows(); ++i) {
                const double b = bias(i, 0);
                for (int j = 0; j < x.cols(); ++j) n.value(i, j) = x(i, j) + b;
            }
            break;
        }
        case Op::concat: {
            int row = 0;
            for (int src : n.inputs) {
                const Matrix& part = nodes_[static_cast<std::size_t>(src)].value;
                for (int r = 0; r < part.rows(); ++r)
                    for (int c = 0; c < part.cols(); ++c) n.value(row + r, c) = part(r, c);
                row += part.rows();
            }
            break;
        }
        case Op::relu: {
            const Matrix& x = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double v = x.values()[i];
                n.value.values()[i] = v > 0.0 ? v : 0.0;
            }
            break;
        }
        case Op::sigmoid: {
            const Matrix& x = nodes_[static_cast<std::size_t>(n.inputs[0])].value;
            for (std::size_t i = 0; i < x.size(); ++i)
                n.value.values()[i] = 1.0 / (1.0 + std::exp(-x.values()[i]));
            break;
        }
        case Op::bce:
            n.value(0, 0) =
                propneat::bce_loss(nodes_[static_cast<std::size_t>(n.inputs[0])].value, n.targets);
            break;
        }
    }
}

void Tape::backward(int loss) {
    Node& last = nodes_.at(static_cast<std::size_t>(loss));
    if (last.value.rows() != 1 || last.value.cols() != 1)
        throw DimensionMismatch("backward requires a scalar loss node");
    for (auto& n : nodes_) {
        if (n.grad.same_shape(n.value))
            std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
        else
            n.grad = Matrix(n.value.rows(), n.value.cols());
    }
    last.grad(0, 0) = 1.0;

    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Matrix& g = n.grad;
        switch (n.op) {
        case Op::leaf:
            break;
        case Op::matmul: {
            Node& a = nodes_[static_cast<std::size_t>(n.inputs[0])];
            Node& b = nodes_[static_cast<std::size_t>(n.inputs[1])];
            // dA += g * B^T and dB += A^T * g, accumulated in place.
            const int rows = a.value.rows(), inner = a.value.cols(), cols = g.cols();
            for (int i = 0; i < rows; ++i) {
                const double* g_row = g.data() + static_cast<std::size_t>(i) * cols;
                double* ga_row = a.grad.data() + static_cast<std::size_t>(i) * inner;
                const double* a_row = a.value.data() + static_cast<std::size_t>(i) * inner;
                for (int j = 0; j < inner; ++j) {
                    const double* b_row = b.value.data() + static_cast<std::size_t>(j) * cols;
                    double* gb_row = b.grad.data() + static_cast<std::size_t>(j) * cols;
                    double dot = 0.0;
                    const double aij = a_row[j];
                    for (int k = 0; k < cols; ++k) {
                        dot += g_row[k] * b_row[k];
                        gb_row[k] += aij * g_row[k];
                    }
                    ga_row[j] += dot;
                }
            }
            break;
        }
        case Op::add_bias: {
            Node& x = nodes_[static_cast<std::size_t>(n.inputs[0])];
            Node& bias = nodes_[static_cast<std::size_t>(n.inputs[1])];
            for (std::size_t i = 0; i < g.size(); ++i) x.grad.values()[i] += g.values()[i];
            for (int r = 0; r < g.rows(); ++r) {
                double s = 0.0;
                for (int c = 0; c < g.cols(); ++c) s += g(r, c);
                bias.grad(r, 0) += s;
            }
            break;
        }
        case Op::concat: {
            int row = 0;
            for (int src : n.inputs) {
                Node& part = nodes_[static_cast<std::size_t>(src)];
                for (int r = 0; r < part.value.rows(); ++r)
                    for (int c = 0; c < part.value.cols(); ++c)
                        part.grad(r, c) += g(row + r, c);
                row += part.value.rows();
            }
            break;
        }
        case Op::relu: {
            Node& x = nodes_[static_cast<std::size_t>(n.inputs[0])];
            // relu'(0) = 0 by convention.
            for (std::size_t i = 0; i < g.size(); ++i)
                if (x.value.values()[i] > 0.0) x.grad.values()[i] += g.values()[i];
            break;
        }
        case Op::sigmoid: {
            Node& x = nodes_[static_cast<std::size_t>(n.inputs[0])];
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = n.value.values()[i];
                x.grad.values()[i] += g.values()[i] * s * (1.0 - s);
            }
            break;
        }
        case Op::bce: {
            Node& p = nodes_[static_cast<std::size_t>(n.inputs[0])];
            const double scale = g(0, 0) / static_cast<double>(p.value.size());
            for (std::size_t i = 0; i < p.value.size(); ++i) {
                const double pi = p.value.values()[i];
                // The clamp is flat outside (eps, 1-eps), so no gradient there.
                if (pi < kBceEpsilon || pi > 1.0 - kBceEpsilon) continue;
                const double yi = n.targets.values()[i];
                p.grad.values()[i] += scale * (pi - yi) / (pi * (1.0 - pi));
            }
            break;
        }
        }
    }
}

void adadelta_step(Matrix& params, const Matrix& grads, const Matrix& mask,
                   AdadeltaState& state, const AdadeltaConfig& cfg) {
    if (!params.same_shape(grads) || !params.same_shape(mask) ||
        !params.same_shape(state.acc_grad_sq) || !params.same_shape(state.acc_update_sq))
        throw DimensionMismatch("adadelta_step shape mismatch");
    const double rho = cfg.rho, eps = cfg.epsilon;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads.values()[i];
        double& eg2 = state.acc_grad_sq.values()[i];
        double& edx2 = state.acc_update_sq.values()[i];
        eg2 = rho * eg2 + (1.0 - rho) * g * g;
        const double dx = -std::sqrt(edx2 + eps) / std::sqrt(eg2 + eps) * g;
        edx2 = rho * edx2 + (1.0 - rho) * dx * dx;
        params.values()[i] += dx;
        params.values()[i] *= mask.values()[i];
    }
}

double AdadeltaScalar::step(double grad, const AdadeltaConfig& cfg) {
    const double rho = cfg.rho, eps = cfg.epsilon;
    acc_grad_sq = rho * acc_grad_sq + (1.0 - rho) * grad * grad;
    const double dx = -std::sqrt(acc_update_sq + eps) / std::sqrt(acc_grad_sq + eps) * grad;
    acc_update_sq = rho * acc_update_sq + (1.0 - rho) * dx * dx;
    return dx;
}

} // namespace propneat
