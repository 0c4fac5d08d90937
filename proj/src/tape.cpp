#include "wkbp/tape.hpp"

#include <cmath>

namespace wkbp {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ShapeMismatchError(msg);
}

} // namespace

int Tape::push(Op op, Tensor value, int a, int b) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    nodes_.push_back(n);
    vals_.push_back(std::move(value));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int id, const char* what) const {
    if (check_finite_ && !vals_[static_cast<std::size_t>(id)].all_finite())
        throw NonFiniteError(std::string("non-finite value produced by ") + what +
                             " at node " + std::to_string(id));
}

int Tape::leaf(Tensor value) {
    int id = push(Op::Leaf, std::move(value));
    check(id, "leaf");
    return id;
}

int Tape::matmul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.cols == B.rows, "matmul: " + A.shape_str() + " * " + B.shape_str());
    Tensor out(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        const double* arow = &A.data[static_cast<std::size_t>(i) * A.cols];
        for (int k = 0; k < A.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = &B.data[static_cast<std::size_t>(k) * B.cols];
            double* orow = &out.data[static_cast<std::size_t>(i) * B.cols];
            for (int j = 0; j < B.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    int id = push(Op::MatMul, std::move(out), a, b);
    check(id, "matmul");
    return id;
}

int Tape::add(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "add: " + A.shape_str() + " + " + B.shape_str());
    Tensor out = A;
    for (int i = 0; i < out.size(); ++i) out[i] += B[i];
    int id = push(Op::Add, std::move(out), a, b);
    check(id, "add");
    return id;
}

int Tape::mul(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    Tensor out;
    if (A.same_shape(B)) {
        out = A;
        for (int i = 0; i < out.size(); ++i) out[i] *= B[i];
    } else if (A.is_scalar()) {
        out = B;
        for (int i = 0; i < out.size(); ++i) out[i] *= A[0];
    } else if (B.is_scalar()) {
        out = A;
        for (int i = 0; i < out.size(); ++i) out[i] *= B[0];
    } else {
        require(false, "mul: " + A.shape_str() + " x " + B.shape_str());
    }
    int id = push(Op::Mul, std::move(out), a, b);
    check(id, "mul");
    return id;
}

int Tape::scale(int a, double factor) {
    Tensor out = val(a);
    for (int i = 0; i < out.size(); ++i) out[i] *= factor;
    int id = push(Op::Scale, std::move(out), a);
    nodes_.back().p0 = factor;
    check(id, "scale");
    return id;
}

int Tape::tanh(int a) {
    Tensor out = val(a);
    for (int i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    int id = push(Op::Tanh, std::move(out), a);
    check(id, "tanh");
    return id;
}

int Tape::sigmoid(int a) {
    Tensor out = val(a);
    for (int i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
    int id = push(Op::Sigmoid, std::move(out), a);
    check(id, "sigmoid");
    return id;
}

int Tape::exp(int a) {
    Tensor out = val(a);
    for (int i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
    int id = push(Op::Exp, std::move(out), a);
    check(id, "exp");
    return id;
}

int Tape::clamp(int a, double lo, double hi) {
    require(lo <= hi, "clamp: lo > hi");
    Tensor out = val(a);
    for (int i = 0; i < out.size(); ++i) {
        if (out[i] < lo) out[i] = lo;
        else if (out[i] > hi) out[i] = hi;
    }
    int id = push(Op::Clamp, std::move(out), a);
    nodes_.back().p0 = lo;
    nodes_.back().p1 = hi;
    check(id, "clamp");
    return id;
}

int Tape::concat0(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.cols == B.cols, "concat0: " + A.shape_str() + " | " + B.shape_str());
    Tensor out(A.rows + B.rows, A.cols);
    std::copy(A.data.begin(), A.data.end(), out.data.begin());
    std::copy(B.data.begin(), B.data.end(), out.data.begin() + A.size());
    int id = push(Op::Concat0, std::move(out), a, b);
    check(id, "concat0");
    return id;
}

int Tape::slice(int a, int r0, int r1) {
    const Tensor& A = val(a);
    require(0 <= r0 && r0 < r1 && r1 <= A.rows,
            "slice: rows [" + std::to_string(r0) + "," + std::to_string(r1) + ") of " +
                A.shape_str());
    Tensor out(r1 - r0, A.cols);
    std::copy(A.data.begin() + static_cast<std::size_t>(r0) * A.cols,
              A.data.begin() + static_cast<std::size_t>(r1) * A.cols, out.data.begin());
    int id = push(Op::Slice, std::move(out), a);
    nodes_.back().r0 = r0;
    nodes_.back().r1 = r1;
    check(id, "slice");
    return id;
}

int Tape::sum(int a) {
    const Tensor& A = val(a);
    double s = 0.0;
    for (double v : A.data) s += v;
    int id = push(Op::Sum, Tensor::scalar(s), a);
    check(id, "sum");
    return id;
}

int Tape::mse(int a, int b) {
    const Tensor& A = val(a);
    const Tensor& B = val(b);
    require(A.same_shape(B), "mse: " + A.shape_str() + " vs " + B.shape_str());
    require(A.size() > 0, "mse: empty tensors");
    double s = 0.0;
    for (int i = 0; i < A.size(); ++i) {
        double d = A[i] - B[i];
        s += d * d;
    }
    Tensor out = Tensor::scalar(s / A.size());
    // Loss values are validated even in release builds.
    if (!out.all_finite())
        throw NonFiniteError("non-finite loss value at node " + std::to_string(size()));
    return push(Op::Mse, std::move(out), a, b);
}

void Tape::backward(int loss_id) {
    if (loss_id < 0 || loss_id >= size())
        throw NonScalarLossError("backward: invalid loss node id");
    if (!val(loss_id).is_scalar())
        throw NonScalarLossError("backward: loss node must be scalar, got " +
                                 val(loss_id).shape_str());

    grads_.resize(vals_.size());
    for (std::size_t i = 0; i < vals_.size(); ++i) {
        grads_[i].rows = vals_[i].rows;
        grads_[i].cols = vals_[i].cols;
        grads_[i].data.assign(vals_[i].data.size(), 0.0);
    }
    grads_[static_cast<std::size_t>(loss_id)][0] = 1.0;

    for (int id = loss_id; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        switch (n.op) {
        case Op::Leaf:
            break;
        case Op::MatMul: {
            const Tensor& A = val(n.a);
            const Tensor& B = val(n.b);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
            // ga += g * B^T
            for (int i = 0; i < A.rows; ++i) {
                const double* grow = &g.data[static_cast<std::size_t>(i) * B.cols];
                double* garow = &ga.data[static_cast<std::size_t>(i) * A.cols];
                for (int k = 0; k < A.cols; ++k) {
                    const double* brow = &B.data[static_cast<std::size_t>(k) * B.cols];
                    double acc = 0.0;
                    for (int j = 0; j < B.cols; ++j) acc += grow[j] * brow[j];
                    garow[k] += acc;
                }
            }
            // gb += A^T * g
            for (int k = 0; k < A.cols; ++k) {
                double* gbrow = &gb.data[static_cast<std::size_t>(k) * B.cols];
                for (int i = 0; i < A.rows; ++i) {
                    double aik = A.data[static_cast<std::size_t>(i) * A.cols + k];
                    if (aik == 0.0) continue;
                    const double* grow = &g.data[static_cast<std::size_t>(i) * B.cols];
                    for (int j = 0; j < B.cols; ++j) gbrow[j] += aik * grow[j];
                }
            }
            break;
        }
        case Op::Add: {
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
            for (int i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            break;
        }
        case Op::Mul: {
            const Tensor& A = val(n.a);
            const Tensor& B = val(n.b);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
            if (A.same_shape(B)) {
                for (int i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * B[i];
                    gb[i] += g[i] * A[i];
                }
            } else if (A.is_scalar()) {
                double acc = 0.0;
                for (int i = 0; i < g.size(); ++i) {
                    acc += g[i] * B[i];
                    gb[i] += g[i] * A[0];
                }
                ga[0] += acc;
            } else { // B scalar
                double acc = 0.0;
                for (int i = 0; i < g.size(); ++i) {
                    acc += g[i] * A[i];
                    ga[i] += g[i] * B[0];
                }
                gb[0] += acc;
            }
            break;
        }
        case Op::Scale: {
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < g.size(); ++i) ga[i] += n.p0 * g[i];
            break;
        }
        case Op::Tanh: {
            const Tensor& y = val(id);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
            break;
        }
        case Op::Sigmoid: {
            const Tensor& y = val(id);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
            break;
        }
        case Op::Exp: {
            const Tensor& y = val(id);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
            break;
        }
        case Op::Clamp: {
            const Tensor& x = val(n.a);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < g.size(); ++i)
                if (x[i] > n.p0 && x[i] < n.p1) ga[i] += g[i];
            break;
        }
        case Op::Concat0: {
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
            for (int i = 0; i < ga.size(); ++i) ga[i] += g[i];
            for (int i = 0; i < gb.size(); ++i) gb[i] += g[ga.size() + i];
            break;
        }
        case Op::Slice: {
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            int offset = n.r0 * ga.cols;
            for (int i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
            break;
        }
        case Op::Sum: {
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            for (int i = 0; i < ga.size(); ++i) ga[i] += g[0];
            break;
        }
        case Op::Mse: {
            const Tensor& A = val(n.a);
            const Tensor& B = val(n.b);
            Tensor& ga = grads_[static_cast<std::size_t>(n.a)];
            Tensor& gb = grads_[static_cast<std::size_t>(n.b)];
            double w = 2.0 / A.size() * g[0];
            for (int i = 0; i < A.size(); ++i) {
                double d = w * (A[i] - B[i]);
                ga[i] += d;
                gb[i] -= d;
            }
            break;
        }
        }
    }
}

void Tape::clear() {
    nodes_.clear();
    vals_.clear();
    grads_.clear();
}

void ParamStore::add(const std::string& name, Tensor value) {
    if (index_.count(name))
        throw std::invalid_argument("ParamStore: duplicate parameter " + name);
    index_[name] = names_.size();
    names_.push_back(name);
    grads_.emplace_back(value.rows, value.cols);
    values_.push_back(std::move(value));
}

Tensor& ParamStore::param(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return values_[it->second];
}

const Tensor& ParamStore::param(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return values_[it->second];
}

Tensor& ParamStore::grad(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return grads_[it->second];
}

std::size_t ParamStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
    return it->second;
}

void ParamStore::zero_grads() {
    for (auto& g : grads_) g.data.assign(g.data.size(), 0.0);
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const auto& g : grads_)
        for (double v : g.data) s += v * v;
    return std::sqrt(s);
}

bool ParamStore::grads_finite() const {
    for (const auto& g : grads_)
        if (!g.all_finite()) return false;
    return true;
}

std::vector<int> ParamStore::bind(Tape& tape) const {
    std::vector<int> ids;
    ids.reserve(values_.size());
    for (const auto& v : values_) ids.push_back(tape.leaf(v));
    return ids;
}

void ParamStore::accumulate_grads(const Tape& tape, const std::vector<int>& ids) {
    if (ids.size() != values_.size())
        throw ShapeMismatchError("accumulate_grads: id list does not match store");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Tensor& g = tape.grad(ids[i]);
        Tensor& acc = grads_[i];
        if (!g.same_shape(acc))
            throw ShapeMismatchError("accumulate_grads: gradient shape mismatch for " + names_[i]);
        for (int k = 0; k < acc.size(); ++k) acc[k] += g[k];
    }
}

} // namespace wkbp
