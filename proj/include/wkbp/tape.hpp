#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "wkbp/tensor.hpp"

namespace wkbp {

// Reverse-mode autodiff over a flat tape of eagerly evaluated operations.
// Node ids are indices into the tape and are topologically ordered by
// construction; backward() walks them in exact reverse order.
//
// Op set is the minimum closed over the hybrid model: matmul, add,
// elementwise mul (with 1x1 broadcast), scale, tanh, sigmoid, exp, clamp,
// concat along axis 0, row slice, sum, and mean squared error.
class Tape {
public:
    enum class Op {
        Leaf,
        MatMul,
        Add,
        Mul,
        Scale,
        Tanh,
        Sigmoid,
        Exp,
        Clamp,
        Concat0,
        Slice,
        Sum,
        Mse,
    };

    Tape() = default;

    // Registers an input value (weights, signals, constants). Leaves get
    // gradients accumulated like any other node but are never mutated.
    int leaf(Tensor value);

    int matmul(int a, int b);
    int add(int a, int b);
    // Elementwise product. Shapes must match, or one operand may be 1x1
    // and is broadcast over the other.
    int mul(int a, int b);
    int scale(int a, double factor);
    int tanh(int a);
    int sigmoid(int a);
    int exp(int a);
    // Hard clamp to [lo, hi]; subgradient is 1 inside the interval, 0 outside.
    int clamp(int a, double lo, double hi);
    int concat0(int a, int b);
    // Rows [r0, r1), all columns.
    int slice(int a, int r0, int r1);
    int sum(int a);
    // Mean of squared elementwise differences; output is scalar.
    int mse(int a, int b);

    const Tensor& value(int id) const { return vals_[static_cast<std::size_t>(id)]; }
    // Valid after backward().
    const Tensor& grad(int id) const { return grads_[static_cast<std::size_t>(id)]; }

    // Accumulates d(loss)/d(node) for every node. The loss must be scalar.
    void backward(int loss_id);

    // Drops all nodes but keeps allocated capacity for reuse across beats.
    void clear();

    int size() const { return static_cast<int>(nodes_.size()); }

    // Per-op finiteness validation. Defaults to on in debug builds only;
    // mse() and rk4 macro steps always check regardless.
    void set_check_finite(bool on) { check_finite_ = on; }
    bool check_finite() const { return check_finite_; }

private:
    struct Node {
        Op op;
        int a = -1;
        int b = -1;
        double p0 = 0.0; // scale factor / clamp lo
        double p1 = 0.0; // clamp hi
        int r0 = 0;      // slice begin row
        int r1 = 0;      // slice end row
    };

    int push(Op op, Tensor value, int a = -1, int b = -1);
    const Tensor& val(int id) const { return vals_[static_cast<std::size_t>(id)]; }
    void check(int id, const char* what) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> vals_;
    std::vector<Tensor> grads_;
#ifdef NDEBUG
    bool check_finite_ = false;
#else
    bool check_finite_ = true;
#endif
};

// Named trainable tensors plus matching gradient accumulators. Iteration
// order is insertion order so norms, updates and checkpoints are
// deterministic.
class ParamStore {
public:
    void add(const std::string& name, Tensor value);

    Tensor& param(const std::string& name);
    const Tensor& param(const std::string& name) const;
    Tensor& grad(const std::string& name);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    Tensor& value_at(std::size_t i) { return values_[i]; }
    const Tensor& value_at(std::size_t i) const { return values_[i]; }
    Tensor& grad_at(std::size_t i) { return grads_[i]; }
    const Tensor& grad_at(std::size_t i) const { return grads_[i]; }
    bool has(const std::string& name) const { return index_.count(name) != 0; }
    // Slot index for a name; throws std::invalid_argument when absent.
    std::size_t index_of(const std::string& name) const;

    void zero_grads();
    // Global L2 norm over every gradient entry.
    double grad_norm() const;
    bool grads_finite() const;

    // Registers every parameter as a leaf on the tape; returns tape ids
    // aligned with parameter slots.
    std::vector<int> bind(Tape& tape) const;
    // Adds the tape gradients of bound leaves into the store accumulators.
    void accumulate_grads(const Tape& tape, const std::vector<int>& ids);

private:
    std::vector<std::string> names_;
    std::vector<Tensor> values_;
    std::vector<Tensor> grads_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace wkbp
