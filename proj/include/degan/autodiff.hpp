// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "degan/tensor.hpp"

namespace degan::ad {

class Tape;

/// Handle to an immutable tensor value, optionally recorded on a Tape.
///
/// A Var without a tape is a constant: operations on constants only are
/// evaluated eagerly and never recorded.
class Var {
public:
    Var() = default;
    Var(Tensor value);  // NOLINT(google-explicit-constructor): constants convert freely

    bool defined() const { return static_cast<bool>(value_); }
    const Tensor& value() const { return *value_; }
    const Shape& shape() const { return value_->shape; }
    std::size_t size() const { return value_->size(); }
    double item() const { return value_->item(); }

    bool recorded() const { return tape_ != nullptr; }
    Tape* tape() const { return tape_; }
    std::size_t id() const { return id_; }

    /// Same value, cut from the tape.
    Var detach() const { return Var(value_); }

private:
    explicit Var(std::shared_ptr<const Tensor> value) : value_(std::move(value)) {}
    Var(std::shared_ptr<const Tensor> value, Tape* tape, std::size_t id)
        : value_(std::move(value)), tape_(tape), id_(id) {}

    std::shared_ptr<const Tensor> value_;
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;

    friend class Tape;
};

/// Computes input gradients from (output, upstream gradient). Only inputs
/// flagged in `needs` must be returned defined. The body is written with Var
/// operations, so it is itself recorded when the backward pass is taped.
using BackwardFn =
    std::function<std::vector<Var>(const Var& out, const Var& grad, const std::vector<bool>& needs)>;

/// Ordered record of primitive operations. Node ids are assigned in
/// recording order, so inputs always precede their consumers; gradient()
/// walks ids in exact reverse order.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Registers a differentiable input.
    Var leaf(Tensor value);

    /// Records an operation if recording is on and any input lives on this
    /// tape; otherwise returns a constant.
    static Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

    std::size_t size() const { return nodes_.size(); }

    /// d(output)/d(wrt[k]) for each k; unreachable inputs get zeros. With
    /// create_graph the backward computations are appended to this tape and
    /// the returned gradients can be differentiated again.
    std::vector<Var> gradient(const Var& output, std::span<const Var> wrt, bool create_graph = false);

private:
    struct Node {
        std::shared_ptr<const Tensor> value;
        std::vector<std::size_t> inputs;
        BackwardFn backward;  // empty for leaves
    };

    std::deque<Node> nodes_;
};

/// Disables recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool recording_enabled();

// Elementwise binary ops broadcast numpy-style (right-aligned).
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);

/// a[..., m, k] x b[..., k, n]; leading dimensions broadcast.
Var matmul(const Var& a, const Var& b);

Var tanh(const Var& a);
Var sigmoid(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var sqrt(const Var& a);
/// 1/a with 1/0 defined as 0 (and a zero derivative there).
Var reciprocal(const Var& a);

/// Reduces a broadcast-compatible tensor down to `shape` by summation.
Var sum_to(const Var& a, const Shape& shape);
Var broadcast_to(const Var& a, const Shape& shape);
Var sum(const Var& a, std::vector<std::size_t> axes, bool keepdim = false);
Var sum_all(const Var& a);
Var mean_all(const Var& a);

Var reshape(const Var& a, const Shape& shape);
Var permute(const Var& a, const std::vector<std::size_t>& perm);
/// Swaps the last two axes.
Var transpose(const Var& a);

/// Softmax over the last axis.
Var softmax(const Var& a);

Var concat(const std::vector<Var>& parts, std::size_t axis);
Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length);
/// Zero tensor of extent `full` along `axis` with `a` placed at `start`.
Var embed(const Var& a, std::size_t axis, std::size_t start, std::size_t full);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& a) { return neg(a); }
inline Var operator*(const Var& a, double s) { return scale(a, s); }
inline Var operator*(double s, const Var& a) { return scale(a, s); }
inline Var operator+(const Var& a, double s) { return add_scalar(a, s); }
inline Var operator-(const Var& a, double s) { return add_scalar(a, -s); }

}  // namespace degan::ad
