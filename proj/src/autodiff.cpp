// SPDX-License-Identifier: Apache-2.0
#include "degan/autodiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/Core>

namespace degan {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), data(numel(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != numel(shape))
        throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(data.size()) +
                         " values");
}

double Tensor::item() const {
    if (data.size() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape));
    return data[0];
}

bool Tensor::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace degan

namespace degan::ad {

namespace {

constexpr std::size_t kNoInput = std::numeric_limits<std::size_t>::max();

thread_local bool g_recording = true;

Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t r = std::max(a.size(), b.size());
    Shape out(r);
    for (std::size_t k = 0; k < r; ++k) {
        const std::size_t da = k < r - a.size() ? 1 : a[k - (r - a.size())];
        const std::size_t db = k < r - b.size() ? 1 : b[k - (r - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError("cannot broadcast shapes " + shape_str(a) + " and " + shape_str(b));
        out[k] = da == 1 ? db : da;
    }
    return out;
}

// Strides of `x` viewed with shape `out` (0 along broadcast axes).
std::vector<std::size_t> broadcast_strides(const Shape& x, const Shape& out) {
    const std::size_t r = out.size();
    std::vector<std::size_t> strides(r, 0);
    std::size_t s = 1;
    for (std::size_t k = x.size(); k-- > 0;) {
        const std::size_t axis = k + (r - x.size());
        strides[axis] = (x[k] == 1 && out[axis] != 1) ? 0 : s;
        s *= x[k];
    }
    return strides;
}

// Walks every multi-index of `shape` in row-major order, calling fn with the
// running offsets of each strided view.
template <std::size_t K, class Fn>
void for_each_index(const Shape& shape, const std::array<std::vector<std::size_t>, K>& strides, Fn fn) {
    const std::size_t total = numel(shape);
    if (total == 0) return;
    const std::size_t r = shape.size();
    std::vector<std::size_t> idx(r, 0);
    std::array<std::size_t, K> off{};
    for (std::size_t flat = 0; flat < total; ++flat) {
        fn(flat, off);
        for (std::size_t d = r; d-- > 0;) {
            ++idx[d];
            for (std::size_t k = 0; k < K; ++k) off[k] += strides[k][d];
            if (idx[d] < shape[d]) break;
            for (std::size_t k = 0; k < K; ++k) off[k] -= strides[k][d] * shape[d];
            idx[d] = 0;
        }
    }
}

template <class F>
Tensor broadcast_binary(const Tensor& a, const Tensor& b, F f) {
    if (a.shape == b.shape) {
        Tensor out(a.shape);
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
        return out;
    }
    Shape shape = broadcast_shape(a.shape, b.shape);
    Tensor out(shape);
    if (b.size() == 1 && shape == a.shape) {
        const double bv = b[0];
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], bv);
        return out;
    }
    if (a.size() == 1 && shape == b.shape) {
        const double av = a[0];
        for (std::size_t i = 0; i < b.size(); ++i) out[i] = f(av, b[i]);
        return out;
    }
    std::array<std::vector<std::size_t>, 2> strides{broadcast_strides(a.shape, shape),
                                                    broadcast_strides(b.shape, shape)};
    for_each_index<2>(shape, strides, [&](std::size_t flat, const std::array<std::size_t, 2>& off) {
        out[flat] = f(a[off[0]], b[off[1]]);
    });
    return out;
}

template <class F>
Tensor unary(const Tensor& a, F f) {
    Tensor out(a.shape);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

void check_axis(const Shape& s, std::size_t axis, const char* op) {
    if (axis >= s.size())
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(s));
}

// outer x extent x inner decomposition around `axis`.
struct AxisSplit {
    std::size_t outer, extent, inner;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
    AxisSplit r{1, s[axis], 1};
    for (std::size_t k = 0; k < axis; ++k) r.outer *= s[k];
    for (std::size_t k = axis + 1; k < s.size(); ++k) r.inner *= s[k];
    return r;
}

}  // namespace

Var::Var(Tensor value) : value_(std::make_shared<const Tensor>(std::move(value))) {}

bool recording_enabled() { return g_recording; }

NoGradGuard::NoGradGuard() : previous_(g_recording) { g_recording = false; }
NoGradGuard::~NoGradGuard() { g_recording = previous_; }

Var Tape::leaf(Tensor value) {
    auto ptr = std::make_shared<const Tensor>(std::move(value));
    nodes_.push_back(Node{ptr, {}, {}});
    return Var(ptr, this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
    Tape* tape = nullptr;
    if (g_recording) {
        for (const auto& in : inputs) {
            if (!in.recorded()) continue;
            if (tape && tape != in.tape()) throw std::logic_error("operation mixes variables from two tapes");
            tape = in.tape();
        }
    }
    auto ptr = std::make_shared<const Tensor>(std::move(value));
    if (!tape) return Var(ptr);
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    for (const auto& in : inputs) ids.push_back(in.recorded() ? in.id() : kNoInput);
    tape->nodes_.push_back(Node{ptr, std::move(ids), std::move(backward)});
    return Var(ptr, tape, tape->nodes_.size() - 1);
}

std::vector<Var> Tape::gradient(const Var& output, std::span<const Var> wrt, bool create_graph) {
    if (!output.defined() || !output.recorded() || output.tape() != this)
        throw std::invalid_argument("gradient: output is detached from this tape");
    if (output.size() != 1)
        throw ShapeError("gradient: output must be scalar, got shape " + shape_str(output.shape()));

    std::optional<NoGradGuard> guard;
    if (!create_graph) guard.emplace();

    const std::size_t last = output.id();
    std::vector<char> relevant(last + 1, 0);
    std::vector<char> requested(last + 1, 0);
    for (const auto& w : wrt) {
        if (w.recorded() && w.tape() == this && w.id() <= last) relevant[w.id()] = requested[w.id()] = 1;
    }
    for (std::size_t id = 0; id <= last; ++id) {
        if (relevant[id]) continue;
        for (auto in : nodes_[id].inputs) {
            if (in != kNoInput && relevant[in]) {
                relevant[id] = 1;
                break;
            }
        }
    }

    std::vector<Var> grads(last + 1);
    grads[last] = Var(Tensor(output.shape(), 1.0));
    for (std::size_t id = last + 1; id-- > 0;) {
        if (!grads[id].defined() || !relevant[id]) continue;
        const Node& node = nodes_[id];
        if (!node.backward) continue;
        std::vector<bool> needs(node.inputs.size());
        bool any = false;
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            needs[k] = node.inputs[k] != kNoInput && relevant[node.inputs[k]];
            any = any || needs[k];
        }
        if (!any) continue;
        Var out(node.value, this, id);
        auto input_grads = node.backward(out, grads[id], needs);
        for (std::size_t k = 0; k < node.inputs.size(); ++k) {
            if (!needs[k]) continue;
            auto& slot = grads[node.inputs[k]];
            slot = slot.defined() ? add(slot, input_grads[k]) : input_grads[k];
        }
        if (id != last && !requested[id]) grads[id] = Var();
    }

    std::vector<Var> result;
    result.reserve(wrt.size());
    for (const auto& w : wrt) {
        if (w.recorded() && w.tape() == this && w.id() <= last && grads[w.id()].defined()) {
            result.push_back(grads[w.id()]);
        } else {
            result.push_back(Var(Tensor(w.shape(), 0.0)));
        }
    }
    return result;
}

Var add(const Var& a, const Var& b) {
    return Tape::record(broadcast_binary(a.value(), b.value(), std::plus<>()), {a, b},
                        [sa = a.shape(), sb = b.shape()](const Var&, const Var& g, const std::vector<bool>& needs) {
                            std::vector<Var> r(2);
                            if (needs[0]) r[0] = sum_to(g, sa);
                            if (needs[1]) r[1] = sum_to(g, sb);
                            return r;
                        });
}

Var sub(const Var& a, const Var& b) {
    return Tape::record(broadcast_binary(a.value(), b.value(), std::minus<>()), {a, b},
                        [sa = a.shape(), sb = b.shape()](const Var&, const Var& g, const std::vector<bool>& needs) {
                            std::vector<Var> r(2);
                            if (needs[0]) r[0] = sum_to(g, sa);
                            if (needs[1]) r[1] = sum_to(neg(g), sb);
                            return r;
                        });
}

Var mul(const Var& a, const Var& b) {
    return Tape::record(broadcast_binary(a.value(), b.value(), std::multiplies<>()), {a, b},
                        [a, b](const Var&, const Var& g, const std::vector<bool>& needs) {
                            std::vector<Var> r(2);
                            if (needs[0]) r[0] = sum_to(mul(g, b), a.shape());
                            if (needs[1]) r[1] = sum_to(mul(g, a), b.shape());
                            return r;
                        });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, double s) {
    return Tape::record(unary(a.value(), [s](double v) { return v * s; }), {a},
                        [s](const Var&, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{scale(g, s)};
                        });
}

Var add_scalar(const Var& a, double s) {
    return Tape::record(unary(a.value(), [s](double v) { return v + s; }), {a},
                        [](const Var&, const Var& g, const std::vector<bool>&) { return std::vector<Var>{g}; });
}

Var matmul(const Var& a, const Var& b) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    if (sa.size() < 2 || sb.size() < 2 || sa[sa.size() - 1] != sb[sb.size() - 2])
        throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " and " + shape_str(sb));
    const std::size_t m = sa[sa.size() - 2], k = sa.back(), n = sb.back();
    if (sa.size() > 2 && sb.size() == 2) {
        // Shared right operand: fold the batch into the rows, one GEMM.
        Shape out_shape(sa.begin(), sa.end() - 1);
        out_shape.push_back(n);
        return reshape(matmul(reshape(a, {a.size() / k, k}), b), out_shape);
    }
    const Shape ba(sa.begin(), sa.end() - 2), bb(sb.begin(), sb.end() - 2);
    Shape batch;
    try {
        batch = broadcast_shape(ba, bb);
    } catch (const ShapeError&) {
        throw ShapeError("matmul: incompatible batch dimensions " + shape_str(sa) + " and " + shape_str(sb));
    }
    Shape out_shape = batch;
    out_shape.push_back(m);
    out_shape.push_back(n);
    Tensor out(out_shape);

    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    std::array<std::vector<std::size_t>, 2> strides{broadcast_strides(ba, batch), broadcast_strides(bb, batch)};
    auto kernel = [&](std::size_t flat, const std::array<std::size_t, 2>& off) {
        Eigen::Map<const RowMat> A(a.value().data.data() + off[0] * m * k, m, k);
        Eigen::Map<const RowMat> B(b.value().data.data() + off[1] * k * n, k, n);
        Eigen::Map<RowMat> C(out.data.data() + flat * m * n, m, n);
        if (m * k * n <= 4096) C.noalias() = A.lazyProduct(B);
        else C.noalias() = A * B;
    };
    if (batch.empty()) {
        kernel(0, {0, 0});
    } else {
        for_each_index<2>(batch, strides, kernel);
    }
    return Tape::record(std::move(out), {a, b}, [a, b](const Var&, const Var& g, const std::vector<bool>& needs) {
        std::vector<Var> r(2);
        if (needs[0]) r[0] = sum_to(matmul(g, transpose(b)), a.shape());
        if (needs[1]) r[1] = sum_to(matmul(transpose(a), g), b.shape());
        return r;
    });
}

Var tanh(const Var& a) {
    return Tape::record(unary(a.value(), [](double v) { return std::tanh(v); }), {a},
                        [](const Var& out, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{mul(g, add_scalar(neg(square(out)), 1.0))};
                        });
}

Var sigmoid(const Var& a) {
    return Tape::record(unary(a.value(),
                              [](double v) {
                                  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
                                  const double e = std::exp(v);
                                  return e / (1.0 + e);
                              }),
                        {a}, [](const Var& out, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{mul(g, mul(out, add_scalar(neg(out), 1.0)))};
                        });
}

Var exp(const Var& a) {
    return Tape::record(unary(a.value(), [](double v) { return std::exp(v); }), {a},
                        [](const Var& out, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{mul(g, out)};
                        });
}

Var square(const Var& a) {
    return Tape::record(unary(a.value(), [](double v) { return v * v; }), {a},
                        [a](const Var&, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{mul(g, scale(a, 2.0))};
                        });
}

Var sqrt(const Var& a) {
    return Tape::record(unary(a.value(), [](double v) { return std::sqrt(v); }), {a},
                        [](const Var& out, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{mul(g, scale(reciprocal(out), 0.5))};
                        });
}

Var reciprocal(const Var& a) {
    return Tape::record(unary(a.value(), [](double v) { return v == 0.0 ? 0.0 : 1.0 / v; }), {a},
                        [](const Var& out, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{neg(mul(g, square(out)))};
                        });
}

Var sum_to(const Var& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    if (broadcast_shape(shape, a.shape()) != a.shape())
        throw ShapeError("sum_to: cannot reduce " + shape_str(a.shape()) + " to " + shape_str(shape));
    Tensor out(shape, 0.0);
    const Tensor& in = a.value();
    std::array<std::vector<std::size_t>, 1> strides{broadcast_strides(shape, a.shape())};
    for_each_index<1>(a.shape(), strides,
                      [&](std::size_t flat, const std::array<std::size_t, 1>& off) { out[off[0]] += in[flat]; });
    return Tape::record(std::move(out), {a}, [sa = a.shape()](const Var&, const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{broadcast_to(g, sa)};
    });
}

Var broadcast_to(const Var& a, const Shape& shape) {
    if (a.shape() == shape) return a;
    if (broadcast_shape(a.shape(), shape) != shape)
        throw ShapeError("broadcast_to: cannot broadcast " + shape_str(a.shape()) + " to " + shape_str(shape));
    Tensor out(shape);
    const Tensor& in = a.value();
    std::array<std::vector<std::size_t>, 1> strides{broadcast_strides(a.shape(), shape)};
    for_each_index<1>(shape, strides,
                      [&](std::size_t flat, const std::array<std::size_t, 1>& off) { out[flat] = in[off[0]]; });
    return Tape::record(std::move(out), {a}, [sa = a.shape()](const Var&, const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{sum_to(g, sa)};
    });
}

Var sum(const Var& a, std::vector<std::size_t> axes, bool keepdim) {
    Shape keep = a.shape();
    for (auto ax : axes) {
        check_axis(a.shape(), ax, "sum");
        keep[ax] = 1;
    }
    Var r = sum_to(a, keep);
    if (keepdim) return r;
    Shape squeezed;
    for (std::size_t k = 0; k < keep.size(); ++k)
        if (std::find(axes.begin(), axes.end(), k) == axes.end()) squeezed.push_back(keep[k]);
    return reshape(r, squeezed);
}

Var sum_all(const Var& a) { return reshape(sum_to(a, Shape(a.shape().size(), 1)), Shape{}); }

Var mean_all(const Var& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.size())); }

Var reshape(const Var& a, const Shape& shape) {
    if (numel(shape) != a.size())
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    if (a.shape() == shape) return a;
    return Tape::record(Tensor(shape, a.value().data), {a},
                        [sa = a.shape()](const Var&, const Var& g, const std::vector<bool>&) {
                            return std::vector<Var>{reshape(g, sa)};
                        });
}

Var permute(const Var& a, const std::vector<std::size_t>& perm) {
    const Shape& s = a.shape();
    if (perm.size() != s.size()) throw ShapeError("permute: rank mismatch for shape " + shape_str(s));
    std::vector<std::size_t> inverse(perm.size(), perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) {
        if (perm[k] >= perm.size() || inverse[perm[k]] != perm.size())
            throw ShapeError("permute: invalid permutation for shape " + shape_str(s));
        inverse[perm[k]] = k;
    }
    Shape out_shape(s.size());
    std::vector<std::size_t> in_strides(s.size());
    std::size_t st = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
        in_strides[k] = st;
        st *= s[k];
    }
    std::array<std::vector<std::size_t>, 1> strides{std::vector<std::size_t>(s.size())};
    for (std::size_t k = 0; k < s.size(); ++k) {
        out_shape[k] = s[perm[k]];
        strides[0][k] = in_strides[perm[k]];
    }
    Tensor out(out_shape);
    const Tensor& in = a.value();
    for_each_index<1>(out_shape, strides,
                      [&](std::size_t flat, const std::array<std::size_t, 1>& off) { out[flat] = in[off[0]]; });
    return Tape::record(std::move(out), {a}, [inverse](const Var&, const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{permute(g, inverse)};
    });
}

Var transpose(const Var& a) {
    const std::size_t r = a.shape().size();
    if (r < 2) throw ShapeError("transpose: need rank >= 2, got " + shape_str(a.shape()));
    std::vector<std::size_t> perm(r);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::swap(perm[r - 1], perm[r - 2]);
    return permute(a, perm);
}

Var softmax(const Var& a) {
    const Shape& s = a.shape();
    if (s.empty()) throw ShapeError("softmax: scalar input");
    const std::size_t len = s.back();
    const std::size_t rows = len == 0 ? 0 : a.size() / len;
    Tensor out(s);
    const Tensor& in = a.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = &in.data[r * len];
        double* y = &out.data[r * len];
        const double mx = *std::max_element(x, x + len);
        double z = 0.0;
        for (std::size_t k = 0; k < len; ++k) {
            y[k] = std::exp(x[k] - mx);
            z += y[k];
        }
        for (std::size_t k = 0; k < len; ++k) y[k] /= z;
    }
    return Tape::record(std::move(out), {a}, [](const Var& y, const Var& g, const std::vector<bool>&) {
        Shape keep = y.shape();
        keep.back() = 1;
        return std::vector<Var>{mul(y, sub(g, sum_to(mul(g, y), keep)))};
    });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    const Shape& first = parts.front().shape();
    check_axis(first, axis, "concat");
    Shape out_shape = first;
    out_shape[axis] = 0;
    std::vector<std::size_t> extents;
    for (const auto& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t k = 0; ok && k < s.size(); ++k) ok = k == axis || s[k] == first[k];
        if (!ok) throw ShapeError("concat: shape " + shape_str(s) + " incompatible with " + shape_str(first));
        out_shape[axis] += s[axis];
        extents.push_back(s[axis]);
    }
    Tensor out(out_shape);
    const auto split = split_at(out_shape, axis);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t ext = p.shape()[axis];
        const auto& src = p.value().data;
        for (std::size_t o = 0; o < split.outer; ++o) {
            std::copy_n(&src[o * ext * split.inner], ext * split.inner,
                        &out.data[(o * split.extent + offset) * split.inner]);
        }
        offset += ext;
    }
    return Tape::record(std::move(out), parts,
                        [axis, extents](const Var&, const Var& g, const std::vector<bool>& needs) {
                            std::vector<Var> r(extents.size());
                            std::size_t start = 0;
                            for (std::size_t k = 0; k < extents.size(); ++k) {
                                if (needs[k]) r[k] = slice(g, axis, start, extents[k]);
                                start += extents[k];
                            }
                            return r;
                        });
}

Var slice(const Var& a, std::size_t axis, std::size_t start, std::size_t length) {
    const Shape& s = a.shape();
    check_axis(s, axis, "slice");
    if (start + length > s[axis])
        throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + length) +
                         ") exceeds axis " + std::to_string(axis) + " of " + shape_str(s));
    if (start == 0 && length == s[axis]) return a;
    Shape out_shape = s;
    out_shape[axis] = length;
    Tensor out(out_shape);
    const auto split = split_at(s, axis);
    const auto& src = a.value().data;
    for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(&src[(o * split.extent + start) * split.inner], length * split.inner,
                    &out.data[o * length * split.inner]);
    }
    return Tape::record(std::move(out), {a}, [axis, start, full = s[axis]](const Var&, const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{embed(g, axis, start, full)};
    });
}

Var embed(const Var& a, std::size_t axis, std::size_t start, std::size_t full) {
    const Shape& s = a.shape();
    check_axis(s, axis, "embed");
    if (start + s[axis] > full) throw ShapeError("embed: block does not fit in extent " + std::to_string(full));
    if (start == 0 && s[axis] == full) return a;
    Shape out_shape = s;
    out_shape[axis] = full;
    Tensor out(out_shape, 0.0);
    const auto split = split_at(s, axis);
    const auto& src = a.value().data;
    for (std::size_t o = 0; o < split.outer; ++o) {
        std::copy_n(&src[o * split.extent * split.inner], split.extent * split.inner,
                    &out.data[(o * full + start) * split.inner]);
    }
    return Tape::record(std::move(out), {a}, [axis, start, len = s[axis]](const Var&, const Var& g, const std::vector<bool>&) {
        return std::vector<Var>{slice(g, axis, start, len)};
    });
}

}  // namespace degan::ad
