// SPDX-License-Identifier: Apache-2.0
#include "degan/canonical.hpp"

#include <algorithm>
#include <map>
#include <utility>

namespace degan {

namespace {

using Cell = std::vector<std::size_t>;
using Partition = std::vector<Cell>;

class Canonicalizer {
public:
    explicit Canonicalizer(const GraphSample& g) : g_(g), n_(g.num_nodes()) {
        types_.resize(n_);
        edges_.assign(n_ * n_, 0);
        for (std::size_t i = 0; i < n_; ++i) {
            types_[i] = static_cast<std::uint8_t>(g.node_type(i));
            for (std::size_t j = 0; j < n_; ++j)
                edges_[i * n_ + j] = static_cast<std::uint8_t>(g.edge_type(i, j));
        }
    }

    CanonicalForm run() {
        std::map<std::uint8_t, Cell> by_type;
        for (std::size_t v = 0; v < n_; ++v) by_type[types_[v]].push_back(v);
        Partition p;
        for (auto& [type, cell] : by_type) p.push_back(std::move(cell));
        search(std::move(p));
        return CanonicalForm{std::move(best_)};
    }

private:
    std::uint8_t edge(std::size_t i, std::size_t j) const { return edges_[i * n_ + j]; }

    // Splits cells by (edge type, neighbor cell) multisets until stable.
    void refine(Partition& p) const {
        std::vector<std::size_t> cell_of(n_);
        while (true) {
            for (std::size_t c = 0; c < p.size(); ++c)
                for (auto v : p[c]) cell_of[v] = c;
            Partition next;
            next.reserve(n_);
            for (const auto& cell : p) {
                if (cell.size() == 1) {
                    next.push_back(cell);
                    continue;
                }
                std::vector<std::pair<std::vector<std::size_t>, std::size_t>> keyed;
                keyed.reserve(cell.size());
                for (auto v : cell) {
                    std::vector<std::size_t> sig;
                    for (std::size_t w = 0; w < n_; ++w) {
                        if (w == v || edge(v, w) == g_.no_edge_index()) continue;
                        sig.push_back(edge(v, w) * (n_ + 1) + cell_of[w]);
                    }
                    std::sort(sig.begin(), sig.end());
                    keyed.emplace_back(std::move(sig), v);
                }
                std::stable_sort(keyed.begin(), keyed.end(),
                                 [](const auto& a, const auto& b) { return a.first < b.first; });
                Cell current{keyed[0].second};
                for (std::size_t k = 1; k < keyed.size(); ++k) {
                    if (keyed[k].first != keyed[k - 1].first) {
                        next.push_back(std::move(current));
                        current.clear();
                    }
                    current.push_back(keyed[k].second);
                }
                next.push_back(std::move(current));
            }
            const bool stable = next.size() == p.size();
            p = std::move(next);
            if (stable) return;
        }
    }

    bool twins(std::size_t u, std::size_t v) const {
        for (std::size_t w = 0; w < n_; ++w) {
            if (w == u || w == v) continue;
            if (edge(u, w) != edge(v, w)) return false;
        }
        return true;
    }

    std::vector<std::uint8_t> encode(const Partition& p) const {
        std::vector<std::size_t> order;
        order.reserve(n_);
        for (const auto& cell : p) order.push_back(cell.front());
        std::vector<std::uint8_t> out;
        out.reserve(3 + n_ + n_ * (n_ - 1) / 2);
        out.push_back(static_cast<std::uint8_t>(n_));
        out.push_back(static_cast<std::uint8_t>(g_.num_node_types()));
        out.push_back(static_cast<std::uint8_t>(g_.num_edge_types()));
        for (auto v : order) out.push_back(types_[v]);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) out.push_back(edge(order[i], order[j]));
        return out;
    }

    void search(Partition p) {
        refine(p);
        std::size_t target = p.size();
        for (std::size_t c = 0; c < p.size(); ++c) {
            if (p[c].size() > 1 && (target == p.size() || p[c].size() < p[target].size()))
                target = c;
        }
        if (target == p.size()) {
            auto code = encode(p);
            if (!have_best_ || code < best_) {
                best_ = std::move(code);
                have_best_ = true;
            }
            return;
        }
        std::vector<std::size_t> tried;
        for (auto v : p[target]) {
            bool redundant = false;
            for (auto u : tried) {
                if (twins(u, v)) {
                    redundant = true;
                    break;
                }
            }
            if (redundant) continue;
            tried.push_back(v);
            Partition child;
            child.reserve(p.size() + 1);
            for (std::size_t c = 0; c < p.size(); ++c) {
                if (c != target) {
                    child.push_back(p[c]);
                    continue;
                }
                child.push_back(Cell{v});
                Cell rest;
                for (auto w : p[c])
                    if (w != v) rest.push_back(w);
                child.push_back(std::move(rest));
            }
            search(std::move(child));
        }
    }

    const GraphSample& g_;
    std::size_t n_;
    std::vector<std::uint8_t> types_;
    std::vector<std::uint8_t> edges_;
    std::vector<std::uint8_t> best_;
    bool have_best_ = false;
};

}  // namespace

CanonicalForm canonicalize(const GraphSample& g) {
    if (g.num_nodes() == 0) {
        return CanonicalForm{{0, static_cast<std::uint8_t>(g.num_node_types()),
                              static_cast<std::uint8_t>(g.num_edge_types())}};
    }
    return Canonicalizer(g).run();
}

std::size_t CanonicalFormHash::operator()(const CanonicalForm& f) const noexcept {
    // FNV-1a
    std::size_t h = 1469598103934665603ull;
    for (auto b : f.bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace degan
