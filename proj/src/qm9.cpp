// SPDX-License-Identifier: Apache-2.0
#include "degan/qm9.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

namespace degan::qm9 {

ParseError::ParseError(std::size_t record_index, const std::string& what)
    : FormatError("record " + std::to_string(record_index) + ": " + what), record_(record_index) {}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Fixed-width integer field; returns false on anything non-numeric.
bool field_int(const std::string& line, std::size_t pos, std::size_t width, int& out) {
    if (line.size() < pos + 1) return false;
    const auto text = trim(std::string_view(line).substr(pos, std::min(width, line.size() - pos)));
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

const char* order_name(int order) {
    switch (order) {
        case 1: return "single";
        case 2: return "double";
        case 3: return "triple";
        case 4: return "aromatic";
        default: return nullptr;
    }
}

struct RecordOutcome {
    std::optional<GraphSample> graph;
    bool too_large = false;
};

RecordOutcome parse_record(const std::vector<std::string>& lines, std::size_t index,
                           const VocabSpec& vocab) {
    if (lines.size() < 4) throw ParseError(index, "missing header or counts line");
    const auto& counts = lines[3];
    int n_atoms = 0, n_bonds = 0;
    if (!field_int(counts, 0, 3, n_atoms) || !field_int(counts, 3, 3, n_bonds) || n_atoms < 0 ||
        n_bonds < 0)
        throw ParseError(index, "malformed counts line '" + counts + "'");
    if (counts.find("V3000") != std::string::npos)
        throw ParseError(index, "V3000 records are not supported");
    const auto atoms_end = 4 + static_cast<std::size_t>(n_atoms);
    const auto bonds_end = atoms_end + static_cast<std::size_t>(n_bonds);
    if (lines.size() < atoms_end) throw ParseError(index, "truncated atom block");
    if (lines.size() < bonds_end) throw ParseError(index, "truncated bond block");

    std::vector<std::string> symbols;
    symbols.reserve(n_atoms);
    for (std::size_t k = 4; k < atoms_end; ++k) {
        const auto& line = lines[k];
        if (line.size() < 32) throw ParseError(index, "short atom line " + std::to_string(k - 3));
        auto sym = trim(std::string_view(line).substr(31, std::min<std::size_t>(3, line.size() - 31)));
        if (sym.empty()) throw ParseError(index, "missing atom symbol on atom line " + std::to_string(k - 3));
        symbols.push_back(std::move(sym));
    }

    struct Bond {
        int a, b, order;
    };
    std::vector<Bond> bonds;
    bonds.reserve(n_bonds);
    for (std::size_t k = atoms_end; k < bonds_end; ++k) {
        const auto& line = lines[k];
        Bond bond{};
        if (!field_int(line, 0, 3, bond.a) || !field_int(line, 3, 3, bond.b) ||
            !field_int(line, 6, 3, bond.order))
            throw ParseError(index, "malformed bond line '" + line + "'");
        if (bond.a < 1 || bond.a > n_atoms || bond.b < 1 || bond.b > n_atoms || bond.a == bond.b)
            throw ParseError(index, "bond references invalid atom index in '" + line + "'");
        bonds.push_back(bond);
    }

    std::vector<int> heavy_slot(symbols.size(), -1);
    std::size_t heavy = 0;
    std::vector<std::size_t> types;
    bool out_of_vocab = false;
    for (std::size_t k = 0; k < symbols.size(); ++k) {
        if (symbols[k] == "H") continue;
        auto t = vocab.node_index(symbols[k]);
        if (!t) out_of_vocab = true;
        heavy_slot[k] = static_cast<int>(heavy++);
        types.push_back(t.value_or(0));
    }
    if (out_of_vocab) return {};
    if (heavy > vocab.max_nodes) return {std::nullopt, true};

    GraphSample g = GraphSample::empty_like(vocab);
    for (std::size_t i = 0; i < heavy; ++i) g.set_node_type(i, types[i]);
    for (const auto& bond : bonds) {
        const int i = heavy_slot[bond.a - 1], j = heavy_slot[bond.b - 1];
        if (i < 0 || j < 0) continue;
        const char* name = order_name(bond.order);
        if (!name) throw ParseError(index, "unsupported bond order " + std::to_string(bond.order));
        auto it = std::find(vocab.edge_types.begin(), vocab.edge_types.end(), name);
        if (it == vocab.edge_types.end()) return {};
        g.set_edge_type(i, j, static_cast<std::size_t>(it - vocab.edge_types.begin()));
    }
    return {std::move(g), false};
}

}  // namespace

ParseResult parse_sdf(std::istream& in, const VocabSpec& vocab) {
    vocab.validate();
    ParseResult result;
    std::vector<std::string> lines;
    std::string line;
    auto flush = [&](bool terminated) {
        const bool blank = std::all_of(lines.begin(), lines.end(),
                                       [](const std::string& l) { return trim(l).empty(); });
        if (!terminated && blank) return;
        const auto index = result.total++;
        auto outcome = parse_record(lines, index, vocab);
        if (outcome.graph) {
            result.records.push_back(Record{index, std::move(*outcome.graph)});
        } else if (outcome.too_large) {
            ++result.skipped_too_large;
        } else {
            ++result.skipped_out_of_vocab;
        }
        lines.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("$$$$", 0) == 0) {
            flush(true);
        } else {
            lines.push_back(line);
        }
    }
    if (in.bad()) throw ParseError(result.total, "read error");
    flush(false);
    return result;
}

ParseResult parse_sdf(const std::filesystem::path& path, const VocabSpec& vocab) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path.string());
    return parse_sdf(in, vocab);
}

std::vector<GraphSample> DatasetSplit::train_graphs() const {
    std::vector<GraphSample> out;
    out.reserve(train.size());
    for (const auto& r : train) out.push_back(r.graph);
    return out;
}

std::vector<GraphSample> DatasetSplit::validation_graphs() const {
    std::vector<GraphSample> out;
    out.reserve(validation.size());
    for (const auto& r : validation) out.push_back(r.graph);
    return out;
}

DatasetSplit sample_split(std::span<const Record> all, const VocabSpec& vocab, std::size_t train_n,
                          std::size_t val_n, std::uint64_t seed) {
    if (all.size() < train_n + val_n) {
        throw InsufficientRecordsError("need " + std::to_string(train_n + val_n) +
                                       " records but only " + std::to_string(all.size()) +
                                       " are available");
    }
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates; std::shuffle's draw sequence is implementation defined.
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; k < train_n + val_n; ++k) {
        const auto span = order.size() - k;
        const auto pick = k + static_cast<std::size_t>(rng() % span);
        std::swap(order[k], order[pick]);
    }
    DatasetSplit split;
    split.vocab = vocab;
    split.seed = seed;
    for (std::size_t k = 0; k < train_n; ++k) split.train.push_back(all[order[k]]);
    for (std::size_t k = train_n; k < train_n + val_n; ++k) split.validation.push_back(all[order[k]]);
    return split;
}

void write_vocab(ByteWriter& w, const VocabSpec& vocab) {
    vocab.validate();
    w.u8(static_cast<std::uint8_t>(vocab.node_types.size()));
    for (const auto& s : vocab.node_types) {
        w.u8(static_cast<std::uint8_t>(s.size()));
        w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }
    w.u8(static_cast<std::uint8_t>(vocab.empty_index));
    w.u8(static_cast<std::uint8_t>(vocab.edge_types.size()));
    for (const auto& s : vocab.edge_types) {
        w.u8(static_cast<std::uint8_t>(s.size()));
        w.bytes(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }
    w.u8(static_cast<std::uint8_t>(vocab.no_edge_index));
    w.u8(static_cast<std::uint8_t>(vocab.max_nodes));
}

VocabSpec read_vocab(ByteReader& r) {
    VocabSpec v;
    auto read_symbols = [&r](std::vector<std::string>& out) {
        const auto n = r.u8();
        for (std::size_t k = 0; k < n; ++k) {
            const auto len = r.u8();
            auto raw = r.bytes(len);
            out.emplace_back(raw.begin(), raw.end());
        }
    };
    read_symbols(v.node_types);
    v.empty_index = r.u8();
    read_symbols(v.edge_types);
    v.no_edge_index = r.u8();
    v.max_nodes = r.u8();
    try {
        v.validate();
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("stored vocabulary is invalid: ") + e.what());
    }
    return v;
}

namespace {

void write_graph(ByteWriter& w, const GraphSample& g) {
    w.bytes(g.node_features());
    w.bytes(g.adjacency());
}

GraphSample read_graph(ByteReader& r, const VocabSpec& v) {
    const auto n = v.max_nodes, t = v.num_node_types(), b = v.num_edge_types();
    auto x = r.bytes(n * t);
    auto a = r.bytes(n * n * b);
    auto g = GraphSample::from_raw(n, t, b, v.empty_index, v.no_edge_index, std::move(x), std::move(a));
    if (auto err = check_invariants(g); !err.empty()) throw FormatError("stored graph invalid: " + err);
    return g;
}

void check_fits(const GraphSample& g, const VocabSpec& v) {
    if (g.num_nodes() != v.max_nodes || g.num_node_types() != v.num_node_types() ||
        g.num_edge_types() != v.num_edge_types() || g.empty_index() != v.empty_index ||
        g.no_edge_index() != v.no_edge_index)
        throw std::invalid_argument("graph does not fit the vocabulary");
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(const DatasetSplit& split) {
    ByteWriter w(kDatasetMagic, kFormatVersion);
    write_vocab(w, split.vocab);
    w.u64(split.seed);
    w.u32(static_cast<std::uint32_t>(split.train.size()));
    w.u32(static_cast<std::uint32_t>(split.validation.size()));
    for (const auto* part : {&split.train, &split.validation}) {
        for (const auto& rec : *part) {
            check_fits(rec.graph, split.vocab);
            w.u32(static_cast<std::uint32_t>(rec.source_index));
            write_graph(w, rec.graph);
        }
    }
    return std::move(w).finish();
}

DatasetSplit decode_dataset(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes), kDatasetMagic, kFormatVersion);
    DatasetSplit split;
    split.vocab = read_vocab(r);
    split.seed = r.u64();
    const auto n_train = r.u32();
    const auto n_val = r.u32();
    for (auto [count, part] : {std::pair{n_train, &split.train}, std::pair{n_val, &split.validation}}) {
        for (std::uint32_t k = 0; k < count; ++k) {
            Record rec;
            rec.source_index = r.u32();
            rec.graph = read_graph(r, split.vocab);
            part->push_back(std::move(rec));
        }
    }
    if (!r.at_end()) throw FormatError("trailing bytes after dataset payload");
    return split;
}

void save_dataset(const DatasetSplit& split, const std::filesystem::path& path) {
    write_file(path, encode_dataset(split));
}

DatasetSplit load_dataset(const std::filesystem::path& path) { return decode_dataset(read_file(path)); }

std::vector<std::uint8_t> encode_samples(const SampleSet& samples) {
    ByteWriter w(kSamplesMagic, kFormatVersion);
    write_vocab(w, samples.vocab);
    w.u32(static_cast<std::uint32_t>(samples.graphs.size()));
    for (const auto& g : samples.graphs) {
        check_fits(g, samples.vocab);
        write_graph(w, g);
    }
    return std::move(w).finish();
}

SampleSet decode_samples(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes), kSamplesMagic, kFormatVersion);
    SampleSet s;
    s.vocab = read_vocab(r);
    const auto n = r.u32();
    s.graphs.reserve(n);
    for (std::uint32_t k = 0; k < n; ++k) s.graphs.push_back(read_graph(r, s.vocab));
    if (!r.at_end()) throw FormatError("trailing bytes after sample payload");
    return s;
}

void save_samples(const SampleSet& samples, const std::filesystem::path& path) {
    write_file(path, encode_samples(samples));
}

SampleSet load_samples(const std::filesystem::path& path) { return decode_samples(read_file(path)); }

}  // namespace degan::qm9
