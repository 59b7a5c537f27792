// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <span>
#include <vector>

#include "degan/container.hpp"
#include "degan/graph.hpp"
#include "degan/vocab.hpp"

namespace degan::qm9 {

/// Malformed SDF record; record_index is the 0-based position in the file.
class ParseError : public FormatError {
public:
    ParseError(std::size_t record_index, const std::string& what);
    std::size_t record_index() const { return record_; }

private:
    std::size_t record_;
};

class InsufficientRecordsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A retained molecule together with its position among all file records.
struct Record {
    std::size_t source_index = 0;
    GraphSample graph;

    bool operator==(const Record&) const = default;
};

struct ParseResult {
    std::vector<Record> records;
    std::size_t total = 0;
    std::size_t skipped_out_of_vocab = 0;
    std::size_t skipped_too_large = 0;
};

/// Reads V2000 MOL blocks separated by "$$$$". Hydrogens are dropped, bond
/// orders 1-4 map to single/double/triple/aromatic, molecules with atoms
/// outside the vocabulary or more than max_nodes heavy atoms are skipped.
ParseResult parse_sdf(std::istream& in, const VocabSpec& vocab);
ParseResult parse_sdf(const std::filesystem::path& path, const VocabSpec& vocab);

struct DatasetSplit {
    VocabSpec vocab;
    std::vector<Record> train;
    std::vector<Record> validation;
    std::uint64_t seed = 0;

    bool operator==(const DatasetSplit&) const = default;

    std::vector<GraphSample> train_graphs() const;
    std::vector<GraphSample> validation_graphs() const;
};

/// Uniform sampling without replacement; train and validation are disjoint
/// by construction. Same seed gives the same split.
DatasetSplit sample_split(std::span<const Record> all, const VocabSpec& vocab, std::size_t train_n,
                          std::size_t val_n, std::uint64_t seed);

std::vector<std::uint8_t> encode_dataset(const DatasetSplit& split);
DatasetSplit decode_dataset(std::vector<std::uint8_t> bytes);
void save_dataset(const DatasetSplit& split, const std::filesystem::path& path);
DatasetSplit load_dataset(const std::filesystem::path& path);

/// Generated-sample file: vocabulary plus a flat list of graphs.
struct SampleSet {
    VocabSpec vocab;
    std::vector<GraphSample> graphs;

    bool operator==(const SampleSet&) const = default;
};

std::vector<std::uint8_t> encode_samples(const SampleSet& samples);
SampleSet decode_samples(std::vector<std::uint8_t> bytes);
void save_samples(const SampleSet& samples, const std::filesystem::path& path);
SampleSet load_samples(const std::filesystem::path& path);

void write_vocab(ByteWriter& w, const VocabSpec& vocab);
VocabSpec read_vocab(ByteReader& r);

}  // namespace degan::qm9
