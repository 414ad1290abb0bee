#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmforge/bpe.hpp"
#include "lmforge/document.hpp"
#include "lmforge/rng.hpp"

namespace lmforge {

struct MixtureComponent {
    std::string path;  // corpus handle, informational for in-memory use
    double weight = 0.0;
};

struct MixtureSpec {
    std::vector<MixtureComponent> components;
    uint64_t seed = 0;

    void validate() const; // weights > 0 and sum to 1 (1e-9)
    static MixtureSpec from_json_file(const std::string& path);
    std::string to_json() const;
};

/// Weighted document sampler with deterministic oversampling: each draw picks
/// a component by weight, then takes the next document of that component's
/// cyclic shuffled order (reshuffled on every wrap). Every document of a
/// component is seen once per cycle, so small corpora are oversampled rather
/// than truncated.
class MixtureSampler {
public:
    MixtureSampler(const MixtureSpec& spec, std::vector<std::vector<Document>> corpora);

    struct Draw {
        const Document* doc;
        size_t component;
        size_t index; // position within the component corpus
    };
    Draw next();

    size_t component_count() const { return corpora_.size(); }

private:
    struct ComponentState {
        std::vector<uint32_t> order;
        size_t cursor = 0;
        Rng rng{0};
    };

    std::vector<std::vector<Document>> corpora_;
    std::vector<double> cumulative_;
    std::vector<ComponentState> states_;
    Rng pick_rng_{0};

    void reshuffle(size_t component);
};

/// tokens_seen / corpus_tokens. Throws on corpus_tokens == 0.
double epoch_progress(uint64_t tokens_seen, uint64_t corpus_tokens);

/// Concatenates each document's tokens plus one eod and chunks the stream
/// into consecutive seq_len blocks; the final partial block is dropped.
class SequencePacker {
public:
    SequencePacker(size_t seq_len, TokenId eod_id);

    /// Feeds one document; source tags the tokens for mixture accounting.
    void add_document(const std::vector<TokenId>& tokens, size_t source);

    /// Complete sequences accumulated so far (ownership transferred).
    std::vector<std::vector<TokenId>> take_sequences();

    size_t pending() const { return buffer_.size(); }
    size_t sequences_emitted() const { return sequences_emitted_; }
    /// Tokens attributed to each source label among emitted sequences.
    const std::vector<uint64_t>& source_token_counts() const { return source_tokens_; }

private:
    size_t seq_len_;
    TokenId eod_id_;
    std::vector<TokenId> buffer_;
    std::vector<size_t> buffer_sources_;
    std::vector<std::vector<TokenId>> complete_;
    std::vector<uint64_t> source_tokens_;
    size_t sequences_emitted_ = 0;
};

/// Packed training file: one JSON header line, then row-major little-endian
/// uint32 token ids [num_sequences x seq_len].
struct PackedHeader {
    std::string version = "pack-v1";
    uint32_t seq_len = 0;
    uint64_t num_sequences = 0;
    TokenId eod_id = 0;
    // Realized post-packing mixture, by token attribution.
    std::vector<std::string> component_paths;
    std::vector<double> component_token_fractions;
};

void write_packed(const std::string& path, const PackedHeader& header,
                  const std::vector<std::vector<TokenId>>& sequences);

struct PackedDataset {
    PackedHeader header;
    std::vector<uint32_t> tokens; // num_sequences * seq_len

    size_t num_sequences() const { return header.num_sequences; }
    const uint32_t* sequence(size_t i) const { return tokens.data() + i * header.seq_len; }
};

PackedDataset read_packed(const std::string& path);

} // namespace lmforge
