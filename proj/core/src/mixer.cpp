#include "lmforge/mixer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

void MixtureSpec::validate() const {
    if (components.empty()) throw std::invalid_argument("mixture spec has no components");
    double sum = 0.0;
    for (const auto& c : components) {
        if (c.weight <= 0.0) throw std::invalid_argument("mixture weights must be > 0");
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("mixture weights must sum to 1");
}

MixtureSpec MixtureSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open mixture spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": mixture spec parse error: " + e.what());
    }
    MixtureSpec spec;
    for (const auto& cj : j.at("components")) {
        MixtureComponent c;
        c.path = cj.at("path").get<std::string>();
        c.weight = cj.at("weight").get<double>();
        spec.components.push_back(std::move(c));
    }
    spec.seed = j.value("seed", uint64_t{0});
    spec.validate();
    return spec;
}

std::string MixtureSpec::to_json() const {
    nlohmann::ordered_json j;
    auto& comps = j["components"] = nlohmann::ordered_json::array();
    for (const auto& c : components) comps.push_back({{"path", c.path}, {"weight", c.weight}});
    j["seed"] = seed;
    return j.dump(2);
}

MixtureSampler::MixtureSampler(const MixtureSpec& spec, std::vector<std::vector<Document>> corpora)
    : corpora_(std::move(corpora)) {
    spec.validate();
    if (corpora_.size() != spec.components.size())
        throw std::invalid_argument("mixture sampler: corpus count != component count");
    for (size_t i = 0; i < corpora_.size(); ++i)
        if (corpora_[i].empty())
            throw std::invalid_argument("mixture component is empty: " + spec.components[i].path);

    double acc = 0.0;
    for (const auto& c : spec.components) {
        acc += c.weight;
        cumulative_.push_back(acc);
    }
    cumulative_.back() = 1.0;

    Rng root(spec.seed);
    pick_rng_ = root.derive(0x7069636bULL); // "pick"
    states_.resize(corpora_.size());
    for (size_t i = 0; i < corpora_.size(); ++i) {
        states_[i].rng = root.derive(0x636f6d70ULL + i); // "comp" + index
        reshuffle(i);
    }
}

void MixtureSampler::reshuffle(size_t component) {
    ComponentState& st = states_[component];
    size_t n = corpora_[component].size();
    st.order.resize(n);
    for (size_t i = 0; i < n; ++i) st.order[i] = static_cast<uint32_t>(i);
    // Fisher-Yates with the component's own stream.
    for (size_t i = n; i > 1; --i) {
        size_t j = st.rng.uniform_u64(i);
        std::swap(st.order[i - 1], st.order[j]);
    }
    st.cursor = 0;
}

MixtureSampler::Draw MixtureSampler::next() {
    double u = pick_rng_.uniform();
    size_t component = 0;
    while (component + 1 < cumulative_.size() && u >= cumulative_[component]) ++component;

    ComponentState& st = states_[component];
    if (st.cursor >= st.order.size()) reshuffle(component);
    size_t index = st.order[st.cursor++];
    return {&corpora_[component][index], component, index};
}

double epoch_progress(uint64_t tokens_seen, uint64_t corpus_tokens) {
    if (corpus_tokens == 0) throw std::invalid_argument("epoch_progress: zero corpus tokens");
    return static_cast<double>(tokens_seen) / static_cast<double>(corpus_tokens);
}

SequencePacker::SequencePacker(size_t seq_len, TokenId eod_id)
    : seq_len_(seq_len), eod_id_(eod_id) {
    if (seq_len < 2) throw std::invalid_argument("seq_len must be >= 2");
}

void SequencePacker::add_document(const std::vector<TokenId>& tokens, size_t source) {
    if (source_tokens_.size() <= source) source_tokens_.resize(source + 1, 0);
    buffer_.reserve(buffer_.size() + tokens.size() + 1);
    for (TokenId t : tokens) {
        buffer_.push_back(t);
        buffer_sources_.push_back(source);
    }
    buffer_.push_back(eod_id_);
    buffer_sources_.push_back(source);

    while (buffer_.size() >= seq_len_) {
        std::vector<TokenId> seq(buffer_.begin(), buffer_.begin() + seq_len_);
        for (size_t i = 0; i < seq_len_; ++i) source_tokens_[buffer_sources_[i]]++;
        buffer_.erase(buffer_.begin(), buffer_.begin() + seq_len_);
        buffer_sources_.erase(buffer_sources_.begin(), buffer_sources_.begin() + seq_len_);
        complete_.push_back(std::move(seq));
        sequences_emitted_++;
    }
}

std::vector<std::vector<TokenId>> SequencePacker::take_sequences() {
    return std::exchange(complete_, {});
}

void write_packed(const std::string& path, const PackedHeader& header,
                  const std::vector<std::vector<TokenId>>& sequences) {
    nlohmann::ordered_json j;
    j["version"] = header.version;
    j["seq_len"] = header.seq_len;
    j["num_sequences"] = sequences.size();
    j["eod_id"] = header.eod_id;
    auto& mix = j["mixture"] = nlohmann::ordered_json::array();
    for (size_t i = 0; i < header.component_paths.size(); ++i) {
        double frac = i < header.component_token_fractions.size()
                          ? header.component_token_fractions[i]
                          : 0.0;
        mix.push_back({{"path", header.component_paths[i]}, {"token_fraction", frac}});
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write packed file: " + path);
    out << j.dump() << '\n';
    for (const auto& seq : sequences) {
        if (seq.size() != header.seq_len)
            throw std::invalid_argument("packed sequence length mismatch");
        for (TokenId t : seq) {
            unsigned char bytes[4] = {
                static_cast<unsigned char>(t & 0xFF),
                static_cast<unsigned char>((t >> 8) & 0xFF),
                static_cast<unsigned char>((t >> 16) & 0xFF),
                static_cast<unsigned char>((t >> 24) & 0xFF),
            };
            out.write(reinterpret_cast<const char*>(bytes), 4);
        }
    }
}

PackedDataset read_packed(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open packed file: " + path);
    std::string header_line;
    if (!std::getline(in, header_line))
        throw std::runtime_error(path + ": missing packed header line");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(header_line);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": packed header parse error: " + e.what());
    }
    PackedDataset ds;
    ds.header.version = j.value("version", "");
    if (ds.header.version != "pack-v1")
        throw std::runtime_error(path + ": unsupported packed format version");
    ds.header.seq_len = j.at("seq_len").get<uint32_t>();
    ds.header.num_sequences = j.at("num_sequences").get<uint64_t>();
    ds.header.eod_id = j.at("eod_id").get<TokenId>();
    if (j.contains("mixture")) {
        for (const auto& mj : j["mixture"]) {
            ds.header.component_paths.push_back(mj.value("path", ""));
            ds.header.component_token_fractions.push_back(mj.value("token_fraction", 0.0));
        }
    }

    size_t expected = static_cast<size_t>(ds.header.num_sequences) * ds.header.seq_len;
    ds.tokens.resize(expected);
    for (size_t i = 0; i < expected; ++i) {
        unsigned char bytes[4];
        if (!in.read(reinterpret_cast<char*>(bytes), 4))
            throw std::runtime_error(path + ": packed file truncated");
        ds.tokens[i] = static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
                       (static_cast<uint32_t>(bytes[2]) << 16) |
                       (static_cast<uint32_t>(bytes[3]) << 24);
    }
    return ds;
}

} // namespace lmforge
