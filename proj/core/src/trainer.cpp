#include "lmforge/trainer.hpp"

#include "lmforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

MetricsWriter::MetricsWriter(const std::string& path) : path_(path) {
    std::ofstream out(path_, std::ios::trunc); // start fresh
    if (!out) throw std::runtime_error("cannot write metrics log: " + path_);
}

void MetricsWriter::operator()(const StepMetrics& m) {
    std::ofstream out(path_, std::ios::app);
    nlohmann::ordered_json j;
    j["step"] = m.step;
    j["loss"] = m.loss;
    j["lr"] = m.lr;
    j["tokens"] = m.tokens;
    j["epoch"] = m.epoch;
    out << j.dump() << '\n';
}

std::optional<TrainExample> build_finetune_example(const InstructRecord& record,
                                                   const TokenizerModel& tokenizer,
                                                   const std::string& separator, size_t seq_len) {
    if (record.prompt.empty() || record.response.empty())
        throw std::invalid_argument("finetune record: empty prompt or response");

    std::string prefix_text;
    if (record.system) prefix_text += *record.system + separator;
    prefix_text += record.prompt + separator;

    std::vector<TokenId> prefix = encode(tokenizer, prefix_text);
    std::vector<TokenId> response = encode(tokenizer, record.response);

    TrainExample example;
    example.tokens = prefix;
    example.tokens.insert(example.tokens.end(), response.begin(), response.end());
    example.tokens.push_back(tokenizer.eod_id());
    if (example.tokens.size() > seq_len) return std::nullopt;

    example.token_mask.assign(example.tokens.size(), 0);
    for (size_t i = prefix.size(); i < example.tokens.size(); ++i) example.token_mask[i] = 1;
    return example;
}

namespace {

/// Shared batched optimization loop over fixed examples.
template <typename T>
TrainOutcome<T> run_training(ModelParams<T> params, const std::vector<TrainExample>& examples,
                             uint64_t corpus_tokens, const TrainConfig& config,
                             const MetricsSink& sink, const std::string& checkpoint_path,
                             uint64_t skipped_records) {
    config.validate();
    if (examples.empty()) throw std::invalid_argument("training data is empty");

    std::vector<std::pair<std::string, size_t>> names;
    names.reserve(params.layout.manifest.size());
    for (const auto& info : params.layout.manifest)
        names.emplace_back(info.name, info.offset + info.size);

    AdamState<T> state(params.layout.total_size);
    std::vector<T> grad(params.layout.total_size);
    uint64_t tokens_seen = 0;
    size_t cursor = 0;
    double last_loss = 0.0;

    for (uint64_t step = 1; step <= config.total_steps; ++step) {
        std::fill(grad.begin(), grad.end(), T(0));
        double loss_sum = 0.0;
        size_t positions = 0;

        for (uint32_t b = 0; b < config.global_batch; ++b) {
            const TrainExample& ex = examples[cursor];
            cursor = (cursor + 1) % examples.size();

            size_t n = ex.tokens.size();
            std::span<const TokenId> inputs(ex.tokens.data(), n - 1);
            std::span<const TokenId> targets(ex.tokens.data() + 1, n - 1);
            // Shift the token mask onto prediction targets.
            std::vector<uint8_t> target_mask;
            std::span<const uint8_t> mask_span;
            if (!ex.token_mask.empty()) {
                target_mask.assign(ex.token_mask.begin() + 1, ex.token_mask.end());
                mask_span = target_mask;
            }
            LossStats stats =
                accumulate_loss_and_grads<T>(params, inputs, targets, mask_span, grad);
            loss_sum += stats.loss_sum;
            positions += stats.positions;
            tokens_seen += n;
        }

        double loss = loss_sum / static_cast<double>(positions);
        if (!std::isfinite(loss)) {
            if (!checkpoint_path.empty())
                save_checkpoint(params, checkpoint_path + ".diag");
            throw std::runtime_error("non-finite loss at step " + std::to_string(step) +
                                     (checkpoint_path.empty()
                                          ? ""
                                          : "; diagnostic checkpoint: " + checkpoint_path +
                                                ".diag"));
        }
        T count = static_cast<T>(positions);
        for (auto& g : grad) g /= count;
        if (config.grad_clip) clip_global_norm(grad, *config.grad_clip);

        double lr = lr_at(step, config);
        adam_step(params.data, grad, state, lr, config, &names);
        last_loss = loss;

        if (sink) {
            StepMetrics m;
            m.step = step;
            m.loss = loss;
            m.lr = lr;
            m.tokens = tokens_seen;
            m.epoch = epoch_progress(tokens_seen, corpus_tokens);
            sink(m);
        }
        if (!checkpoint_path.empty() && config.checkpoint_interval > 0 &&
            step % config.checkpoint_interval == 0 && step != config.total_steps) {
            save_checkpoint(params, checkpoint_path);
        }
    }

    if (!checkpoint_path.empty()) save_checkpoint(params, checkpoint_path);
    TrainOutcome<T> outcome;
    outcome.params = std::move(params);
    outcome.final_loss = last_loss;
    outcome.steps = config.total_steps;
    outcome.skipped_records = skipped_records;
    return outcome;
}

} // namespace

template <typename T>
TrainOutcome<T> train_pretrain(ModelParams<T> params, const PackedDataset& data,
                               const TrainConfig& config, const MetricsSink& sink,
                               const std::string& checkpoint_path) {
    if (data.num_sequences() == 0) throw std::invalid_argument("packed dataset is empty");
    if (data.header.seq_len > params.config.seq_len)
        throw std::invalid_argument("packed seq_len exceeds model seq_len");

    std::vector<TrainExample> examples(data.num_sequences());
    for (size_t i = 0; i < data.num_sequences(); ++i) {
        const uint32_t* seq = data.sequence(i);
        examples[i].tokens.assign(seq, seq + data.header.seq_len);
    }
    uint64_t corpus_tokens =
        static_cast<uint64_t>(data.num_sequences()) * data.header.seq_len;
    return run_training(std::move(params), examples, corpus_tokens, config, sink,
                        checkpoint_path, 0);
}

template <typename T>
TrainOutcome<T> train_finetune(ModelParams<T> params, const std::vector<InstructRecord>& records,
                               const TokenizerModel& tokenizer, const TrainConfig& config,
                               const MetricsSink& sink, const std::string& checkpoint_path) {
    std::vector<TrainExample> examples;
    examples.reserve(records.size());
    uint64_t skipped = 0;
    uint64_t corpus_tokens = 0;
    for (const auto& rec : records) {
        auto ex = build_finetune_example(rec, tokenizer, config.separator, params.config.seq_len);
        if (!ex) {
            ++skipped;
            continue;
        }
        corpus_tokens += ex->tokens.size();
        examples.push_back(std::move(*ex));
    }
    if (examples.empty())
        throw std::invalid_argument("no finetune example fits within seq_len");
    return run_training(std::move(params), examples, corpus_tokens, config, sink,
                        checkpoint_path, skipped);
}

template <typename T>
std::string generate(const ModelParams<T>& params, const TokenizerModel& tokenizer,
                     const std::string& prompt, const GenerateOptions& options) {
    if (prompt.empty()) throw std::invalid_argument("generate: empty prompt");
    std::vector<TokenId> context = encode(tokenizer, prompt);
    if (context.empty()) throw std::invalid_argument("generate: prompt encodes to nothing");
    if (context.size() >= params.config.seq_len)
        throw std::invalid_argument("generate: prompt does not fit in the context window");
    for (TokenId t : context)
        if (t >= params.config.vocab_size)
            throw std::invalid_argument("generate: prompt token outside model vocab");

    const size_t vocab = params.config.vocab_size;
    const TokenId eod = tokenizer.eod_id();
    Rng rng(options.seed);

    std::vector<TokenId> generated;
    std::vector<TokenId> window = context;
    for (size_t n = 0; n < options.max_new; ++n) {
        if (window.size() >= params.config.seq_len) {
            window.erase(window.begin(),
                         window.begin() + (window.size() - params.config.seq_len + 1));
        }
        std::vector<T> logits = forward(params, std::span<const TokenId>(window));
        const T* row = logits.data() + (window.size() - 1) * vocab;

        TokenId next = 0;
        if (options.temperature <= 0.0) {
            for (size_t v = 1; v < vocab; ++v)
                if (row[v] > row[next]) next = static_cast<TokenId>(v);
        } else {
            // Candidate set: top_k by (logit desc, id asc), or everything.
            std::vector<uint32_t> cand(vocab);
            for (size_t v = 0; v < vocab; ++v) cand[v] = static_cast<uint32_t>(v);
            size_t k = options.top_k == 0 ? vocab : std::min(options.top_k, vocab);
            if (k < vocab) {
                std::partial_sort(cand.begin(), cand.begin() + k, cand.end(),
                                  [&](uint32_t a, uint32_t b) {
                                      if (row[a] != row[b]) return row[a] > row[b];
                                      return a < b;
                                  });
                cand.resize(k);
            }
            double max_logit = -1e300;
            for (uint32_t c : cand)
                max_logit = std::max(max_logit, static_cast<double>(row[c]) / options.temperature);
            std::vector<double> probs(cand.size());
            double denom = 0.0;
            for (size_t i = 0; i < cand.size(); ++i) {
                probs[i] =
                    std::exp(static_cast<double>(row[cand[i]]) / options.temperature - max_logit);
                denom += probs[i];
            }
            double u = rng.uniform() * denom;
            size_t pick = cand.size() - 1;
            double acc = 0.0;
            for (size_t i = 0; i < cand.size(); ++i) {
                acc += probs[i];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
            next = cand[pick];
        }

        if (next == eod) break;
        generated.push_back(next);
        window.push_back(next);
    }
    return decode(tokenizer, generated);
}

template TrainOutcome<float> train_pretrain<float>(ModelParams<float>, const PackedDataset&,
                                                   const TrainConfig&, const MetricsSink&,
                                                   const std::string&);
template TrainOutcome<double> train_pretrain<double>(ModelParams<double>, const PackedDataset&,
                                                     const TrainConfig&, const MetricsSink&,
                                                     const std::string&);
template TrainOutcome<float> train_finetune<float>(ModelParams<float>,
                                                   const std::vector<InstructRecord>&,
                                                   const TokenizerModel&, const TrainConfig&,
                                                   const MetricsSink&, const std::string&);
template TrainOutcome<double> train_finetune<double>(ModelParams<double>,
                                                     const std::vector<InstructRecord>&,
                                                     const TokenizerModel&, const TrainConfig&,
                                                     const MetricsSink&, const std::string&);
template std::string generate<float>(const ModelParams<float>&, const TokenizerModel&,
                                     const std::string&, const GenerateOptions&);
template std::string generate<double>(const ModelParams<double>&, const TokenizerModel&,
                                      const std::string&, const GenerateOptions&);

} // namespace lmforge
