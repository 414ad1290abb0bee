#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmforge/adam.hpp"
#include "lmforge/bpe.hpp"
#include "lmforge/checkpoint.hpp"
#include "lmforge/instruct.hpp"
#include "lmforge/mixer.hpp"
#include "lmforge/schedule.hpp"
#include "lmforge/transformer.hpp"

namespace lmforge {

struct StepMetrics {
    uint64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    uint64_t tokens = 0; // cumulative tokens consumed
    double epoch = 0.0;
};

using MetricsSink = std::function<void(const StepMetrics&)>;

/// Appends one JSON object per step to a JSONL file.
class MetricsWriter {
public:
    explicit MetricsWriter(const std::string& path);
    void operator()(const StepMetrics& m);

private:
    std::string path_;
};

/// One training example: a token sequence and a per-token mask; position i
/// of the mask marks token i as a loss target when it appears as the
/// prediction target (next-token shift is applied inside the trainer).
struct TrainExample {
    std::vector<TokenId> tokens;
    std::vector<uint8_t> token_mask; // empty = all positions count
};

/// Chat layout: [system, sep, prompt, sep, response, <eod>], segments
/// encoded separately so the mask lands exactly on response + <eod>.
/// Returns nullopt when the serialized example exceeds seq_len (the caller
/// counts skips).
std::optional<TrainExample> build_finetune_example(const InstructRecord& record,
                                                   const TokenizerModel& tokenizer,
                                                   const std::string& separator, size_t seq_len);

template <typename T>
struct TrainOutcome {
    ModelParams<T> params;
    double final_loss = 0.0;
    uint64_t steps = 0;
    uint64_t skipped_records = 0;
};

/// Next-token training over packed sequences, loss on every position.
/// Batches of config.global_batch sequences cycle through the dataset in
/// order. Aborts with a ".diag" checkpoint on non-finite loss.
template <typename T>
TrainOutcome<T> train_pretrain(ModelParams<T> params, const PackedDataset& data,
                               const TrainConfig& config, const MetricsSink& sink,
                               const std::string& checkpoint_path = "");

/// Instruction tuning: loss restricted to response tokens. Records longer
/// than seq_len are skipped and counted.
template <typename T>
TrainOutcome<T> train_finetune(ModelParams<T> params, const std::vector<InstructRecord>& records,
                               const TokenizerModel& tokenizer, const TrainConfig& config,
                               const MetricsSink& sink, const std::string& checkpoint_path = "");

struct GenerateOptions {
    size_t max_new = 64;
    double temperature = 1.0;
    size_t top_k = 0; // 0 = full distribution
    uint64_t seed = 0;
};

/// Autoregressive sampling. temperature 0 is greedy argmax with lowest-id
/// tie-break; generation stops at <eod> or max_new tokens; the context
/// window slides when it fills. Returns the continuation only.
template <typename T>
std::string generate(const ModelParams<T>& params, const TokenizerModel& tokenizer,
                     const std::string& prompt, const GenerateOptions& options);

} // namespace lmforge
