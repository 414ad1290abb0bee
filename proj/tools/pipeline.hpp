#pragma once

#include <cstdint>
#include <string>

namespace lmforge::cli {

/// Stage entry points shared by the subcommands and the end-to-end demo.
/// Every function reads and writes only the paths it is given.

struct CleanArgs {
    std::string in_path;
    std::string out_path;
    std::string report_path;
    std::string seed_corpus_path;
    std::string config_path; // empty = defaults
    int threads = 1;
};
void run_clean(const CleanArgs& args);

void run_train_tokenizer(const std::string& corpus_path, size_t vocab_size,
                         const std::string& out_path);

void run_fertility(const std::string& model_path, const std::string& corpus_path,
                   const std::string& out_path); // out_path empty = stdout only

struct BuildInstructArgs {
    std::string qa_path;
    std::string translated_path;
    std::string templates_path;
    uint64_t seed = 0;
    std::string out_path;
};
void run_build_instruct(const BuildInstructArgs& args);

struct MixArgs {
    std::string spec_path;
    std::string tokenizer_path;
    uint32_t seq_len = 2048;
    std::string out_path;
    uint64_t sequences = 0;     // 0 = about one epoch over the union
    uint64_t seed_override = 0; // nonzero replaces the seed in the spec
};
void run_mix(const MixArgs& args);

void run_init_model(const std::string& config_path, uint64_t seed, const std::string& out_path);

void run_logits(const std::string& ckpt_path, const std::string& tokenizer_path,
                const std::string& text);

struct TrainArgs {
    std::string ckpt_in;
    std::string data_path; // packed.bin for pretrain, instruct.jsonl for finetune
    std::string tokenizer_path; // finetune only
    std::string config_path;
    std::string out_path;
    std::string metrics_path; // empty = "<out>.metrics.jsonl"
};
void run_pretrain(const TrainArgs& args);
void run_finetune(const TrainArgs& args);

struct GenerateArgs {
    std::string ckpt_path;
    std::string tokenizer_path;
    std::string prompt;
    double temperature = 1.0;
    size_t top_k = 0;
    uint64_t seed = 0;
    size_t max_new = 64;
};
std::string run_generate(const GenerateArgs& args);

void run_gen_fixture(const std::string& out_dir, uint64_t seed);

void run_write_templates(const std::string& out_path);

struct DemoArgs {
    std::string workdir;
    uint64_t seed = 7;
    int threads = 1;
};
void run_demo(const DemoArgs& args);

/// Aggregated summary of a demo workdir; throws with the stage to rerun when
/// an artifact is missing. Returns the JSON text.
std::string run_report(const std::string& workdir, const std::string& out_path);

} // namespace lmforge::cli
