#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lmforge/bpe.hpp"
#include "lmforge/version.hpp"
#include "pipeline.hpp"

using namespace lmforge;

int main(int argc, char** argv) {
    CLI::App app{"lmforge: desk-scale Hebrew language model construction pipeline"};
    app.set_version_flag("--version", std::string("lmforge ") + kVersion + " (formats: " +
                                          kTokenizerFormat + ", " + kPackedFormat + ", " +
                                          kCheckpointFormat + ", " + kTemplatesFormat + ")");
    app.require_subcommand(1);

    std::string active_command = "lmforge";

    // clean
    cli::CleanArgs clean_args;
    uint64_t clean_seed = 0;
    auto* clean = app.add_subcommand("clean", "Filter and normalize a raw corpus");
    clean->add_option("--in", clean_args.in_path, "input corpus JSONL")->required();
    clean->add_option("--out", clean_args.out_path, "cleaned corpus JSONL")->required();
    clean->add_option("--report", clean_args.report_path, "cleaning report JSON")->required();
    clean->add_option("--seed-corpus", clean_args.seed_corpus_path, "trusted seed corpus JSONL")
        ->required();
    clean->add_option("--config", clean_args.config_path, "cleaning config JSON");
    clean->add_option("--threads", clean_args.threads, "worker threads");
    clean->add_option("--seed", clean_seed, "unused; accepted for uniformity");

    // train-tokenizer
    std::string tt_in, tt_out;
    size_t tt_vocab = 4096;
    uint64_t tt_seed = 0;
    auto* tt = app.add_subcommand("train-tokenizer", "Train a byte-level BPE tokenizer");
    tt->add_option("--in", tt_in, "corpus JSONL")->required();
    tt->add_option("--vocab-size", tt_vocab, "target vocabulary size")->required();
    tt->add_option("--out", tt_out, "tokenizer model JSON")->required();
    tt->add_option("--seed", tt_seed, "unused; training is deterministic");

    // tokenize
    std::string tok_model, tok_text;
    uint64_t tok_seed = 0;
    auto* tok = app.add_subcommand("tokenize", "Encode a string and print token ids");
    tok->add_option("--model", tok_model, "tokenizer model JSON")->required();
    tok->add_option("--text", tok_text, "text to encode")->required();
    tok->add_option("--seed", tok_seed, "unused");

    // fertility
    std::string fert_model, fert_in, fert_out;
    uint64_t fert_seed = 0;
    auto* fert = app.add_subcommand("fertility", "Tokens-per-word statistics over a corpus");
    fert->add_option("--model", fert_model, "tokenizer model JSON")->required();
    fert->add_option("--in", fert_in, "corpus JSONL")->required();
    fert->add_option("--out", fert_out, "also write the stats JSON here");
    fert->add_option("--seed", fert_seed, "unused");

    // build-instruct
    cli::BuildInstructArgs bi_args;
    auto* bi = app.add_subcommand("build-instruct", "Compile instruct-tuning records");
    bi->add_option("--qa", bi_args.qa_path, "QA records JSONL")->required();
    bi->add_option("--translated", bi_args.translated_path, "translated records JSONL")
        ->required();
    bi->add_option("--templates", bi_args.templates_path, "directive templates JSON")->required();
    bi->add_option("--seed", bi_args.seed, "rng seed");
    bi->add_option("--out", bi_args.out_path, "instruct records JSONL")->required();

    // mix
    cli::MixArgs mix_args;
    auto* mix = app.add_subcommand("mix", "Sample a weighted mixture and pack sequences");
    mix->add_option("--spec", mix_args.spec_path, "mixture spec JSON")->required();
    mix->add_option("--tokenizer", mix_args.tokenizer_path, "tokenizer model JSON")->required();
    mix->add_option("--seq-len", mix_args.seq_len, "packed sequence length")->required();
    mix->add_option("--out", mix_args.out_path, "packed output file")->required();
    mix->add_option("--sequences", mix_args.sequences,
                    "sequences to emit (default: about one epoch)");
    mix->add_option("--seed", mix_args.seed_override,
                    "overrides the seed in the spec when nonzero");

    // init-model
    std::string im_config, im_out;
    uint64_t im_seed = 0;
    auto* im = app.add_subcommand("init-model", "Initialize a model checkpoint");
    im->add_option("--config", im_config, "model config JSON")->required();
    im->add_option("--seed", im_seed, "init seed");
    im->add_option("--out", im_out, "checkpoint path")->required();

    // logits
    std::string lg_ckpt, lg_tok, lg_text;
    uint64_t lg_seed = 0;
    auto* lg = app.add_subcommand("logits", "Debug: print top logits for a text");
    lg->add_option("--ckpt", lg_ckpt, "checkpoint")->required();
    lg->add_option("--tokenizer", lg_tok, "tokenizer model JSON")->required();
    lg->add_option("--text", lg_text, "input text")->required();
    lg->add_option("--seed", lg_seed, "unused");

    // pretrain
    cli::TrainArgs pre_args;
    uint64_t pre_seed = 0;
    auto* pre = app.add_subcommand("pretrain", "Next-token training over packed sequences");
    pre->add_option("--ckpt-in", pre_args.ckpt_in, "input checkpoint")->required();
    pre->add_option("--data", pre_args.data_path, "packed training file")->required();
    pre->add_option("--config", pre_args.config_path, "train config JSON")->required();
    pre->add_option("--out", pre_args.out_path, "output checkpoint")->required();
    pre->add_option("--metrics", pre_args.metrics_path, "metrics JSONL path");
    pre->add_option("--seed", pre_seed, "unused; the train config carries the seed");

    // finetune
    cli::TrainArgs ft_args;
    uint64_t ft_seed = 0;
    auto* ft = app.add_subcommand("finetune", "Instruction tuning with response-only loss");
    ft->add_option("--ckpt-in", ft_args.ckpt_in, "input checkpoint")->required();
    ft->add_option("--instruct", ft_args.data_path, "instruct records JSONL")->required();
    ft->add_option("--tokenizer", ft_args.tokenizer_path, "tokenizer model JSON")->required();
    ft->add_option("--config", ft_args.config_path, "train config JSON")->required();
    ft->add_option("--out", ft_args.out_path, "output checkpoint")->required();
    ft->add_option("--metrics", ft_args.metrics_path, "metrics JSONL path");
    ft->add_option("--seed", ft_seed, "unused; the train config carries the seed");

    // generate
    cli::GenerateArgs gen_args;
    auto* gen = app.add_subcommand("generate", "Sample a continuation from a checkpoint");
    gen->add_option("--ckpt", gen_args.ckpt_path, "checkpoint")->required();
    gen->add_option("--tokenizer", gen_args.tokenizer_path, "tokenizer model JSON")->required();
    gen->add_option("--prompt", gen_args.prompt, "prompt text")->required();
    gen->add_option("--temperature", gen_args.temperature, "0 = greedy");
    gen->add_option("--top-k", gen_args.top_k, "0 = full distribution");
    gen->add_option("--seed", gen_args.seed, "sampling seed");
    gen->add_option("--max-new", gen_args.max_new, "maximum new tokens");

    // gen-fixture
    std::string gf_dir;
    uint64_t gf_seed = 7;
    auto* gf = app.add_subcommand("gen-fixture", "Write the synthetic fixture corpus");
    gf->add_option("--out-dir", gf_dir, "output directory")->required();
    gf->add_option("--seed", gf_seed, "fixture seed");

    // write-templates
    std::string wt_out;
    uint64_t wt_seed = 0;
    auto* wt = app.add_subcommand("write-templates", "Write the default directive templates");
    wt->add_option("--out", wt_out, "templates JSON path")->required();
    wt->add_option("--seed", wt_seed, "unused");

    // demo
    cli::DemoArgs demo_args;
    auto* demo = app.add_subcommand("demo", "End-to-end pipeline on the fixture corpus");
    demo->add_option("--workdir", demo_args.workdir, "working directory")->required();
    demo->add_option("--seed", demo_args.seed, "global seed");
    demo->add_option("--threads", demo_args.threads, "threads for parallel stages");

    // report
    std::string rp_workdir, rp_out;
    uint64_t rp_seed = 0;
    auto* rp = app.add_subcommand("report", "Aggregate stage metrics from a workdir");
    rp->add_option("--workdir", rp_workdir, "demo working directory")->required();
    rp->add_option("--out", rp_out, "also write the report JSON here");
    rp->add_option("--seed", rp_seed, "unused");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the usage message
        return 2;
    }

    try {
        if (*clean) {
            active_command = "clean";
            cli::run_clean(clean_args);
        } else if (*tt) {
            active_command = "train-tokenizer";
            cli::run_train_tokenizer(tt_in, tt_vocab, tt_out);
        } else if (*tok) {
            active_command = "tokenize";
            // Encode and print ids as a JSON array.
            auto model = lmforge::load_model(tok_model);
            auto ids = lmforge::encode(model, tok_text);
            nlohmann::json j = ids;
            std::cout << j.dump() << "\n";
        } else if (*fert) {
            active_command = "fertility";
            cli::run_fertility(fert_model, fert_in, fert_out);
        } else if (*bi) {
            active_command = "build-instruct";
            cli::run_build_instruct(bi_args);
        } else if (*mix) {
            active_command = "mix";
            cli::run_mix(mix_args);
        } else if (*im) {
            active_command = "init-model";
            cli::run_init_model(im_config, im_seed, im_out);
        } else if (*lg) {
            active_command = "logits";
            cli::run_logits(lg_ckpt, lg_tok, lg_text);
        } else if (*pre) {
            active_command = "pretrain";
            cli::run_pretrain(pre_args);
        } else if (*ft) {
            active_command = "finetune";
            cli::run_finetune(ft_args);
        } else if (*gen) {
            active_command = "generate";
            cli::run_generate(gen_args);
        } else if (*gf) {
            active_command = "gen-fixture";
            cli::run_gen_fixture(gf_dir, gf_seed);
        } else if (*wt) {
            active_command = "write-templates";
            cli::run_write_templates(wt_out);
        } else if (*demo) {
            active_command = "demo";
            cli::run_demo(demo_args);
        } else if (*rp) {
            active_command = "report";
            cli::run_report(rp_workdir, rp_out);
        }
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["command"] = active_command;
        err["error"] = e.what();
        std::cerr << err.dump() << std::endl;
        return 1;
    }
    return 0;
}
