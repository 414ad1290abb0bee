#include "pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "lmforge/bpe.hpp"
#include "lmforge/checkpoint.hpp"
#include "lmforge/cleaner.hpp"
#include "lmforge/fixture.hpp"
#include "lmforge/instruct.hpp"
#include "lmforge/mixer.hpp"
#include "lmforge/trainer.hpp"
#include "lmforge/version.hpp"

namespace fs = std::filesystem;

namespace lmforge::cli {

namespace {

void log_stage(const std::string& stage, const std::string& message) {
    bool color = std::getenv("NO_COLOR") == nullptr && isatty(fileno(stderr));
    if (color)
        std::cerr << "\x1b[36m[" << stage << "]\x1b[0m " << message << "\n";
    else
        std::cerr << "[" << stage << "] " << message << "\n";
}

std::string slurp_file(const std::string& path, const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + what + ": " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << content;
}

} // namespace

void run_clean(const CleanArgs& args) {
    CleaningConfig config =
        args.config_path.empty() ? CleaningConfig{} : CleaningConfig::from_json_file(args.config_path);
    config.validate();

    std::vector<Document> seed = read_documents(args.seed_corpus_path);
    CleaningModel model = CleaningModel::build(seed, config);
    log_stage("clean", "perplexity threshold " + std::to_string(model.perplexity_threshold));

    std::string jsonl = slurp_file(args.in_path, "corpus");
    CleaningResult result = clean_corpus_jsonl(jsonl, model, config, args.threads);

    write_documents(args.out_path, result.docs);
    write_file(args.report_path, result.report.to_json() + "\n");
    log_stage("clean", "kept " + std::to_string(result.report.kept_docs) + "/" +
                           std::to_string(result.report.total_docs) + " documents");
}

void run_train_tokenizer(const std::string& corpus_path, size_t vocab_size,
                         const std::string& out_path) {
    std::vector<Document> corpus = read_documents(corpus_path);
    TokenizerModel model = train_bpe(corpus, vocab_size);
    save_model(model, out_path);
    log_stage("train-tokenizer", "vocab " + std::to_string(model.vocab.size()) + ", " +
                                     std::to_string(model.merges.size()) + " merges");
}

void run_fertility(const std::string& model_path, const std::string& corpus_path,
                   const std::string& out_path) {
    TokenizerModel model = load_model(model_path);
    std::vector<Document> corpus = read_documents(corpus_path);
    FertilityStats stats = fertility(model, corpus);
    std::string json = stats.to_json();
    std::cout << json << "\n";
    if (!out_path.empty()) write_file(out_path, json + "\n");
}

void run_build_instruct(const BuildInstructArgs& args) {
    TemplateRegistry registry = TemplateRegistry::from_json_file(args.templates_path);
    std::vector<QARecord> qa = read_qa_records(args.qa_path);
    auto translated = read_translated_records(args.translated_path);
    auto records = build_instruct_corpus(qa, translated, registry, args.seed);
    write_instruct_records(args.out_path, records);
    log_stage("build-instruct", std::to_string(records.size()) + " instruct records");
}

void run_mix(const MixArgs& args) {
    MixtureSpec spec = MixtureSpec::from_json_file(args.spec_path);
    if (args.seed_override != 0) spec.seed = args.seed_override;
    TokenizerModel tokenizer = load_model(args.tokenizer_path);

    std::vector<std::vector<Document>> corpora;
    uint64_t total_tokens = 0;
    std::vector<std::vector<std::vector<TokenId>>> encoded(spec.components.size());
    for (size_t c = 0; c < spec.components.size(); ++c) {
        corpora.push_back(read_documents(spec.components[c].path));
        encoded[c].reserve(corpora.back().size());
        for (const auto& doc : corpora.back()) {
            encoded[c].push_back(encode(tokenizer, doc.text));
            total_tokens += encoded[c].back().size() + 1; // +1 for eod
        }
    }

    uint64_t target_sequences =
        args.sequences > 0 ? args.sequences : std::max<uint64_t>(1, total_tokens / args.seq_len);

    MixtureSampler sampler(spec, corpora);
    SequencePacker packer(args.seq_len, tokenizer.eod_id());
    while (packer.sequences_emitted() < target_sequences) {
        auto draw = sampler.next();
        packer.add_document(encoded[draw.component][draw.index], draw.component);
    }

    auto sequences = packer.take_sequences();
    sequences.resize(target_sequences);

    PackedHeader header;
    header.seq_len = args.seq_len;
    header.eod_id = tokenizer.eod_id();
    uint64_t attributed = 0;
    for (uint64_t n : packer.source_token_counts()) attributed += n;
    for (size_t c = 0; c < spec.components.size(); ++c) {
        header.component_paths.push_back(spec.components[c].path);
        double frac = attributed == 0 ? 0.0
                                      : static_cast<double>(packer.source_token_counts()[c]) /
                                            static_cast<double>(attributed);
        header.component_token_fractions.push_back(frac);
    }
    write_packed(args.out_path, header, sequences);
    log_stage("mix", std::to_string(sequences.size()) + " sequences of " +
                         std::to_string(args.seq_len));
}

void run_init_model(const std::string& config_path, uint64_t seed, const std::string& out_path) {
    ModelConfig config = ModelConfig::from_json_file(config_path);
    ModelParams<float> params = init_params<float>(config, seed);
    save_checkpoint(params, out_path);
    log_stage("init-model", std::to_string(params.layout.total_size) + " parameters");
}

void run_logits(const std::string& ckpt_path, const std::string& tokenizer_path,
                const std::string& text) {
    ModelParams<float> params = load_checkpoint<float>(ckpt_path);
    TokenizerModel tokenizer = load_model(tokenizer_path);
    std::vector<TokenId> tokens = encode(tokenizer, text);
    if (tokens.empty()) throw std::runtime_error("logits: text encodes to nothing");
    auto logits = forward(params, std::span<const TokenId>(tokens));

    const size_t V = params.config.vocab_size;
    const float* last = logits.data() + (tokens.size() - 1) * V;
    std::vector<uint32_t> order(V);
    for (size_t v = 0; v < V; ++v) order[v] = static_cast<uint32_t>(v);
    std::partial_sort(order.begin(), order.begin() + std::min<size_t>(10, V), order.end(),
                      [&](uint32_t a, uint32_t b) { return last[a] > last[b]; });

    nlohmann::ordered_json j;
    j["tokens"] = tokens.size();
    j["vocab"] = V;
    auto& top = j["last_position_top10"] = nlohmann::ordered_json::array();
    for (size_t r = 0; r < std::min<size_t>(10, V); ++r) {
        top.push_back({{"id", order[r]},
                       {"token", decode(tokenizer, {order[r]})},
                       {"logit", last[order[r]]}});
    }
    std::cout << j.dump(2) << "\n";
}

namespace {

template <typename Run>
void run_train_common(const TrainArgs& args, Run run) {
    TrainConfig config = TrainConfig::from_json_file(args.config_path);
    std::string metrics_path =
        args.metrics_path.empty() ? args.out_path + ".metrics.jsonl" : args.metrics_path;
    MetricsWriter writer(metrics_path);
    run(config, MetricsSink(writer));
}

} // namespace

void run_pretrain(const TrainArgs& args) {
    PackedDataset data = read_packed(args.data_path);
    run_train_common(args, [&](const TrainConfig& config, const MetricsSink& sink) {
        if (config.dtype == "f64") {
            auto params = load_checkpoint<double>(args.ckpt_in);
            auto out = train_pretrain(std::move(params), data, config, sink, args.out_path);
            log_stage("pretrain", "final loss " + std::to_string(out.final_loss));
        } else {
            auto params = load_checkpoint<float>(args.ckpt_in);
            auto out = train_pretrain(std::move(params), data, config, sink, args.out_path);
            log_stage("pretrain", "final loss " + std::to_string(out.final_loss));
        }
    });
}

void run_finetune(const TrainArgs& args) {
    TokenizerModel tokenizer = load_model(args.tokenizer_path);
    std::vector<InstructRecord> records = read_instruct_records(args.data_path);
    run_train_common(args, [&](const TrainConfig& config, const MetricsSink& sink) {
        if (config.dtype == "f64") {
            auto params = load_checkpoint<double>(args.ckpt_in);
            auto out =
                train_finetune(std::move(params), records, tokenizer, config, sink, args.out_path);
            log_stage("finetune", "final loss " + std::to_string(out.final_loss) + ", skipped " +
                                      std::to_string(out.skipped_records));
        } else {
            auto params = load_checkpoint<float>(args.ckpt_in);
            auto out =
                train_finetune(std::move(params), records, tokenizer, config, sink, args.out_path);
            log_stage("finetune", "final loss " + std::to_string(out.final_loss) + ", skipped " +
                                      std::to_string(out.skipped_records));
        }
    });
}

std::string run_generate(const GenerateArgs& args) {
    ModelParams<float> params = load_checkpoint<float>(args.ckpt_path);
    TokenizerModel tokenizer = load_model(args.tokenizer_path);
    GenerateOptions options;
    options.temperature = args.temperature;
    options.top_k = args.top_k;
    options.seed = args.seed;
    options.max_new = args.max_new;
    std::string continuation = generate(params, tokenizer, args.prompt, options);
    std::cout << continuation << "\n";
    return continuation;
}

void run_gen_fixture(const std::string& out_dir, uint64_t seed) {
    FixtureOptions options;
    options.seed = seed;
    write_fixture(generate_fixture(options), out_dir);
    log_stage("gen-fixture", "fixture corpus written to " + out_dir);
}

void run_write_templates(const std::string& out_path) {
    write_file(out_path, TemplateRegistry::builtin_default().to_json() + "\n");
}

void run_demo(const DemoArgs& args) {
    fs::create_directories(args.workdir);
    auto at = [&](const char* name) { return (fs::path(args.workdir) / name).string(); };
    std::string fixture_dir = (fs::path(args.workdir) / "fixture").string();

    log_stage("demo", "1/8 fixture corpus");
    run_gen_fixture(fixture_dir, args.seed);
    run_write_templates(at("templates.json"));
    write_file(at("cleaning_config.json"), CleaningConfig{}.to_json() + "\n");

    log_stage("demo", "2/8 clean");
    CleanArgs clean_args;
    clean_args.in_path = (fs::path(fixture_dir) / "modern_raw.jsonl").string();
    clean_args.out_path = at("cleaned.jsonl");
    clean_args.report_path = at("clean_report.json");
    clean_args.seed_corpus_path = (fs::path(fixture_dir) / "seed.jsonl").string();
    clean_args.config_path = at("cleaning_config.json");
    clean_args.threads = args.threads;
    run_clean(clean_args);

    log_stage("demo", "3/8 train-tokenizer");
    run_train_tokenizer(at("cleaned.jsonl"), 4096, at("tokenizer.json"));

    log_stage("demo", "4/8 fertility");
    run_fertility(at("tokenizer.json"), at("cleaned.jsonl"), at("fertility.json"));

    log_stage("demo", "5/8 build-instruct");
    BuildInstructArgs bi;
    bi.qa_path = (fs::path(fixture_dir) / "qa.jsonl").string();
    bi.translated_path = (fs::path(fixture_dir) / "translated.jsonl").string();
    bi.templates_path = at("templates.json");
    bi.seed = args.seed;
    bi.out_path = at("instruct.jsonl");
    run_build_instruct(bi);

    log_stage("demo", "6/8 mix");
    {
        MixtureSpec spec;
        spec.components = {{at("cleaned.jsonl"), 0.5},
                           {(fs::path(fixture_dir) / "rabbinic.jsonl").string(), 0.5}};
        spec.seed = args.seed;
        write_file(at("mixture.json"), spec.to_json() + "\n");
    }
    MixArgs mix_args;
    mix_args.spec_path = at("mixture.json");
    mix_args.tokenizer_path = at("tokenizer.json");
    mix_args.seq_len = 128;
    mix_args.out_path = at("packed.bin");
    run_mix(mix_args);

    log_stage("demo", "7/8 pretrain + finetune");
    {
        ModelConfig mc;
        mc.vocab_size = 4096;
        mc.seq_len = 128;
        mc.num_layers = 4;
        mc.hidden = 128;
        mc.intermediate = 340;
        mc.heads = 4;
        write_file(at("model_config.json"), mc.to_json() + "\n");

        TrainConfig pre;
        pre.peak_lr = 1e-3;
        pre.min_lr = 1e-4;
        pre.warmup_steps = 10;
        pre.total_steps = 100;
        pre.global_batch = 4;
        pre.seed = args.seed;
        write_file(at("pretrain_config.json"), pre.to_json() + "\n");

        // Finetune defaults: a tenth of the pretrain steps at a tenth of
        // the learning rate.
        TrainConfig ft = pre;
        ft.peak_lr = 1e-4;
        ft.min_lr = 1e-5;
        ft.warmup_steps = 2;
        ft.total_steps = 10;
        write_file(at("finetune_config.json"), ft.to_json() + "\n");
    }
    run_init_model(at("model_config.json"), args.seed, at("init.ckpt"));

    TrainArgs pre_args;
    pre_args.ckpt_in = at("init.ckpt");
    pre_args.data_path = at("packed.bin");
    pre_args.config_path = at("pretrain_config.json");
    pre_args.out_path = at("pretrain.ckpt");
    pre_args.metrics_path = at("pretrain_metrics.jsonl");
    run_pretrain(pre_args);

    TrainArgs ft_args;
    ft_args.ckpt_in = at("pretrain.ckpt");
    ft_args.data_path = at("instruct.jsonl");
    ft_args.tokenizer_path = at("tokenizer.json");
    ft_args.config_path = at("finetune_config.json");
    ft_args.out_path = at("finetune.ckpt");
    ft_args.metrics_path = at("finetune_metrics.jsonl");
    run_finetune(ft_args);

    log_stage("demo", "8/8 generate + report");
    {
        std::vector<Document> cleaned = read_documents(at("cleaned.jsonl"));
        std::string prompt = cleaned.front().text.substr(0, 40);
        // Avoid cutting a UTF-8 sequence.
        while (!prompt.empty() && (static_cast<unsigned char>(prompt.back()) & 0xC0) == 0x80)
            prompt.pop_back();
        GenerateArgs gen;
        gen.ckpt_path = at("finetune.ckpt");
        gen.tokenizer_path = at("tokenizer.json");
        gen.prompt = prompt;
        gen.temperature = 0.0;
        gen.max_new = 32;
        gen.seed = args.seed;
        std::string continuation = run_generate(gen);
        write_file(at("generation.txt"), prompt + continuation + "\n");
    }
    std::string report = run_report(args.workdir, at("report.json"));
    log_stage("demo", "complete; report at " + at("report.json"));
}

std::string run_report(const std::string& workdir, const std::string& out_path) {
    auto at = [&](const char* name) { return (fs::path(workdir) / name).string(); };
    auto require = [&](const char* name, const char* stage) {
        std::string path = at(name);
        if (!fs::exists(path))
            throw std::runtime_error("missing artifact " + std::string(name) +
                                     ": rerun the " + stage + " stage");
        return path;
    };

    nlohmann::ordered_json j;
    j["version"] = kVersion;

    {
        CleaningReport r = CleaningReport::from_json_file(require("clean_report.json", "clean"));
        j["cleaning"] = nlohmann::ordered_json::parse(r.to_json());
    }
    {
        std::string raw = slurp_file(require("fertility.json", "fertility"), "fertility stats");
        j["fertility"] = nlohmann::ordered_json::parse(raw);
    }
    {
        PackedDataset ds = read_packed(require("packed.bin", "mix"));
        auto& mix = j["mixture"] = nlohmann::ordered_json::array();
        for (size_t c = 0; c < ds.header.component_paths.size(); ++c)
            mix.push_back({{"path", ds.header.component_paths[c]},
                           {"token_fraction", ds.header.component_token_fractions[c]}});
    }
    auto last_metrics = [&](const std::string& path) {
        std::ifstream in(path);
        std::string line, last;
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        if (last.empty()) throw std::runtime_error("empty metrics log: " + path);
        return nlohmann::ordered_json::parse(last);
    };
    j["pretrain"] = last_metrics(require("pretrain_metrics.jsonl", "pretrain"));
    j["finetune"] = last_metrics(require("finetune_metrics.jsonl", "finetune"));

    std::string text = j.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) write_file(out_path, text + "\n");
    return text;
}

} // namespace lmforge::cli
