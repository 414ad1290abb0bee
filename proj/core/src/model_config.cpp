#include "lmforge/model_config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

void ModelConfig::validate() const {
    if (vocab_size == 0) throw std::invalid_argument("vocab_size must be > 0");
    if (seq_len < 2) throw std::invalid_argument("seq_len must be >= 2");
    if (num_layers == 0) throw std::invalid_argument("num_layers must be > 0");
    if (heads == 0 || hidden % heads != 0)
        throw std::invalid_argument("hidden must be divisible by heads");
    if (intermediate == 0) throw std::invalid_argument("intermediate must be > 0");
    if (rotary_fraction <= 0.0 || rotary_fraction > 1.0)
        throw std::invalid_argument("rotary_fraction must be in (0,1]");
    if (rope_base <= 1.0) throw std::invalid_argument("rope_base must be > 1");
    if (ln_epsilon <= 0.0) throw std::invalid_argument("ln_epsilon must be > 0");
}

ModelConfig ModelConfig::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("model config parse error: ") + e.what());
    }
    ModelConfig c;
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.hidden = j.value("hidden", c.hidden);
    c.intermediate = j.value("intermediate", c.intermediate);
    c.heads = j.value("heads", c.heads);
    c.rotary_fraction = j.value("rotary_fraction", c.rotary_fraction);
    c.rope_base = j.value("rope_base", c.rope_base);
    c.ln_epsilon = j.value("ln_epsilon", c.ln_epsilon);
    c.use_biases = j.value("use_biases", c.use_biases);
    c.validate();
    return c;
}

ModelConfig ModelConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string ModelConfig::to_json() const {
    nlohmann::ordered_json j;
    j["vocab_size"] = vocab_size;
    j["seq_len"] = seq_len;
    j["num_layers"] = num_layers;
    j["hidden"] = hidden;
    j["intermediate"] = intermediate;
    j["heads"] = heads;
    j["rotary_fraction"] = rotary_fraction;
    j["rope_base"] = rope_base;
    j["ln_epsilon"] = ln_epsilon;
    j["use_biases"] = use_biases;
    return j.dump();
}

} // namespace lmforge
