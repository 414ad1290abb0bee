#include "lmforge/schedule.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

void TrainConfig::validate() const {
    if (!(min_lr > 0.0) || !(min_lr <= peak_lr))
        throw std::invalid_argument("require 0 < min_lr <= peak_lr");
    if (warmup_steps >= total_steps)
        throw std::invalid_argument("require warmup_steps < total_steps");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
        throw std::invalid_argument("betas must be in (0,1)");
    if (adam_eps <= 0.0) throw std::invalid_argument("adam_eps must be > 0");
    if (global_batch == 0) throw std::invalid_argument("global_batch must be > 0");
    if (grad_clip && *grad_clip <= 0.0)
        throw std::invalid_argument("grad_clip must be > 0 when set");
    if (dtype != "f32" && dtype != "f64")
        throw std::invalid_argument("dtype must be f32 or f64");
}

double lr_at(uint64_t step, const TrainConfig& config) {
    config.validate();
    if (step > config.total_steps)
        throw std::out_of_range("lr_at: step beyond total_steps");
    if (step < config.warmup_steps) {
        return config.peak_lr * static_cast<double>(step) /
               static_cast<double>(config.warmup_steps);
    }
    if (step == config.warmup_steps) return config.peak_lr;
    if (step == config.total_steps) return config.min_lr;
    double progress = static_cast<double>(step - config.warmup_steps) /
                      static_cast<double>(config.total_steps - config.warmup_steps);
    return config.min_lr +
           0.5 * (config.peak_lr - config.min_lr) * (1.0 + std::cos(M_PI * progress));
}

TrainConfig TrainConfig::from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("train config parse error: ") + e.what());
    }
    TrainConfig c;
    c.peak_lr = j.value("peak_lr", c.peak_lr);
    c.min_lr = j.value("min_lr", c.min_lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.total_steps = j.value("total_steps", c.total_steps);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.adam_eps = j.value("adam_eps", c.adam_eps);
    c.global_batch = j.value("global_batch", c.global_batch);
    c.seed = j.value("seed", c.seed);
    if (j.contains("grad_clip") && !j["grad_clip"].is_null())
        c.grad_clip = j["grad_clip"].get<double>();
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    c.separator = j.value("separator", c.separator);
    c.dtype = j.value("dtype", c.dtype);
    c.validate();
    return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open train config: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

std::string TrainConfig::to_json() const {
    nlohmann::ordered_json j;
    j["peak_lr"] = peak_lr;
    j["min_lr"] = min_lr;
    j["warmup_steps"] = warmup_steps;
    j["total_steps"] = total_steps;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["global_batch"] = global_batch;
    j["seed"] = seed;
    if (grad_clip) j["grad_clip"] = *grad_clip;
    else j["grad_clip"] = nullptr;
    j["checkpoint_interval"] = checkpoint_interval;
    j["separator"] = separator;
    j["dtype"] = dtype;
    return j.dump(2);
}

} // namespace lmforge
