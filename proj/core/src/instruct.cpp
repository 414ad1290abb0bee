#include "lmforge/instruct.hpp"

#include "lmforge/sentences.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

namespace {

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

/// Byte span [start, start+len) -> the context sentence holding its start.
std::string supporting_sentence(const std::string& context, size_t answer_start) {
    SentenceSegments segs = segment_sentences(context);
    size_t offset = segs.leading.size();
    std::string best = segs.sentences.empty() ? context : segs.sentences.front().text;
    for (const auto& span : segs.sentences) {
        if (offset <= answer_start) best = span.text;
        else break;
        offset += span.text.size() + span.separator.size();
    }
    return best;
}

ResponseTransform transform_from_string(const std::string& name, const std::string& origin) {
    if (name == "identity") return ResponseTransform::Identity;
    if (name == "wrap-in-sentence") return ResponseTransform::WrapInSentence;
    if (name == "append-supporting-sentence") return ResponseTransform::AppendSupportingSentence;
    if (name == "sentence-count") return ResponseTransform::SentenceCount;
    throw std::runtime_error(origin + ": unknown response transform '" + name + "'");
}

const char* transform_to_string(ResponseTransform t) {
    switch (t) {
        case ResponseTransform::Identity: return "identity";
        case ResponseTransform::WrapInSentence: return "wrap-in-sentence";
        case ResponseTransform::AppendSupportingSentence: return "append-supporting-sentence";
        case ResponseTransform::SentenceCount: return "sentence-count";
    }
    return "identity";
}

} // namespace

void QARecord::validate() const {
    if (question.empty()) throw std::invalid_argument("qa record: empty question");
    if (answer_span.empty()) throw std::invalid_argument("qa record: empty answer span");
    if (answer_start + answer_span.size() > context.size() ||
        context.compare(answer_start, answer_span.size(), answer_span) != 0)
        throw std::invalid_argument("qa record: answer span not found at answer_start");
}

TemplateRegistry TemplateRegistry::builtin_default() {
    // Placeholder Hebrew wording; production phrasing is expected to replace
    // these via the templates file (see README).
    TemplateRegistry reg;
    reg.base_instruction = "אנא קראו את הפסקה הבאה וענו על השאלה שאחריה.";
    reg.separator = "";
    reg.qa_directives = {
        {"short-answer", "ענו בקצרה ולעניין.", ResponseTransform::Identity, ""},
        {"full-sentence", "ענו במשפט מלא.", ResponseTransform::WrapInSentence,
         "התשובה היא {answer}."},
        {"cite-support", "אנא צטטו את המשפט מן הפסקה התומך בתשובתכם.",
         ResponseTransform::AppendSupportingSentence, ""},
        {"answer-in-x-sentences", "ענו ב-{n} משפטים בדיוק.", ResponseTransform::SentenceCount,
         ""},
    };
    reg.concise_text = "אנא ענו בתמציתיות.";
    reg.expand_text = "אנא הרחיבו בתשובתכם.";
    reg.exact_count_text = "ענו ב-{n} משפטים בדיוק.";
    return reg;
}

std::string TemplateRegistry::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = "templates-v1";
    j["base_instruction"] = base_instruction;
    j["separator"] = separator;
    auto& dirs = j["qa_directives"] = nlohmann::ordered_json::array();
    for (const auto& d : qa_directives) {
        nlohmann::ordered_json dj;
        dj["name"] = d.name;
        dj["system"] = d.system_text;
        dj["transform"] = transform_to_string(d.transform);
        if (!d.pattern.empty()) dj["pattern"] = d.pattern;
        dirs.push_back(dj);
    }
    j["length_directives"] = {
        {"concise", concise_text}, {"expand", expand_text}, {"exact_count", exact_count_text}};
    return j.dump(2);
}

TemplateRegistry TemplateRegistry::from_json(const std::string& json_text,
                                             const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(origin + ": templates parse error: " + e.what());
    }
    if (j.value("version", "") != std::string("templates-v1"))
        throw std::runtime_error(origin + ": unsupported templates version");
    TemplateRegistry reg;
    reg.base_instruction = j.at("base_instruction").get<std::string>();
    reg.separator = j.value("separator", "");
    for (const auto& dj : j.at("qa_directives")) {
        DirectiveTemplate d;
        d.name = dj.at("name").get<std::string>();
        d.system_text = dj.at("system").get<std::string>();
        d.transform = transform_from_string(dj.at("transform").get<std::string>(), origin);
        d.pattern = dj.value("pattern", "");
        if (d.transform == ResponseTransform::WrapInSentence &&
            d.pattern.find("{answer}") == std::string::npos)
            throw std::runtime_error(origin + ": wrap-in-sentence directive '" + d.name +
                                     "' needs an {answer} placeholder");
        reg.qa_directives.push_back(std::move(d));
    }
    if (reg.qa_directives.empty())
        throw std::runtime_error(origin + ": qa_directives must not be empty");
    const auto& ld = j.at("length_directives");
    reg.concise_text = ld.at("concise").get<std::string>();
    reg.expand_text = ld.at("expand").get<std::string>();
    reg.exact_count_text = ld.at("exact_count").get<std::string>();
    if (reg.exact_count_text.find("{n}") == std::string::npos)
        throw std::runtime_error(origin + ": exact_count directive needs an {n} placeholder");
    return reg;
}

TemplateRegistry TemplateRegistry::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open templates file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str(), path);
}

InstructRecord format_qa(const QARecord& rec, const TemplateRegistry& registry, Rng& rng) {
    rec.validate();
    InstructRecord out;
    out.prompt = rec.context + "\n" + rec.question;

    bool with_directive = rng.uniform() < kDirectiveProbability;
    if (!with_directive) {
        out.system = registry.base_instruction;
        out.response = rec.answer_span;
        return out;
    }

    const DirectiveTemplate& d =
        registry.qa_directives[rng.uniform_u64(registry.qa_directives.size())];
    size_t sentence_count = std::max<size_t>(1, split_sentences(rec.answer_span).size());
    out.system = registry.base_instruction + " " +
                 replace_all(d.system_text, "{n}", std::to_string(sentence_count));
    switch (d.transform) {
        case ResponseTransform::Identity:
        case ResponseTransform::SentenceCount:
            out.response = rec.answer_span;
            break;
        case ResponseTransform::WrapInSentence:
            out.response = replace_all(d.pattern, "{answer}", rec.answer_span);
            break;
        case ResponseTransform::AppendSupportingSentence:
            out.response =
                rec.answer_span + " — " + supporting_sentence(rec.context, rec.answer_start);
            break;
    }
    return out;
}

LengthDirective length_directive(const std::string& response, const TemplateRegistry& registry,
                                 Rng& rng) {
    if (response.empty()) throw std::invalid_argument("length_directive: empty response");
    size_t s = std::max<size_t>(1, split_sentences(response).size());
    std::string exact = replace_all(registry.exact_count_text, "{n}", std::to_string(s));
    bool pick_exact = rng.uniform_u64(2) == 1;
    if (pick_exact) return {"exact-count", exact};
    if (s <= 2) return {"concise", registry.concise_text};
    return {"expand", registry.expand_text};
}

std::vector<InstructRecord> expand_translated(const std::string& question,
                                              const std::string& response,
                                              const TemplateRegistry& registry, Rng& rng) {
    if (question.empty()) throw std::invalid_argument("expand_translated: empty question");
    if (response.empty()) throw std::invalid_argument("expand_translated: empty response");

    std::vector<InstructRecord> out;
    out.push_back({std::nullopt, question, response});

    LengthDirective first = length_directive(response, registry, rng);
    size_t s = std::max<size_t>(1, split_sentences(response).size());
    LengthDirective second;
    if (first.name == "exact-count") {
        second = s <= 2 ? LengthDirective{"concise", registry.concise_text}
                        : LengthDirective{"expand", registry.expand_text};
    } else {
        second = {"exact-count", replace_all(registry.exact_count_text, "{n}", std::to_string(s))};
    }
    out.push_back({first.system_text, question, response});
    out.push_back({second.system_text, question, response});
    return out;
}

std::vector<QARecord> read_qa_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open qa file: " + path);
    std::vector<QARecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad qa record");
        QARecord rec;
        rec.context = j.at("context").get<std::string>();
        rec.question = j.at("question").get<std::string>();
        rec.answer_span = j.at("answer").get<std::string>();
        rec.answer_start = j.at("answer_start").get<size_t>();
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> read_translated_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open translated file: " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad translated record");
        out.emplace_back(j.at("question").get<std::string>(),
                         j.at("response").get<std::string>());
    }
    return out;
}

void write_instruct_records(const std::string& path, const std::vector<InstructRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write instruct file: " + path);
    for (const auto& rec : records) {
        nlohmann::ordered_json j;
        if (rec.system) j["system"] = *rec.system;
        else j["system"] = nullptr;
        j["prompt"] = rec.prompt;
        j["response"] = rec.response;
        out << j.dump() << '\n';
    }
}

std::vector<InstructRecord> read_instruct_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open instruct file: " + path);
    std::vector<InstructRecord> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad instruct record");
        InstructRecord rec;
        if (j.contains("system") && !j["system"].is_null())
            rec.system = j["system"].get<std::string>();
        rec.prompt = j.at("prompt").get<std::string>();
        rec.response = j.at("response").get<std::string>();
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<InstructRecord> build_instruct_corpus(
    const std::vector<QARecord>& qa,
    const std::vector<std::pair<std::string, std::string>>& translated,
    const TemplateRegistry& registry, uint64_t seed) {
    std::vector<InstructRecord> out;
    out.reserve(qa.size() + translated.size() * 3);
    for (size_t i = 0; i < qa.size(); ++i) {
        Rng rng = record_rng(seed, "qa:" + std::to_string(i));
        out.push_back(format_qa(qa[i], registry, rng));
    }
    for (size_t i = 0; i < translated.size(); ++i) {
        Rng rng = record_rng(seed, "tr:" + std::to_string(i));
        auto triple = expand_translated(translated[i].first, translated[i].second, registry, rng);
        out.insert(out.end(), triple.begin(), triple.end());
    }
    return out;
}

} // namespace lmforge
