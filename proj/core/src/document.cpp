#include "lmforge/document.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

namespace {

bool parse_line(const std::string& line, Document& doc) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) return false;
    if (!j.contains("id") || !j.contains("text")) return false;
    if (!j["id"].is_string() || !j["text"].is_string()) return false;
    doc.id = j["id"].get<std::string>();
    doc.text = j["text"].get<std::string>();
    doc.source = j.value("source", std::string{});
    return true;
}

} // namespace

std::vector<Document> parse_documents(const std::string& jsonl, JsonlReadStats* stats) {
    std::vector<Document> docs;
    JsonlReadStats local;
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        ++local.lines;
        Document doc;
        if (parse_line(line, doc)) {
            docs.push_back(std::move(doc));
            ++local.records;
        } else {
            ++local.malformed;
        }
    }
    if (stats) *stats = local;
    return docs;
}

std::vector<Document> read_documents(const std::string& path, JsonlReadStats* stats) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_documents(buf.str(), stats);
}

std::string documents_to_jsonl(const std::vector<Document>& docs) {
    std::string out;
    for (const auto& doc : docs) {
        nlohmann::ordered_json j;
        j["id"] = doc.id;
        j["source"] = doc.source;
        j["text"] = doc.text;
        out += j.dump();
        out += '\n';
    }
    return out;
}

void write_documents(const std::string& path, const std::vector<Document>& docs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write corpus file: " + path);
    out << documents_to_jsonl(docs);
}

} // namespace lmforge
