#include "qrw/text.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qrw/error.hpp"

namespace qrw {

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

namespace {

const std::unordered_set<std::string>& stopword_set() {
    static const std::unordered_set<std::string> words = {
        "a",    "an",   "and",  "are",  "as",    "at",    "be",    "but",  "by",   "for",
        "from", "had",  "has",  "have", "he",    "her",   "his",   "if",   "in",   "into",
        "is",   "it",   "its",  "no",   "not",   "of",    "on",    "or",   "she",  "such",
        "that", "the",  "their", "then", "there", "these", "they",  "this", "to",   "was",
        "were", "will", "with", "we",   "you",   "your",  "i",     "our",  "us",   "them"};
    return words;
}

}  // namespace

bool is_stopword(const std::string& token) { return stopword_set().count(token) > 0; }

TokenId Vocabulary::add(const std::string& surface) {
    auto it = ids_.find(surface);
    if (it != ids_.end()) return it->second;
    auto id = static_cast<TokenId>(surfaces_.size());
    ids_.emplace(surface, id);
    surfaces_.push_back(surface);
    df_.push_back(0);
    return id;
}

TokenId Vocabulary::id_of(const std::string& surface) const {
    auto it = ids_.find(surface);
    return it == ids_.end() ? kNoToken : it->second;
}

const std::string& Vocabulary::surface_of(TokenId id) const { return surfaces_.at(id); }

Corpus Corpus::build(std::vector<std::pair<std::string, std::string>> id_text_pairs) {
    Corpus corpus;
    std::unordered_set<std::string> seen_ids;
    seen_ids.reserve(id_text_pairs.size());

    for (auto& [doc_id, text] : id_text_pairs) {
        if (!seen_ids.insert(doc_id).second)
            throw DataError("duplicate doc_id: " + doc_id);
        Document doc;
        doc.doc_id = std::move(doc_id);
        auto tokens = tokenize(text);
        doc.text = std::move(text);
        doc.tokens.reserve(tokens.size());

        std::unordered_set<TokenId> distinct;
        for (const auto& tok : tokens) {
            TokenId id = corpus.vocab_.add(tok);
            if (id >= corpus.collection_tf_.size()) corpus.collection_tf_.push_back(0);
            corpus.collection_tf_[id] += 1;
            corpus.total_tokens_ += 1;
            doc.tokens.push_back(id);
            distinct.insert(id);
        }
        for (TokenId id : distinct) corpus.vocab_.bump_df(id);
        corpus.documents_.push_back(std::move(doc));
    }
    return corpus;
}

Corpus load_corpus_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);

    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(line_no) + ": parse error: " + e.what());
        }
        if (!obj.contains("id") || !obj["id"].is_string())
            throw DataError(path + ":" + std::to_string(line_no) + ": missing string field \"id\"");
        if (!obj.contains("text") || !obj["text"].is_string())
            throw DataError(path + ":" + std::to_string(line_no) + ": missing string field \"text\"");
        pairs.emplace_back(obj["id"].get<std::string>(), obj["text"].get<std::string>());
    }
    try {
        return Corpus::build(std::move(pairs));
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

QuerySet load_queries_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open queries file: " + path);
    QuerySet qs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected query_id<TAB>text");
        qs.queries.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return qs;
}

void save_queries_tsv(const QuerySet& queries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write queries file: " + path);
    for (const auto& q : queries.queries) out << q.query_id << '\t' << q.text << '\n';
}

Qrels load_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels file: " + path);
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, iter, docid;
        int rel = 0;
        if (!(ss >> qid >> iter >> docid >> rel))
            throw DataError(path + ":" + std::to_string(line_no) + ": expected `qid 0 docid rel`");
        if (rel > 0) qrels[qid].insert(docid);
    }
    return qrels;
}

void save_qrels(const std::vector<std::pair<std::string, std::string>>& qid_docid,
                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write qrels file: " + path);
    for (const auto& [qid, docid] : qid_docid) out << qid << " 0 " << docid << " 1\n";
}

}  // namespace qrw
