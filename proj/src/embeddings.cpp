#include "qrw/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrw/error.hpp"

namespace qrw {

EmbeddingTable::EmbeddingTable(std::size_t dim, uint64_t oov_seed) : dim_(dim) {
    Rng rng(oov_seed, "oov-init");
    oov_.resize(dim_);
    for (auto& v : oov_) v = rng.uniform(-0.01, 0.01);
}

EmbeddingTable EmbeddingTable::load(const std::string& path, uint64_t oov_seed) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path);

    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<double> vec;
        double v;
        while (ss >> v) vec.push_back(v);
        if (vec.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": no vector values");
        if (table.dim_ == 0) {
            table.dim_ = vec.size();
        } else if (vec.size() != table.dim_) {
            throw DataError(path + ":" + std::to_string(line_no) + ": dimension mismatch, expected " +
                            std::to_string(table.dim_) + " got " + std::to_string(vec.size()));
        }
        table.insert(word, std::move(vec));
    }
    if (table.dim_ == 0) throw DataError(path + ": empty embedding file");

    Rng rng(oov_seed, "oov-init");
    table.oov_.resize(table.dim_);
    for (auto& v : table.oov_) v = rng.uniform(-0.01, 0.01);
    return table;
}

void EmbeddingTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embeddings file: " + path);
    char buf[64];
    for (const auto& word : order_) {
        out << word;
        for (double v : vectors_.at(word)) {
            std::snprintf(buf, sizeof(buf), " %.8f", v);
            out << buf;
        }
        out << '\n';
    }
}

void EmbeddingTable::insert(const std::string& word, std::vector<double> vec) {
    if (dim_ == 0) dim_ = vec.size();
    if (vec.size() != dim_)
        throw DataError("embedding dimension mismatch for word: " + word);
    auto [it, inserted] = vectors_.emplace(word, std::move(vec));
    if (inserted) order_.push_back(word);
    if (oov_.size() != dim_) oov_.assign(dim_, 0.0);
}

const std::vector<double>& EmbeddingTable::lookup(const std::string& word) const {
    auto it = vectors_.find(word);
    return it == vectors_.end() ? oov_ : it->second;
}

std::vector<double> bow_encode(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table) {
    std::vector<double> acc(table.dim(), 0.0);
    if (tokens.empty()) return acc;
    for (const auto& tok : tokens) {
        const auto& v = table.lookup(tok);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
    }
    double inv = 1.0 / static_cast<double>(tokens.size());
    for (auto& x : acc) x *= inv;
    return acc;
}

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size()) throw NumericError("cosine: dimension mismatch");
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

}  // namespace qrw
