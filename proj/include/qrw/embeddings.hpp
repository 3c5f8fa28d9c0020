#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "qrw/rng.hpp"

namespace qrw {

/// Word-embedding dictionary with a single learnable out-of-vocabulary
/// vector. The pretrained entries stay frozen during training; only the
/// OOV vector receives gradients.
class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, uint64_t oov_seed);

    /// word2vec text format: `word v1 v2 ... vd`. Dimension is inferred
    /// from the first line; inconsistent lines raise DataError.
    static EmbeddingTable load(const std::string& path, uint64_t oov_seed = 0);
    void save(const std::string& path) const;

    void insert(const std::string& word, std::vector<double> vec);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& word) const { return vectors_.count(word) > 0; }

    /// Known word -> its vector; unknown -> the OOV vector.
    const std::vector<double>& lookup(const std::string& word) const;
    bool is_oov(const std::string& word) const { return !contains(word); }

    std::vector<double>& oov_vector() { return oov_; }
    const std::vector<double>& oov_vector() const { return oov_; }

    /// Surfaces in insertion order (deterministic candidate enumeration).
    const std::vector<std::string>& words() const { return order_; }

  private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> vectors_;
    std::vector<std::string> order_;
    std::vector<double> oov_;
};

/// Arithmetic mean of token vectors; OOV tokens map to the OOV vector;
/// empty input yields the zero vector.
std::vector<double> bow_encode(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table);

/// u.v / (|u||v|), 0 when either norm is 0. Throws on dimension mismatch.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

}  // namespace qrw
