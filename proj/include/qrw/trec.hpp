#pragma once

#include <string>
#include <vector>

#include "qrw/index.hpp"

namespace qrw {

/// TREC run persistence: `qid Q0 docid rank score tag`, scores with six
/// decimals, ranks 1-based.
void save_run(const std::vector<RankedList>& run, const std::string& path,
              const std::string& tag = "qrw");

std::vector<RankedList> load_run(const std::string& path);

}  // namespace qrw
