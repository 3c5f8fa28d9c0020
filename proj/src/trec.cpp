#include "qrw/trec.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "qrw/error.hpp"

namespace qrw {

void save_run(const std::vector<RankedList>& run, const std::string& path,
              const std::string& tag) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write run file: " + path);
    char score_buf[64];
    for (const auto& list : run) {
        std::size_t rank = 1;
        for (const auto& hit : list.hits) {
            std::snprintf(score_buf, sizeof(score_buf), "%.6f", hit.score);
            out << list.query_id << " Q0 " << hit.doc_id << ' ' << rank << ' ' << score_buf
                << ' ' << tag << '\n';
            ++rank;
        }
    }
}

std::vector<RankedList> load_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file: " + path);
    std::vector<RankedList> run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, q0, docid, tag;
        std::size_t rank = 0;
        double score = 0.0;
        if (!(ss >> qid >> q0 >> docid >> rank >> score >> tag))
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected `qid Q0 docid rank score tag`");
        if (run.empty() || run.back().query_id != qid) {
            run.push_back(RankedList{qid, {}});
        }
        run.back().hits.push_back({docid, score});
    }
    return run;
}

}  // namespace qrw
