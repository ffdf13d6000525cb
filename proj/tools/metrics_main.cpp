// metrics: score candidate summaries against references, one pair per line.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "plasma/metrics/scores.hpp"
#include "plasma/util/error.hpp"

using namespace plasma;
using nlohmann::ordered_json;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

ordered_json rouge_json(const metrics::RougeScore& r) {
    return {{"recall", r.recall}, {"precision", r.precision}, {"f1", r.f1}};
}

ordered_json report_json(const metrics::MetricReport& r) {
    return {{"rouge1", rouge_json(r.rouge1)}, {"rouge2", rouge_json(r.rouge2)}, {"rougeL", rouge_json(r.rougeL)},
            {"bleu", r.bleu},                 {"meteor", r.meteor},            {"embed_sim", r.embed_sim}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Summary evaluation metrics"};
    app.require_subcommand(1);
    std::string cand_path, ref_path, out_path;
    auto* score = app.add_subcommand("score", "Score line-aligned candidate and reference files");
    score->add_option("--cand", cand_path, "Candidate summaries, one per line")->required();
    score->add_option("--ref", ref_path, "Reference summaries, one per line")->required();
    score->add_option("--out", out_path, "Report JSON (stdout when omitted)");
    CLI11_PARSE(app, argc, argv);

    try {
        const auto cands = read_lines(cand_path);
        const auto refs = read_lines(ref_path);
        if (cands.size() != refs.size())
            throw InvalidArgument("candidate and reference files differ in line count (" +
                                  std::to_string(cands.size()) + " vs " + std::to_string(refs.size()) + ")");
        std::vector<metrics::Tokens> toks;
        std::vector<std::pair<metrics::Tokens, metrics::Tokens>> pairs;
        for (std::size_t i = 0; i < cands.size(); ++i) {
            pairs.emplace_back(metrics::tokenize_eval(cands[i]), metrics::tokenize_eval(refs[i]));
            toks.push_back(pairs.back().first);
            toks.push_back(pairs.back().second);
        }
        const metrics::OneHotEmbedder embedder(toks);
        std::vector<metrics::MetricReport> reports;
        ordered_json per = ordered_json::array();
        for (const auto& [c, r] : pairs) {
            reports.push_back(metrics::score_pair(c, r, embedder));
            per.push_back(report_json(reports.back()));
        }
        ordered_json j;
        j["count"] = reports.size();
        if (!reports.empty()) {
            const std::vector<double> w(reports.size(), 1.0);
            j["mean"] = report_json(metrics::weighted_mean(reports, w));
        }
        j["pairs"] = per;
        j["metadata"] = {{"tokenizer", "lowercase, punctuation split"},
                         {"rouge_stemming", false},
                         {"rouge_stopword_removal", false},
                         {"bleu", "sentence-level, add-one smoothing for n>=2"},
                         {"meteor", "exact + porter stem, alpha 0.9 beta 3 gamma 0.5"},
                         {"embed_sim", "one-hot token embeddings"}};
        const std::string text = j.dump(2) + "\n";
        if (out_path.empty()) {
            std::cout << text;
        } else {
            std::ofstream out(out_path);
            if (!out) throw IoError("cannot write " + out_path);
            out << text;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
