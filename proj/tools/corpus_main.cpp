// corpus: validation, statistics, agreement and synthetic data generation.
#include <CLI11.hpp>
#include <cstdio>
#include <iomanip>
#include <iostream>

#include "plasma/corpus/agreement.hpp"
#include "plasma/corpus/puma_import.hpp"
#include "plasma/corpus/stats.hpp"
#include "plasma/corpus/synth.hpp"
#include "plasma/util/error.hpp"

using namespace plasma;

namespace {

corpus::Dataset load(const std::string& path, const std::string& format) {
    return format == "puma" ? corpus::import_puma_file(path) : corpus::load_corpus(path);
}

void print_diagnostics(const corpus::Dataset& ds, std::ostream& out) {
    for (const auto& d : ds.diagnostics) {
        out << (d.severity == corpus::Severity::Error ? "error" : "warning");
        if (d.line) out << " line " << d.line;
        if (!d.field.empty()) out << " [" << d.field << "]";
        out << ": " << d.message << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Annotated CQA corpus tools"};
    app.require_subcommand(1);
    std::string format = "canonical";
    app.add_option("--format", format, "Input layout")->check(CLI::IsMember({"canonical", "puma"}));

    std::string file;
    auto* validate = app.add_subcommand("validate", "Check every thread invariant");
    validate->add_option("file", file, "Corpus JSONL")->required();

    std::string splits;
    auto* stats = app.add_subcommand("stats", "Span and summary counts per split and perspective");
    stats->add_option("file", file, "Corpus JSONL")->required();
    stats->add_option("--splits", splits, "Split assignment JSON");

    std::string a_path, b_path;
    auto* agreement = app.add_subcommand("agreement", "Inter-annotator agreement between two annotations");
    agreement->add_option("a", a_path, "First annotation JSONL")->required();
    agreement->add_option("b", b_path, "Second annotation JSONL")->required();

    std::size_t n = 100;
    std::uint64_t seed = 1;
    std::string out_path;
    auto* synth = app.add_subcommand("synth", "Generate a separable synthetic corpus");
    synth->add_option("--n", n, "Number of threads")->required();
    synth->add_option("--seed", seed, "Generator seed")->required();
    synth->add_option("--out", out_path, "Output JSONL")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*validate) {
            const auto ds = load(file, format);
            print_diagnostics(ds, std::cout);
            std::cout << "threads accepted: " << ds.threads.size() << ", errors: " << ds.error_count()
                      << ", warnings: " << ds.warning_count() << '\n';
            return ds.error_count() == 0 ? 0 : 1;
        }
        if (*stats) {
            const auto ds = load(file, format);
            if (ds.error_count()) std::cerr << ds.error_count() << " record(s) rejected; run validate for details\n";
            corpus::SplitAssignment assignment;
            if (!splits.empty()) assignment = corpus::load_splits(splits);
            const auto st = corpus::compute_stats(ds.threads, splits.empty() ? nullptr : &assignment);
            std::cout << corpus::render_stats_table(st);
            return 0;
        }
        if (*agreement) {
            const auto a = load(a_path, format);
            const auto b = load(b_path, format);
            const auto r = corpus::corpus_agreement(a.threads, b.threads);
            std::cout << std::fixed << std::setprecision(4) << "threads compared: " << r.threads_compared
                      << "\nthreads unmatched: " << r.threads_unmatched << "\nspan F1: " << r.span_f1
                      << "\nspan Jaccard: " << r.span_jaccard << "\nsummary ROUGE-1 F1: " << r.summary_rouge1
                      << "\nsummary ROUGE-2 F1: " << r.summary_rouge2 << "\nsummary ROUGE-L F1: " << r.summary_rougeL
                      << "\nsummary embedding similarity: " << r.summary_embed_sim << '\n';
            return 0;
        }
        if (*synth) {
            const auto ds = corpus::synthesize_corpus(corpus::SynthConfig::defaults(n), seed);
            corpus::save_corpus(out_path, ds.threads);
            std::cout << "wrote " << ds.threads.size() << " threads to " << out_path << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
