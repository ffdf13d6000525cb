// plasma: pretraining, prefix tuning, evaluation, ablation and reranking.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "plasma/harness/pipeline.hpp"
#include "plasma/nn/checkpoint.hpp"
#include "plasma/util/error.hpp"

namespace fs = std::filesystem;
using namespace plasma;

namespace {

harness::RunConfig load_config(const std::string& path) {
    return path.empty() ? harness::RunConfig{} : harness::RunConfig::load(path);
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << text;
}

std::string tag_of(const std::string& variant, std::uint64_t seed) {
    std::string tag;
    for (char c : variant) tag.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '-');
    return tag + "-s" + std::to_string(seed);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Perspective-controlled summarization with prefix tuning and energy losses"};
    app.require_subcommand(1);
    std::string cfg_path;

    auto* pretrain = app.add_subcommand("pretrain", "Train the classifier and the frozen base model");
    pretrain->add_option("-c,--config", cfg_path, "Run configuration (JSON)");

    std::string variant = "full", split = "test";
    std::uint64_t seed = 0;
    bool seed_given = false;
    auto* train = app.add_subcommand("train", "Prefix-tune one variant");
    train->add_option("-c,--config", cfg_path, "Run configuration (JSON)");
    train->add_option("--variant", variant, "Ablation variant id");
    train->add_option("--seed", seed, "Seed (default: first configured seed)")->each([&](const std::string&) { seed_given = true; });

    auto* eval = app.add_subcommand("eval", "Evaluate a trained prefix (or the bare base)");
    eval->add_option("-c,--config", cfg_path, "Run configuration (JSON)");
    eval->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
    eval->add_option("--variant", variant, "Variant whose prefix to load");
    eval->add_option("--seed", seed, "Seed of the prefix to load")->each([&](const std::string&) { seed_given = true; });
    bool base_only = false;
    eval->add_flag("--base-only", base_only, "Evaluate the base model without a prefix");

    std::string matrix = "full,no_lp,no_Ea,no_Et,no_Ep", seeds;
    auto* ablate = app.add_subcommand("ablate", "Run an ablation matrix over seeds");
    ablate->add_option("-c,--config", cfg_path, "Run configuration (JSON)");
    ablate->add_option("--matrix", matrix, "Comma-separated variant ids");
    ablate->add_option("--seeds", seeds, "Comma-separated seeds (default: configured seeds)");
    ablate->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));

    std::string candidates, perspective;
    auto* rerank = app.add_subcommand("rerank", "Rank candidate summaries by combined energy");
    rerank->add_option("-c,--config", cfg_path, "Run configuration (JSON)");
    rerank->add_option("--candidates", candidates, "JSONL of {thread_id, perspective, text}")->required();
    rerank->add_option("--perspective", perspective, "Target perspective label")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        harness::RunConfig cfg = load_config(cfg_path);
        if (!seed_given) seed = cfg.seeds.front();

        if (*pretrain) {
            auto exp = harness::pretrain_experiment(cfg, &std::cerr);
            std::cout << "wrote " << cfg.output_dir << " (base hash " << exp.base.params.hash_hex() << ")\n";
            return 0;
        }
        if (*train) {
            auto v = harness::Variant::parse(variant);
            auto exp = harness::open_experiment(cfg, &std::cerr);
            auto run = harness::run_variant(exp, v, seed, "val");
            std::cout << harness::render_report(run.report);
            std::cout << "base hash unchanged: " << (run.training.base_hash_after == exp.base_hash ? "yes" : "NO") << "\n";
            return 0;
        }
        if (*eval) {
            auto exp = harness::open_experiment(cfg, &std::cerr);
            harness::RunConfig vcfg = harness::Variant::parse(variant).apply(exp.config);
            nn::PrefixParams prefix;
            const nn::PrefixParams* pp = nullptr;
            std::string label = "base";
            if (!base_only) {
                auto path = fs::path(cfg.output_dir) / ("prefix-" + tag_of(variant, seed) + ".ckpt");
                auto ck = nn::load_checkpoint(path.string());
                if (ck.kind != "prefix") throw IoError(path.string() + " is not a prefix checkpoint");
                prefix.params = std::move(ck.params);
                prefix.prefix_len = prefix.params.at(0).rows();
                pp = &prefix;
                label = variant + " seed " + std::to_string(seed);
            }
            auto embedder = exp.embedder();
            harness::EvalContext ctx{&exp.vocab, &exp.classifier, &embedder,
                                     {vcfg.parts, vcfg.placement, vcfg.max_src_len}};
            auto report = harness::evaluate(exp.data.split(split), harness::model_generator(vcfg, exp.base, pp), ctx);
            write_file(fs::path(cfg.output_dir) / "report.json", harness::report_json(report, label + " / " + split) + "\n");
            write_file(fs::path(cfg.output_dir) / "report.txt", harness::render_report(report));
            std::string gens;
            for (const auto& g : report.generations)
                gens += nlohmann::ordered_json{{"thread_id", g.thread_id},
                                               {"perspective", std::string(label_name(g.perspective))},
                                               {"text", g.text}}
                            .dump() +
                        '\n';
            write_file(fs::path(cfg.output_dir) / "generations.jsonl", gens);
            std::cout << harness::render_report(report);
            return 0;
        }
        if (*ablate) {
            auto m = harness::parse_matrix(matrix);
            auto s = seeds.empty() ? cfg.seeds : harness::parse_seeds(seeds);
            auto exp = harness::open_experiment(cfg, &std::cerr);
            auto result = harness::run_ablation(exp, m, s, split, &std::cerr);
            write_file(fs::path(cfg.output_dir) / "ablation.json", harness::ablation_json(result) + "\n");
            write_file(fs::path(cfg.output_dir) / "ablation.txt", harness::render_ablation(result));
            std::cout << harness::render_ablation(result);
            return 0;
        }
        if (*rerank) {
            auto target = parse_label(perspective);
            if (!target) throw InvalidArgument("unknown perspective " + perspective);
            auto exp = harness::open_experiment(cfg, &std::cerr);
            auto embedder = exp.embedder();
            energy::EnergyScorer scorer(exp.vocab, exp.classifier, exp.lexicon, embedder, cfg.weights, cfg.anchor_score);
            std::set<std::string> ids;
            for (const auto& t : exp.data.threads) ids.insert(t.id);
            std::ifstream in(candidates);
            if (!in) throw IoError("cannot read " + candidates);
            auto result = harness::rerank(in, *target, scorer, ids);
            for (const auto& d : result.diagnostics)
                std::cerr << candidates << ":" << d.line << ": " << (d.field.empty() ? "" : d.field + ": ") << d.message << "\n";
            std::cout << harness::rerank_jsonl(result);
            return result.diagnostics.empty() ? 0 : 2;
        }
    } catch (const plasma::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
