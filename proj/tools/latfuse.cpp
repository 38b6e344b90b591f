// latfuse command-line frontend.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <latfuse/benchmark.hpp>
#include <latfuse/config.hpp>
#include <latfuse/descriptor.hpp>
#include <latfuse/evaluation.hpp>
#include <latfuse/fusion.hpp>
#include <latfuse/synthetic.hpp>
#include <latfuse/template_io.hpp>

namespace fs = std::filesystem;
using namespace latfuse;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

struct CommonOptions
{
    std::string config_file;
    std::vector<std::string> assignments;
    std::optional<std::uint64_t> seed;
    std::string matcher = "feature";
    std::optional<double> w1, w2, delta_theta;
    std::optional<int> n_rel;
    std::string out;
};

void add_common(CLI::App* sub, CommonOptions& o)
{
    sub->add_option("--config", o.config_file, "key=value configuration file");
    sub->add_option("--set", o.assignments, "override one key, e.g. --set mcc.radius=60")
        ->allow_extra_args(false);
    sub->add_option("--seed", o.seed, "synthetic data seed (synth.seed)");
    sub->add_option("--matcher", o.matcher, "mcc | emb | feature | score")
        ->check(CLI::IsMember({"mcc", "emb", "feature", "score"}));
    sub->add_option("--w1", o.w1, "score-fusion MCC weight (fusion.w1)");
    sub->add_option("--w2", o.w2, "score-fusion embedding weight (fusion.w2)");
    sub->add_option("--delta-theta", o.delta_theta, "MCC direction gate in radians");
    sub->add_option("--n-rel", o.n_rel, "relaxation iterations (relax.n_rel)");
    sub->add_option("--out", o.out, "output file or directory");
}

/// defaults < config file < --set < dedicated flags
CliConfig resolve_config(const CommonOptions& o)
{
    CliConfig cfg;
    if (!o.config_file.empty())
        apply_config_file(cfg, o.config_file);
    for (const auto& a : o.assignments)
        apply_assignment(cfg, a);
    if (o.seed)
        cfg.synth.seed = *o.seed;
    if (o.w1)
        cfg.fusion.w1 = *o.w1;
    if (o.w2)
        cfg.fusion.w2 = *o.w2;
    if (o.delta_theta)
        cfg.fusion.delta_theta = *o.delta_theta;
    if (o.n_rel)
        cfg.fusion.relaxation.n_rel = *o.n_rel;
    cfg.cylinder.validate();
    cfg.embedding.validate();
    cfg.fusion.validate();
    return cfg;
}

/// Template plus descriptors; embeddings come from a sibling <stem>.emb file
/// when present.
Probe load_probe(const fs::path& path, const CliConfig& cfg)
{
    auto t = load_template(path);
    std::optional<EmbeddingSet> emb;
    auto emb_path = path;
    emb_path.replace_extension(".emb");
    if (fs::exists(emb_path))
        emb = load_embeddings(emb_path, t.size(), t.id);
    return make_probe(std::move(t), cfg.cylinder, cfg.embedding, std::move(emb));
}

std::vector<fs::path> template_files(const fs::path& dir)
{
    if (!fs::is_directory(dir))
        throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".mnt")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

int cmd_match(const CommonOptions& o, const std::string& a, const std::string& b)
{
    const auto cfg = resolve_config(o);
    const auto pa = load_probe(a, cfg);
    const auto pb = load_probe(b, cfg);
    const auto mats =
        channel_matrices(pa.tmpl, pb.tmpl, pa.mcc, pb.mcc, pa.emb, pb.emb, cfg.fusion);
    const auto r = match_matrices(parse_matcher(o.matcher), mats, pa.tmpl, pb.tmpl, cfg.fusion);
    std::cout << "score=" << detail::format_fixed6(r.score)
              << " raw_sum=" << detail::format_fixed6(r.raw_sum) << " pairs=" << r.n_pairs_used
              << '\n';
    return 0;
}

int cmd_identify(const CommonOptions& o, const std::string& query, const std::string& gallery_dir,
                 const std::string& truth_file, std::string mate)
{
    const auto cfg = resolve_config(o);
    const auto files = template_files(gallery_dir);
    if (files.empty())
        throw Error("gallery directory contains no .mnt templates: " + gallery_dir);

    Gallery gallery(cfg.cylinder, cfg.embedding);
    for (const auto& f : files) {
        auto p = load_probe(f, cfg);
        gallery.enroll(std::move(p.tmpl), std::move(p.emb));
    }
    const auto probe = load_probe(query, cfg);
    if (mate.empty() && !truth_file.empty()) {
        const auto truth = load_truth(truth_file);
        if (auto it = truth.find(probe.tmpl.id); it != truth.end())
            mate = it->second;
    }
    const std::optional<std::string> mate_id =
        mate.empty() ? std::nullopt : std::optional<std::string>(mate);
    const auto result =
        identify(gallery, probe, parse_matcher(o.matcher), cfg.fusion, mate_id, cfg.threads);
    if (!o.out.empty())
        write_results({result}, o.out);

    const auto& best = result.candidates.front();
    std::cout << "query=" << result.query_id << " best=" << best.gallery_id
              << " score=" << detail::format_fixed6(best.score);
    if (mate_id) {
        std::cout << " rank_of_mate=";
        if (result.rank_of_mate)
            std::cout << *result.rank_of_mate;
        else
            std::cout << "none";
    }
    std::cout << '\n';
    return 0;
}

int cmd_benchmark(const CommonOptions& o)
{
    if (o.out.empty())
        throw UsageError("benchmark requires --out <dir>");
    const auto cfg = resolve_config(o);
    fs::create_directories(o.out);
    run_benchmark(cfg, fs::path(o.out));
    std::ifstream summary(fs::path(o.out) / "summary.txt");
    std::cout << summary.rdbuf();
    return 0;
}

int cmd_gen_synth(const CommonOptions& o)
{
    if (o.out.empty())
        throw UsageError("gen-synth requires --out <dir>");
    const auto cfg = resolve_config(o);
    const auto ds = make_dataset(cfg.synth, cfg.perturb);
    write_dataset(ds, o.out);
    std::cout << "wrote " << ds.gallery.size() << " gallery and " << ds.queries.size()
              << " query templates to " << o.out << '\n';
    return 0;
}

int cmd_describe(const CommonOptions& o, const std::string& tmpl, const std::string& kind)
{
    if (o.out.empty())
        throw UsageError("describe requires --out <file>");
    const auto cfg = resolve_config(o);
    const auto t = load_template(tmpl);
    const auto set = kind == "mcc" ? build_mcc_set(t, cfg.cylinder)
                                   : build_synthetic_embeddings(t, cfg.embedding);
    save_embeddings(set, o.out);
    std::cout << "wrote " << set.size() << " x " << set.dim() << " " << kind << " descriptors ("
              << set.valid_count() << " valid) to " << o.out << '\n';
    return 0;
}

int cmd_embed_synth(const CommonOptions& o, const std::vector<std::string>& inputs)
{
    if (o.out.empty())
        throw UsageError("embed-synth requires --out <dir>");
    const auto cfg = resolve_config(o);
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            const auto more = template_files(in);
            files.insert(files.end(), more.begin(), more.end());
        } else {
            files.emplace_back(in);
        }
    }
    fs::create_directories(o.out);
    for (const auto& f : files) {
        const auto t = load_template(f);
        auto name = f.filename();
        name.replace_extension(".emb");
        save_embeddings(build_synthetic_embeddings(t, cfg.embedding), fs::path(o.out) / name);
    }
    std::cout << "wrote " << files.size() << " embedding files to " << o.out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fingerprint identification by fused cylinder-code and embedding matching"};
    app.require_subcommand(1);
    app.footer("Configuration keys (defaults):\n" + describe_config());

    CommonOptions opts;

    std::string match_a, match_b;
    auto* match = app.add_subcommand("match", "score one template against another");
    add_common(match, opts);
    match->add_option("template_a", match_a, "query template (.mnt)")->required();
    match->add_option("template_b", match_b, "reference template (.mnt)")->required();

    std::string query, gallery_dir, truth_file, mate;
    auto* ident = app.add_subcommand("identify", "rank a gallery directory against one query");
    add_common(ident, opts);
    ident->add_option("query", query, "query template (.mnt)")->required();
    ident->add_option("gallery", gallery_dir, "directory of .mnt templates")->required();
    ident->add_option("--truth", truth_file, "query_id,mate_id file");
    ident->add_option("--mate", mate, "gallery id of the true mate");

    auto* bench = app.add_subcommand("benchmark", "synthetic identification benchmark");
    add_common(bench, opts);

    auto* gen = app.add_subcommand("gen-synth", "write a synthetic gallery and latent queries");
    add_common(gen, opts);

    std::string describe_template, kind = "mcc";
    auto* describe = app.add_subcommand("describe", "dump descriptors of a template (EMB1)");
    add_common(describe, opts);
    describe->add_option("template", describe_template, "template (.mnt)")->required();
    describe->add_option("--kind", kind, "mcc | emb")->check(CLI::IsMember({"mcc", "emb"}));

    std::vector<std::string> embed_inputs;
    auto* embed = app.add_subcommand("embed-synth", "write synthetic embedding files (.emb)");
    add_common(embed, opts);
    embed->add_option("inputs", embed_inputs, "templates or directories of templates")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*match)
            return cmd_match(opts, match_a, match_b);
        if (*ident)
            return cmd_identify(opts, query, gallery_dir, truth_file, mate);
        if (*bench)
            return cmd_benchmark(opts);
        if (*gen)
            return cmd_gen_synth(opts);
        if (*describe)
            return cmd_describe(opts, describe_template, kind);
        if (*embed)
            return cmd_embed_synth(opts, embed_inputs);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
