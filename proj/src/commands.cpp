#include "malflows/commands.hpp"

#include "malflows/corpus.hpp"
#include "malflows/embed.hpp"
#include "malflows/error.hpp"
#include "malflows/fusion.hpp"
#include "malflows/hin.hpp"
#include "malflows/metapath.hpp"
#include "malflows/metrics.hpp"
#include "malflows/pipeline.hpp"
#include "malflows/synth.hpp"
#include "malflows/text.hpp"
#include "malflows/walk.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace malflows {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

// Text outputs carry their provenance in a neighbouring <file>.meta.json.
void write_sidecar(const fs::path& path, const json& meta) {
    write_file(fs::path(path.string() + ".meta.json"), meta.dump(2) + "\n");
}

json make_meta(const std::string& command, json params, json inputs) {
    return {{"command", command}, {"params", std::move(params)}, {"inputs", std::move(inputs)}};
}

Corpus load_labeled_corpus(const std::string& records, const std::string& labels, bool strict) {
    Corpus corpus = load_corpus(records, ParseOptions{strict});
    if (!labels.empty()) apply_labels(corpus, load_labels(labels));
    return corpus;
}

struct Common {
    bool strict = false;
};

// In strict mode every stochastic stage must be given its seed explicitly.
void require_seed(const Common& common, const CLI::Option* seed_opt) {
    if (common.strict && seed_opt->count() == 0) {
        throw SchemaError("--seed is required in strict mode");
    }
}

std::array<std::optional<WordVectors>, 3> load_views(const std::array<std::string, 3>& paths) {
    std::array<std::optional<WordVectors>, 3> views;
    bool any = false;
    for (std::size_t v = 0; v < 3; ++v) {
        if (paths[v].empty()) continue;
        views[v] = read_word_vectors(paths[v]);
        any = true;
    }
    if (!any) throw Error("at least one of --cf, --df, --icc is required");
    return views;
}

ChannelInput app_input(const std::array<std::optional<WordVectors>, 3>& views, const std::string& app, std::size_t dim) {
    std::array<std::optional<std::vector<float>>, 3> vecs;
    for (std::size_t v = 0; v < 3; ++v) {
        if (!views[v]) continue;
        if (views[v]->dim != dim) throw Error("embedding dimension does not match the model input width");
        vecs[v] = app_view_vector(*views[v], app);
    }
    return ChannelInput::from_views(vecs, dim);
}

json view_inputs(const std::array<std::string, 3>& paths) {
    return {{"cf", paths[0]}, {"df", paths[1]}, {"icc", paths[2]}};
}

struct Pred {
    std::string app_id;
    double score = 0.0;
};

std::vector<Pred> read_preds(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open predictions file " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != "app_id,score,label_pred") {
        throw SchemaError(path.string() + ": expected header 'app_id,score,label_pred'");
    }
    std::vector<Pred> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) {
            throw ParseError(path.string() + ": line " + std::to_string(line_no) + " must have 3 columns", line_no, 0);
        }
        Pred p;
        p.app_id = trim(line.substr(0, c1));
        const std::string score = trim(line.substr(c1 + 1, c2 - c1 - 1));
        char* end = nullptr;
        p.score = std::strtod(score.c_str(), &end);
        if (score.empty() || *end != '\0') {
            throw ParseError(path.string() + ": bad score on line " + std::to_string(line_no), line_no, c1 + 1);
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---- subcommands -------------------------------------------------------

struct StatsArgs {
    std::string records, labels, out;
    std::size_t k = 10;
};

void cmd_stats(const StatsArgs& a, const Common& common, std::ostream& out) {
    const Corpus corpus = load_labeled_corpus(a.records, a.labels, common.strict);
    if (a.k == 0) throw Error("--k must be positive");
    json j = json::parse(stats_to_json(corpus_stats(corpus, a.k)));
    j["meta"] = make_meta("stats", {{"k", a.k}, {"strict", common.strict}},
                          {{"records", a.records}, {"labels", a.labels}});
    const std::string text = j.dump(2) + "\n";
    if (a.out.empty()) out << text;
    else write_file(a.out, text);
}

struct BuildArgs {
    std::string records, view, out, enumerate;
    bool no_refine = false;
    std::size_t cap = 1000;
};

void cmd_build(const BuildArgs& a, const Common& common, std::ostream& out) {
    const auto view = parse_view(a.view);
    if (!view) throw Error("unknown view '" + a.view + "' (expected cf, df or icc)");
    const Corpus corpus = load_corpus(a.records, ParseOptions{common.strict});
    const CorpusIndex index = build_relations(corpus);
    const Hin h = view_graph(index, *view, !a.no_refine);
    const auto violations = validate_schema(h);
    if (!violations.empty()) throw SchemaError("built graph violates the schema: " + violations.front());
    const json meta = make_meta("build", {{"view", a.view}, {"refined", !a.no_refine}}, {{"records", a.records}});
    write_file(a.out, hin_to_json(h, meta.dump()) + "\n");

    if (!a.enumerate.empty()) {
        const MetaPath& mp = builtin_metapath(a.enumerate);
        const auto inst = enumerate_instances(h, mp, a.cap);
        for (const auto& path : inst.paths) {
            for (std::size_t i = 0; i < path.size(); ++i) {
                const auto& n = h.node(path[i]);
                if (i) out << ' ';
                out << escape_token(n.token);
                if (n.context) out << '@' << escape_token(*n.context);
            }
            out << '\n';
        }
        if (inst.truncated) out << "# truncated at " << a.cap << " instances\n";
    }
}

struct WalkArgs {
    std::string graph, group, out;
    WalkParams params;
};

void cmd_walk(const WalkArgs& a, const CLI::Option* seed_opt, const Common& common) {
    require_seed(common, seed_opt);
    const Hin h = hin_from_json(read_file(a.graph));
    const MetaPathGroup g = resolve_group(a.group);
    if (g.view != h.view()) {
        throw Error("group " + a.group + " belongs to view " + std::string(to_string(g.view)) + ", graph is " +
                    std::string(to_string(h.view())));
    }
    WalkParams p = a.params;
    p.threads = default_threads();
    const auto walks = walks_to_tokens(h, sample_walks(h, g, p));
    write_walks(a.out, walks);
    write_sidecar(a.out, make_meta("walk",
                                   {{"group", a.group},
                                    {"walks_per_app", p.walks_per_app},
                                    {"walk_length", p.walk_length},
                                    {"seed", p.seed}},
                                   {{"graph", a.graph}}));
}

struct EmbedArgs {
    std::string walks, out;
    SgnsParams params;
};

void cmd_embed(const EmbedArgs& a, const CLI::Option* seed_opt, const Common& common) {
    require_seed(common, seed_opt);
    const auto walks = read_walks(a.walks);
    const Vocab vocab = build_vocab(walks, a.params.min_count, walk_start_tokens(walks));
    const auto result = train_skipgram(walks, vocab, a.params);
    write_word_vectors(a.out, to_word_vectors(vocab, result.table));
    const auto& p = a.params;
    write_sidecar(a.out, make_meta("embed",
                                   {{"dim", p.dim},
                                    {"window", p.window},
                                    {"negatives", p.negatives},
                                    {"epochs", p.epochs},
                                    {"lr", p.learning_rate},
                                    {"min_count", p.min_count},
                                    {"seed", p.seed},
                                    {"epoch_loss", result.epoch_loss}},
                                   {{"walks", a.walks}}));
}

struct TrainArgs {
    std::array<std::string, 3> views;
    std::string labels, out, fusion = "attn";
    TrainParams params;
    std::uint64_t seed = 1;
};

void cmd_train(const TrainArgs& a, const CLI::Option* seed_opt, const Common& common) {
    require_seed(common, seed_opt);
    TrainParams p = a.params;
    const auto mode = parse_fusion_mode(a.fusion);
    if (!mode) throw Error("unknown fusion mode '" + a.fusion + "' (expected attn or add)");
    p.mode = *mode;
    const auto views = load_views(a.views);
    std::size_t dim = 0;
    for (const auto& v : views) {
        if (v) dim = v->dim;
    }
    p.widths.front() = dim;

    const LabelTable labels = load_labels(a.labels);
    std::vector<Sample> data;
    for (const auto& [app, entry] : labels) {
        data.push_back({app, app_input(views, app, dim), entry.label, entry.period});
    }
    const auto result = train_classifier(data, p, a.seed);
    json j = json::parse(model_to_json(result.model));
    j["meta"]["params"] = {{"batch", p.batch}, {"lr", p.learning_rate}, {"dropout", p.dropout},
                           {"fusion", a.fusion}, {"loss_curve", result.loss_curve}};
    j["meta"]["inputs"] = view_inputs(a.views);
    j["meta"]["inputs"]["labels"] = a.labels;
    write_file(a.out, j.dump() + "\n");
}

struct PredictArgs {
    std::array<std::string, 3> views;
    std::string model, records, labels, out;
    double threshold = 0.5;
};

void cmd_predict(const PredictArgs& a, const Common& common) {
    if (a.records.empty() == a.labels.empty()) throw Error("give exactly one of --records or --labels");
    const FusionModel model = model_from_json(read_file(a.model));
    const auto views = load_views(a.views);
    std::vector<std::string> apps;
    if (!a.records.empty()) {
        for (const auto& r : load_corpus(a.records, ParseOptions{common.strict})) apps.push_back(r.app_id);
    } else {
        for (const auto& [app, entry] : load_labels(a.labels)) apps.push_back(app);
    }
    std::string text = "app_id,score,label_pred\n";
    char buf[64];
    for (const auto& app : apps) {
        double score = 0.0;
        try {
            score = static_cast<double>(predict(model, app_input(views, app, model.mlp.input_dim())));
        } catch (const NoViewError&) {
            throw NoViewError("no-view app '" + app + "': absent from every view");
        }
        std::snprintf(buf, sizeof buf, ",%.9g,%d\n", score, score >= a.threshold ? 1 : 0);
        text += app + buf;
    }
    write_file(a.out, text);
    json inputs = view_inputs(a.views);
    inputs["model"] = a.model;
    inputs["records"] = a.records;
    inputs["labels"] = a.labels;
    write_sidecar(a.out, make_meta("predict", {{"threshold", a.threshold}}, std::move(inputs)));
}

struct EvalArgs {
    std::string preds, labels, out, aut_by;
    double threshold = 0.5;
};

void cmd_eval(const EvalArgs& a, std::ostream& err) {
    if (!a.aut_by.empty() && a.aut_by != "period") throw Error("--aut-by only supports 'period'");
    const auto preds = read_preds(a.preds);
    const LabelTable labels = load_labels(a.labels);
    std::map<std::string, double> by_app;
    for (const auto& p : preds) by_app[p.app_id] = p.score;
    std::vector<double> scores;
    std::vector<int> truth;
    std::vector<std::string> periods;
    for (const auto& [app, entry] : labels) {
        auto it = by_app.find(app);
        if (it == by_app.end()) throw SchemaError("no prediction for labeled app '" + app + "'");
        scores.push_back(it->second);
        truth.push_back(entry.label);
        periods.push_back(entry.period.value_or(""));
    }
    const MetricReport report = compute_metrics(scores, truth, a.threshold);
    std::optional<PeriodReport> by_period;
    if (a.aut_by == "period") {
        by_period = evaluate_by_period(scores, truth, periods, a.threshold);
        if (by_period->periods.size() < 2) err << "warning: fewer than two periods, AUT undefined\n";
    }
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
    const json meta = make_meta("eval", {{"threshold", a.threshold}, {"aut_by", a.aut_by}},
                                {{"preds", a.preds}, {"labels", a.labels}});
    write_file(a.out, metrics_to_json(report, by_period, meta.dump()));
}

struct SynthArgs {
    SynthSpec spec;
    std::string out_dir;
    double test_fraction = 0.0;
};

void cmd_synth(const SynthArgs& a, const CLI::Option* seed_opt, const Common& common) {
    require_seed(common, seed_opt);
    Corpus corpus = generate_corpus(a.spec);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    save_labels(dir / "labels.csv", corpus);
    if (a.test_fraction > 0.0) {
        std::vector<int> labels;
        for (const auto& r : corpus) labels.push_back(*r.label);
        const Split split = stratified_split(labels, a.test_fraction, a.spec.seed);
        Corpus train, test;
        for (auto i : split.train) train.push_back(corpus[i]);
        for (auto i : split.test) test.push_back(corpus[i]);
        save_labels(dir / "labels_train.csv", train);
        save_labels(dir / "labels_test.csv", test);
    }
    for (auto& r : corpus) {
        r.label.reset();
        r.period.reset();
    }
    save_corpus(dir / "records.jsonl", corpus);
    const auto& s = a.spec;
    write_sidecar(dir / "records.jsonl", make_meta("synth",
                                                   {{"apps", s.n_apps},
                                                    {"malware_fraction", s.malware_fraction},
                                                    {"sep", s.sep},
                                                    {"seed", s.seed},
                                                    {"periods", s.periods},
                                                    {"first_period", s.first_period},
                                                    {"test_fraction", a.test_fraction}},
                                                   json::object()));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Flow-feature HIN embedding and malware classification pipeline", "malflows"};
    app.require_subcommand(1);
    Common common;
    app.add_flag("--strict", common.strict, "Reject unknown record fields and require explicit seeds");

    StatsArgs stats;
    auto* c_stats = app.add_subcommand("stats", "Top-k element frequencies per class");
    c_stats->add_option("--records", stats.records, "records.jsonl")->required();
    c_stats->add_option("--labels", stats.labels, "labels.csv");
    c_stats->add_option("--k", stats.k, "Entries per table")->capture_default_str();
    c_stats->add_option("--out", stats.out, "Output JSON (stdout when omitted)");

    BuildArgs build;
    auto* c_build = app.add_subcommand("build", "Build (and refine) one view's graph");
    c_build->add_option("--records", build.records, "records.jsonl")->required();
    c_build->add_option("--view", build.view, "cf, df or icc")->required();
    c_build->add_option("--out", build.out, "graph.json")->required();
    c_build->add_flag("--no-refine", build.no_refine, "Skip context refinement");
    c_build->add_option("--enumerate", build.enumerate, "Print instances of a meta-path (MP1..MP6)");
    c_build->add_option("--cap", build.cap, "Maximum instances to print")->capture_default_str();

    WalkArgs walk;
    auto* c_walk = app.add_subcommand("walk", "Sample meta-path-guided random walks");
    c_walk->add_option("--graph", walk.graph, "graph.json")->required();
    c_walk->add_option("--group", walk.group, "MPG1..MPG3 or a single MP1..MP6")->required();
    c_walk->add_option("--walks-per-app", walk.params.walks_per_app)->capture_default_str();
    c_walk->add_option("--walk-length", walk.params.walk_length)->capture_default_str();
    auto* walk_seed = c_walk->add_option("--seed", walk.params.seed)->capture_default_str();
    c_walk->add_option("--out", walk.out, "walks.txt")->required();

    EmbedArgs embed;
    auto* c_embed = app.add_subcommand("embed", "Skip-gram embeddings from walks");
    c_embed->add_option("--walks", embed.walks, "walks.txt")->required();
    c_embed->add_option("--dim", embed.params.dim)->capture_default_str();
    c_embed->add_option("--window", embed.params.window)->capture_default_str();
    c_embed->add_option("--negatives", embed.params.negatives)->capture_default_str();
    c_embed->add_option("--epochs", embed.params.epochs)->capture_default_str();
    c_embed->add_option("--lr", embed.params.learning_rate)->capture_default_str();
    c_embed->add_option("--min-count", embed.params.min_count)->capture_default_str();
    auto* embed_seed = c_embed->add_option("--seed", embed.params.seed)->capture_default_str();
    c_embed->add_option("--out", embed.out, "emb.vec")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train the attention + MLP classifier");
    c_train->add_option("--cf", train.views[0], "CF view emb.vec");
    c_train->add_option("--df", train.views[1], "DF view emb.vec");
    c_train->add_option("--icc", train.views[2], "ICC view emb.vec");
    c_train->add_option("--labels", train.labels, "labels.csv of the training apps")->required();
    c_train->add_option("--epochs", train.params.epochs)->capture_default_str();
    c_train->add_option("--batch", train.params.batch)->capture_default_str();
    c_train->add_option("--lr", train.params.learning_rate)->capture_default_str();
    c_train->add_option("--dropout", train.params.dropout)->capture_default_str();
    c_train->add_option("--fusion", train.fusion, "attn or add")->capture_default_str();
    auto* train_seed = c_train->add_option("--seed", train.seed)->capture_default_str();
    c_train->add_option("--out", train.out, "model.json")->required();

    PredictArgs pred;
    auto* c_pred = app.add_subcommand("predict", "Score apps with a trained model");
    c_pred->add_option("--model", pred.model, "model.json")->required();
    c_pred->add_option("--cf", pred.views[0]);
    c_pred->add_option("--df", pred.views[1]);
    c_pred->add_option("--icc", pred.views[2]);
    c_pred->add_option("--records", pred.records, "Score every app in records.jsonl");
    c_pred->add_option("--labels", pred.labels, "Score the apps listed in labels.csv");
    c_pred->add_option("--threshold", pred.threshold)->capture_default_str();
    c_pred->add_option("--out", pred.out, "preds.csv")->required();

    EvalArgs ev;
    auto* c_eval = app.add_subcommand("eval", "Metrics of predictions against labels");
    c_eval->add_option("--preds", ev.preds, "preds.csv")->required();
    c_eval->add_option("--labels", ev.labels, "labels.csv")->required();
    c_eval->add_option("--threshold", ev.threshold)->capture_default_str();
    c_eval->add_option("--aut-by", ev.aut_by, "Slot metrics by 'period' and report AUT");
    c_eval->add_option("--out", ev.out, "metrics.json")->required();

    SynthArgs syn;
    auto* c_synth = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    c_synth->add_option("--apps", syn.spec.n_apps)->capture_default_str();
    c_synth->add_option("--malware-fraction", syn.spec.malware_fraction)->capture_default_str();
    c_synth->add_option("--sep", syn.spec.sep)->capture_default_str();
    c_synth->add_option("--periods", syn.spec.periods)->capture_default_str();
    c_synth->add_option("--first-period", syn.spec.first_period)->capture_default_str();
    auto* synth_seed = c_synth->add_option("--seed", syn.spec.seed)->capture_default_str();
    c_synth->add_option("--test-fraction", syn.test_fraction,
                        "Also write labels_train.csv / labels_test.csv")->capture_default_str();
    c_synth->add_option("--out-dir", syn.out_dir)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*c_stats) cmd_stats(stats, common, out);
        else if (*c_build) cmd_build(build, common, out);
        else if (*c_walk) cmd_walk(walk, walk_seed, common);
        else if (*c_embed) cmd_embed(embed, embed_seed, common);
        else if (*c_train) cmd_train(train, train_seed, common);
        else if (*c_pred) cmd_predict(pred, common);
        else if (*c_eval) cmd_eval(ev, err);
        else if (*c_synth) cmd_synth(syn, synth_seed, common);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace malflows
