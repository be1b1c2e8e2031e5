#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "kbqa/inference.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/run_config.hpp"
#include "kbqa/synthetic.hpp"
#include "kbqa/trainer.hpp"

namespace kbqa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UnknownTopic : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonFlags {
    std::optional<fs::path> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "JSON config file (default: $KBQA_CONFIG)");
    cmd->add_option("--preset", f.preset, "training preset: paper or desk");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--workers", f.workers, "threads for evaluation")->check(CLI::PositiveNumber);
}

RunConfig resolve(const CommonFlags& f) {
    json j = RunConfig::resolve_json(f.config);
    if (f.preset) j["preset"] = *f.preset;
    RunConfig c = RunConfig::from_json(j);
    if (f.seed) {
        c.train.seed = *f.seed;
        c.synth.seed = *f.seed;
    }
    if (f.workers) c.workers = *f.workers;
    c.train.workers = c.workers;
    return c;
}

template <typename T>
void apply(const std::optional<T>& flag, T& field) {
    if (flag) field = *flag;
}

void require_file(const fs::path& p, const char* what) {
    if (!fs::is_regular_file(p)) throw std::invalid_argument(std::string(what) + " file '" + p.string() + "' does not exist");
}

KbStore load_kb(const fs::path& p, const TrainConfig& config) {
    require_file(p, "KB");
    KbOptions options;
    options.context_cap = config.context_cap;
    return KbStore::load(p, options);
}

// Checkpoint plus the KB and vocabulary it was trained with.
struct Loaded {
    ModelCheckpoint checkpoint;
    KbStore store;
    Vocabulary vocab;
};

Loaded load_model(const fs::path& checkpoint, const fs::path& kb) {
    ModelCheckpoint ck = load_checkpoint(checkpoint);
    KbStore store = load_kb(kb, ck.config);
    check_kb_compatible(ck, store);
    Vocabulary vocab = Vocabulary::from_words(ck.words);
    return Loaded{std::move(ck), std::move(store), std::move(vocab)};
}

Question make_question(const Loaded& m, const std::string& text, const std::string& topic) {
    auto id = m.store.find_entity(topic);
    if (!id) throw UnknownTopic("unknown topic '" + topic + "': not an entity of the KB");
    Question q;
    q.id = "cli";
    q.text = text;
    q.topic = *id;
    q.tokens = m.vocab.encode(text);
    return q;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

// --------------------------------------------------------------------------

struct GenFlags {
    CommonFlags common;
    std::optional<fs::path> out;
    std::optional<std::size_t> entities, relations, types, facts_per_entity, templates;
    std::optional<double> train_fraction, valid_fraction, test_fraction, oov_fraction;
    bool overwrite = false;
};

int cmd_gen(const GenFlags& f, std::ostream& out) {
    RunConfig c = resolve(f.common);
    apply(f.out, c.paths.data_dir);
    apply(f.entities, c.synth.entities);
    apply(f.relations, c.synth.relations);
    apply(f.types, c.synth.types);
    apply(f.facts_per_entity, c.synth.facts_per_entity);
    apply(f.templates, c.synth.templates_per_relation);
    apply(f.train_fraction, c.synth.train_fraction);
    apply(f.valid_fraction, c.synth.valid_fraction);
    apply(f.test_fraction, c.synth.test_fraction);
    apply(f.oov_fraction, c.synth.oov_fraction);

    const SynthData data = generate(c.synth);
    const SynthFiles files = SynthFiles::in(c.paths.data_dir);
    write_synth(data, files, f.overwrite);
    out << "questions: train=" << data.train.size() << " valid=" << data.valid.size() << " test=" << data.test.size()
        << " test_oov=" << fmt("%.4f", data.oov_fraction) << '\n';
    for (const auto& p : files.all()) out << file_sha256(p) << "  " << p.string() << '\n';
    return kOk;
}

struct TrainFlags {
    CommonFlags common;
    std::optional<std::string> mode;
    std::optional<fs::path> kb, train, valid, data_dir, out_dir;
    std::optional<std::size_t> epochs, dim, negatives, batch_size, transe_epochs;
    std::optional<double> lr, margin, inference_margin;
};

int cmd_train(const TrainFlags& f, std::ostream& out, std::ostream& err) {
    RunConfig c = resolve(f.common);
    if (f.mode) {
        auto m = parse_mode(*f.mode);
        if (!m) throw std::invalid_argument("invalid mode '" + *f.mode + "' (expected lstm, bilstm, bilstm-att, bilstm-gki or bilstm-att-gki)");
        c.train.mode = *m;
    }
    apply(f.data_dir, c.paths.data_dir);
    if (f.kb) c.paths.kb = *f.kb;
    if (f.train) c.paths.train = *f.train;
    if (f.valid) c.paths.valid = *f.valid;
    apply(f.out_dir, c.paths.out_dir);
    apply(f.epochs, c.train.epochs);
    apply(f.dim, c.train.dim);
    apply(f.negatives, c.train.negatives);
    apply(f.batch_size, c.train.batch_size);
    apply(f.transe_epochs, c.train.transe.epochs_per_qa_epoch);
    apply(f.lr, c.train.learning_rate);
    apply(f.margin, c.train.margin);
    if (f.inference_margin) c.train.inference_margin = *f.inference_margin;
    c.train.validate();

    const SynthFiles files = c.paths.data_files();
    KbStore store = load_kb(files.kb, c.train);
    require_file(files.train, "training split");
    require_file(files.valid, "validation split");
    QaSplit train = load_qa(files.train, store);
    QaSplit valid = load_qa(files.valid, store);
    const Dataset data = Dataset::make(std::move(store), std::move(train), std::move(valid));

    fs::create_directories(c.paths.out_dir);
    const fs::path log_path = c.paths.out_dir / "metrics.log";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot write '" + log_path.string() + "'");

    out << "mode=" << mode_name(c.train.mode) << " train_questions=" << data.train.questions.size()
        << " valid_questions=" << data.valid.questions.size() << " words=" << data.vocab.size()
        << " kb_resources=" << data.store.vocab_size() << '\n';
    TrainHooks hooks;
    hooks.on_warning = [&](const std::string& msg) { err << "warning: " << msg << '\n'; };
    hooks.on_epoch = [&](const EpochRecord& rec, const Model<float>& model) {
        const std::string line = format_metrics_line(rec);
        log << line << '\n';
        log.flush();
        out << line << " time=" << fmt("%.2f", rec.seconds) << "s\n";
        char name[32];
        std::snprintf(name, sizeof(name), "epoch-%03zu.ckpt", rec.epoch);
        save_checkpoint(c.paths.out_dir / name, make_checkpoint(model, c.train, data, static_cast<std::uint32_t>(rec.epoch)));
    };
    const TrainResult result = multitask_train(data, c.train, hooks);
    save_checkpoint(c.paths.out_dir / "best.ckpt",
                    make_checkpoint(result.best, c.train, data, static_cast<std::uint32_t>(result.best_epoch)));
    out << "best epoch=" << result.best_epoch << " valid_f1=" << fmt("%.6f", result.best_valid_f1)
        << " checkpoint=" << (c.paths.out_dir / "best.ckpt").string() << '\n';
    return kOk;
}

struct EvalFlags {
    CommonFlags common;
    fs::path checkpoint;
    std::optional<fs::path> kb, split, report, data_dir;
    std::string which = "test";
    std::optional<double> margin;
};

int cmd_eval(const EvalFlags& f, std::ostream& out) {
    RunConfig c = resolve(f.common);
    apply(f.data_dir, c.paths.data_dir);
    const SynthFiles files = c.paths.data_files();
    fs::path split_path;
    if (f.split) split_path = *f.split;
    else if (f.which == "train") split_path = files.train;
    else if (f.which == "valid") split_path = files.valid;
    else if (f.which == "test") split_path = files.test;
    else throw std::invalid_argument("--which must be train, valid or test");

    Loaded m = load_model(f.checkpoint, f.kb.value_or(files.kb));
    require_file(split_path, "evaluation split");
    QaSplit split = load_qa(split_path, m.store);
    if (split.total() == 0) throw std::invalid_argument("evaluation split '" + split_path.string() + "' is empty");
    assign_tokens(split.questions, m.vocab);

    const double margin = f.margin.value_or(m.checkpoint.config.answer_margin());
    const EvalReport report = evaluate(split, m.store, m.checkpoint.model, margin, m.checkpoint.config.max_hops, c.workers);
    const fs::path report_path =
        f.report.value_or(f.checkpoint.parent_path() / ("report-" + split_path.stem().string() + ".tsv"));
    std::ofstream rep(report_path, std::ios::trunc);
    if (!rep) throw std::runtime_error("cannot write '" + report_path.string() + "'");
    write_report(rep, report);

    out << "questions=" << split.total() << " skipped=" << split.skipped.size() << " margin=" << fmt("%.6f", margin)
        << " report=" << report_path.string() << '\n';
    out << fmt("%.6f", report.mean_f1) << '\n';
    return kOk;
}

struct AnswerFlags {
    CommonFlags common;
    fs::path checkpoint;
    std::optional<fs::path> kb, data_dir;
    std::string question;
    std::string topic;
    std::optional<std::string> candidate;
    std::optional<double> margin;
    fs::path out_prefix = "heatmap";
};

AnswerSet run_answer(const Loaded& m, const Question& q, double margin) {
    const CandidateSet cands = m.store.candidate_set(q.topic, m.checkpoint.config.max_hops);
    return answer(q, cands, m.checkpoint.model, margin);
}

int cmd_answer(const AnswerFlags& f, std::ostream& out) {
    RunConfig c = resolve(f.common);
    apply(f.data_dir, c.paths.data_dir);
    Loaded m = load_model(f.checkpoint, f.kb.value_or(c.paths.data_files().kb));
    const Question q = make_question(m, f.question, f.topic);
    const double margin = f.margin.value_or(m.checkpoint.config.answer_margin());
    const AnswerSet result = run_answer(m, q, margin);
    if (result.no_candidates) {
        out << "no candidates within " << m.checkpoint.config.max_hops << " hops of '" << f.topic << "'\n";
        return kOk;
    }
    out << "rank\tentity\tscore\n";
    for (std::size_t i = 0; i < result.ranked.size(); ++i) {
        if (i == result.answers.size()) {
            out << "--- margin cut: S_max - " << fmt("%.6f", margin) << " = " << fmt("%.6f", result.s_max - margin)
                << " ---\n";
        }
        out << i + 1 << '\t' << m.store.name(result.ranked[i].entity) << '\t' << fmt("%.6f", result.ranked[i].score)
            << '\n';
    }
    if (result.answers.size() == result.ranked.size()) {
        out << "--- margin cut: S_max - " << fmt("%.6f", margin) << " = " << fmt("%.6f", result.s_max - margin)
            << " ---\n";
    }
    return kOk;
}

int cmd_heatmap(const AnswerFlags& f, std::ostream& out) {
    RunConfig c = resolve(f.common);
    apply(f.data_dir, c.paths.data_dir);
    Loaded m = load_model(f.checkpoint, f.kb.value_or(c.paths.data_files().kb));
    if (!uses_attention(m.checkpoint.config.mode)) {
        throw std::logic_error("heat maps need an attention model; this checkpoint was trained in mode '" +
                               std::string(mode_name(m.checkpoint.config.mode)) + "' which has no attention weights");
    }
    const Question q = make_question(m, f.question, f.topic);
    const CandidateSet cands = m.store.candidate_set(q.topic, m.checkpoint.config.max_hops);
    if (cands.candidates.empty()) throw std::invalid_argument("no candidates within reach of '" + f.topic + "'");

    const CandidateAnswer* chosen = nullptr;
    if (f.candidate) {
        auto id = m.store.find_entity(*f.candidate);
        for (const auto& cand : cands.candidates) {
            if (id && cand.entity == *id) {
                chosen = &cand;
                break;
            }
        }
        if (!chosen) throw std::invalid_argument("'" + *f.candidate + "' is not a candidate answer of this question");
    } else {
        const AnswerSet result = run_answer(m, q, m.checkpoint.config.answer_margin());
        for (const auto& cand : cands.candidates) {
            if (cand.entity == result.ranked.front().entity) {
                chosen = &cand;
                break;
            }
        }
    }
    const HeatMap map = heatmap(q, *chosen, m.checkpoint.model);
    fs::path grid = f.out_prefix;
    grid += ".csv";
    fs::path svg = f.out_prefix;
    svg += ".svg";
    if (f.out_prefix.has_parent_path()) fs::create_directories(f.out_prefix.parent_path());
    {
        std::ofstream g(grid, std::ios::trunc);
        if (!g) throw std::runtime_error("cannot write '" + grid.string() + "'");
        write_heatmap_grid(g, map);
    }
    {
        std::ofstream s(svg, std::ios::trunc);
        if (!s) throw std::runtime_error("cannot write '" + svg.string() + "'");
        write_heatmap_svg(s, map, f.question + " -> " + m.store.name(chosen->entity));
    }
    out << "candidate=" << m.store.name(chosen->entity) << " grid=" << grid.string() << " svg=" << svg.string() << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Knowledge-base question answering with attention and global KB embeddings"};
    app.name("kbqa");
    app.require_subcommand(1);

    GenFlags gen;
    auto* g = app.add_subcommand("gen", "generate a synthetic KB and question splits");
    add_common(g, gen.common);
    g->add_option("--out", gen.out, "output directory");
    g->add_option("--entities", gen.entities);
    g->add_option("--relations", gen.relations);
    g->add_option("--types", gen.types);
    g->add_option("--facts-per-entity", gen.facts_per_entity);
    g->add_option("--templates", gen.templates, "question templates per relation");
    g->add_option("--train-fraction", gen.train_fraction);
    g->add_option("--valid-fraction", gen.valid_fraction);
    g->add_option("--test-fraction", gen.test_fraction);
    g->add_option("--oov-fraction", gen.oov_fraction, "minimum share of test questions with unseen answers");
    g->add_flag("--overwrite", gen.overwrite, "replace existing files");

    TrainFlags train;
    auto* t = app.add_subcommand("train", "train a model");
    add_common(t, train.common);
    t->add_option("--mode", train.mode, "lstm, bilstm, bilstm-att, bilstm-gki or bilstm-att-gki");
    t->add_option("--data-dir", train.data_dir);
    t->add_option("--kb", train.kb);
    t->add_option("--train", train.train);
    t->add_option("--valid", train.valid);
    t->add_option("--out", train.out_dir, "directory for checkpoints and metrics.log");
    t->add_option("--epochs", train.epochs);
    t->add_option("--dim", train.dim);
    t->add_option("--negatives", train.negatives);
    t->add_option("--batch-size", train.batch_size);
    t->add_option("--transe-epochs", train.transe_epochs, "TransE epochs after each QA epoch");
    t->add_option("--lr", train.lr);
    t->add_option("--margin", train.margin);
    t->add_option("--inference-margin", train.inference_margin);

    EvalFlags ev;
    auto* e = app.add_subcommand("eval", "averaged F1 of a checkpoint on a split");
    add_common(e, ev.common);
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--data-dir", ev.data_dir);
    e->add_option("--kb", ev.kb);
    e->add_option("--split", ev.split, "QA file to evaluate");
    e->add_option("--which", ev.which, "train, valid or test split of the data directory");
    e->add_option("--report", ev.report, "per-question report path");
    e->add_option("--margin", ev.margin, "inference margin override");

    AnswerFlags ans;
    auto* a = app.add_subcommand("answer", "answer one question");
    add_common(a, ans.common);
    a->add_option("--checkpoint", ans.checkpoint)->required();
    a->add_option("--data-dir", ans.data_dir);
    a->add_option("--kb", ans.kb);
    a->add_option("--question", ans.question)->required();
    a->add_option("--topic", ans.topic)->required();
    a->add_option("--margin", ans.margin, "inference margin override");

    AnswerFlags hm;
    auto* h = app.add_subcommand("heatmap", "attention heat map of one question and candidate");
    add_common(h, hm.common);
    h->add_option("--checkpoint", hm.checkpoint)->required();
    h->add_option("--data-dir", hm.data_dir);
    h->add_option("--kb", hm.kb);
    h->add_option("--question", hm.question)->required();
    h->add_option("--topic", hm.topic)->required();
    h->add_option("--candidate", hm.candidate, "candidate entity (default: best-scoring)");
    h->add_option("--out", hm.out_prefix, "output prefix for .csv and .svg");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*g) return cmd_gen(gen, out);
        if (*t) return cmd_train(train, out, err);
        if (*e) return cmd_eval(ev, out);
        if (*a) return cmd_answer(ans, out);
        if (*h) return cmd_heatmap(hm, out);
    } catch (const UnknownTopic& ex) {
        err << "error: " << ex.what() << '\n';
        return kUnknownTopic;
    } catch (const CheckpointError& ex) {
        err << "error: " << ex.what() << '\n';
        return kBadCheckpoint;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << '\n';
        return kInvalid;
    } catch (const std::logic_error& ex) {
        err << "error: " << ex.what() << '\n';
        return kInvalid;
    } catch (const FormatError& ex) {
        err << "error: " << ex.what() << '\n';
        return kInvalid;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kFailure;
    }
    return kInvalid;
}

}  // namespace kbqa::cli
