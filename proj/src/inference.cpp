#include "kbqa/inference.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kbqa/attention.hpp"

namespace kbqa {

AnswerSet select_answers(std::string question_id, std::span<const CandidateAnswer> candidates,
                         std::span<const double> scores, double margin) {
    if (candidates.size() != scores.size()) throw std::invalid_argument("select_answers: one score per candidate");
    AnswerSet out;
    out.question_id = std::move(question_id);
    if (candidates.empty()) {
        out.no_candidates = true;
        return out;
    }
    std::map<ResourceId, double> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        auto [it, inserted] = best.emplace(candidates[i].entity, scores[i]);
        if (!inserted) it->second = std::max(it->second, scores[i]);
    }
    for (const auto& [entity, s] : best) out.ranked.push_back({entity, s});
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const ScoredEntity& a, const ScoredEntity& b) { return a.score > b.score; });
    out.s_max = out.ranked.front().score;
    for (const auto& e : out.ranked) {
        if (out.s_max - e.score < margin) out.answers.push_back(e);
    }
    return out;
}

AnswerSet answer(const Question& question, const CandidateSet& candidates, const Model<float>& model, double margin) {
    const auto raw = score_candidates(model, question.tokens, candidates.candidates);
    const std::vector<double> scores(raw.begin(), raw.end());
    return select_answers(question.id, candidates.candidates, scores, margin);
}

F1Score f1_score(std::span<const ResourceId> predicted, std::span<const ResourceId> gold) {
    std::vector<ResourceId> p(predicted.begin(), predicted.end());
    std::vector<ResourceId> g(gold.begin(), gold.end());
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    F1Score out;
    if (p.empty() || g.empty()) return out;
    std::vector<ResourceId> common;
    std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(common));
    if (common.empty()) return out;
    out.precision = static_cast<double>(common.size()) / static_cast<double>(p.size());
    out.recall = static_cast<double>(common.size()) / static_cast<double>(g.size());
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

EvalReport evaluate(const QaSplit& split, const KbStore& store, const Model<float>& model, double margin,
                    int max_hops, std::size_t workers) {
    if (split.total() == 0) throw std::invalid_argument("evaluate: empty split");
    EvalReport report;
    report.rows.resize(split.questions.size());
    auto run = [&](std::size_t first, std::size_t stride) {
        for (std::size_t i = first; i < split.questions.size(); i += stride) {
            const Question& q = split.questions[i];
            ReportRow& row = report.rows[i];
            row.question_id = q.id;
            for (ResourceId g : q.gold) row.gold.push_back(store.name(g));
            const CandidateSet cands = store.candidate_set(q.topic, max_hops);
            const AnswerSet result = answer(q, cands, model, margin);
            std::vector<ResourceId> predicted;
            for (const auto& a : result.answers) {
                predicted.push_back(a.entity);
                row.predicted.push_back(store.name(a.entity));
            }
            row.score = f1_score(predicted, q.gold);
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, split.questions.size()));
    if (workers == 1) {
        run(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
        for (auto& t : pool) t.join();
    }
    double total = 0.0;
    for (const auto& row : report.rows) total += row.score.f1;
    for (const auto& s : split.skipped) {
        ReportRow row;
        row.question_id = s.record.id;
        row.gold = s.record.answers;
        report.rows.push_back(std::move(row));
    }
    report.mean_f1 = total / static_cast<double>(split.total());
    return report;
}

namespace {

std::string join(const std::vector<std::string>& items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out.push_back(sep);
        out += items[i];
    }
    return out;
}

}  // namespace

void write_report(std::ostream& out, const EvalReport& report) {
    out << "question_id\tpredicted\tgold\tprecision\trecall\tf1\n";
    out << std::setprecision(6) << std::fixed;
    for (const auto& r : report.rows) {
        out << r.question_id << '\t' << join(r.predicted, '|') << '\t' << join(r.gold, '|') << '\t'
            << r.score.precision << '\t' << r.score.recall << '\t' << r.score.f1 << '\n';
    }
    out.unsetf(std::ios::floatfield);
}

HeatMap heatmap(const Question& question, const CandidateAnswer& candidate, const Model<float>& model) {
    if (!uses_attention(model.mode())) {
        throw std::logic_error("heat maps need an attention model; this checkpoint was trained in mode '" +
                               std::string(mode_name(model.mode())) + "' which has no attention weights");
    }
    HeatMap map;
    map.tokens = split_words(question.text);
    const Tensor<float> alpha = attention_matrix(model, question.tokens, candidate);
    if (map.tokens.size() != alpha.cols()) {
        map.tokens.assign(alpha.cols(), std::string(Vocabulary::kUnkWord));
    }
    map.weights = alpha.cast<double>();
    return map;
}

void write_heatmap_grid(std::ostream& out, const HeatMap& map) {
    out << "aspect";
    for (const auto& t : map.tokens) out << ',' << t;
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        out << aspect_name(static_cast<Aspect>(i));
        for (std::size_t j = 0; j < map.weights.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g", map.weights(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
}

HeatMap read_heatmap_grid(std::istream& in) {
    auto split_csv = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        return cells;
    };
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("heat-map grid: missing header");
    auto header = split_csv(line);
    if (header.empty() || header.front() != "aspect") throw std::runtime_error("heat-map grid: bad header");
    HeatMap map;
    map.tokens.assign(header.begin() + 1, header.end());
    const std::size_t n = map.tokens.size();
    if (n == 0) throw std::runtime_error("heat-map grid: no token columns");
    map.weights = Tensor<double>({kAspectCount, n});
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("heat-map grid: expected 4 aspect rows");
        auto cells = split_csv(line);
        if (cells.size() != n + 1 || cells.front() != aspect_name(static_cast<Aspect>(i))) {
            throw std::runtime_error("heat-map grid: malformed row " + std::to_string(i + 2));
        }
        for (std::size_t j = 0; j < n; ++j) map.weights(i, j) = std::stod(cells[j + 1]);
    }
    return map;
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

}  // namespace

void write_heatmap_svg(std::ostream& out, const HeatMap& map, const std::string& title) {
    constexpr int kCell = 56;
    constexpr int kLabel = 80;
    constexpr int kTop = 40;
    const std::size_t n = map.tokens.size();
    const int width = kLabel + static_cast<int>(n) * kCell + 10;
    const int height = kTop + static_cast<int>(kAspectCount) * kCell + 30;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    if (!title.empty()) out << "  <title>" << xml_escape(title) << "</title>\n";
    for (std::size_t j = 0; j < n; ++j) {
        out << "  <text x=\"" << kLabel + static_cast<int>(j) * kCell + kCell / 2 << "\" y=\"" << kTop - 10
            << "\" text-anchor=\"middle\">" << xml_escape(map.tokens[j]) << "</text>\n";
    }
    char buf[32];
    for (std::size_t i = 0; i < kAspectCount; ++i) {
        const int y = kTop + static_cast<int>(i) * kCell;
        out << "  <text x=\"" << kLabel - 6 << "\" y=\"" << y + kCell / 2 + 4 << "\" text-anchor=\"end\">"
            << aspect_name(static_cast<Aspect>(i)) << "</text>\n";
        for (std::size_t j = 0; j < n; ++j) {
            const double a = std::clamp(map.weights(i, j), 0.0, 1.0);
            const int shade = static_cast<int>(255.0 * (1.0 - a) + 0.5);
            std::snprintf(buf, sizeof(buf), "%.4f", map.weights(i, j));
            out << "  <rect x=\"" << kLabel + static_cast<int>(j) * kCell << "\" y=\"" << y << "\" width=\"" << kCell
                << "\" height=\"" << kCell << "\" fill=\"rgb(255," << shade << ',' << shade
                << ")\" stroke=\"#999\"><title>" << buf << "</title></rect>\n";
        }
    }
    out << "</svg>\n";
}

}  // namespace kbqa
