#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "kbqa/kb_store.hpp"
#include "kbqa/model.hpp"
#include "kbqa/qa_data.hpp"
#include "kbqa/tensor.hpp"

namespace kbqa {

struct ScoredEntity {
    ResourceId entity;
    double score = 0.0;
};

struct AnswerSet {
    std::string question_id;
    std::vector<ScoredEntity> ranked;   // every distinct candidate entity, best score first
    std::vector<ScoredEntity> answers;  // S_max - S < margin
    double s_max = 0.0;
    bool no_candidates = false;
};

/// Entity-level dedup (best score per entity), then keeps every entity whose
/// score is strictly within `margin` of the maximum.
AnswerSet select_answers(std::string question_id, std::span<const CandidateAnswer> candidates,
                         std::span<const double> scores, double margin);

AnswerSet answer(const Question& question, const CandidateSet& candidates, const Model<float>& model, double margin);

struct F1Score {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Set-level precision/recall/F1; zero when either side is empty or disjoint.
F1Score f1_score(std::span<const ResourceId> predicted, std::span<const ResourceId> gold);

struct ReportRow {
    std::string question_id;
    std::vector<std::string> predicted;
    std::vector<std::string> gold;
    F1Score score;
};

struct EvalReport {
    double mean_f1 = 0.0;
    std::vector<ReportRow> rows;
};

/// Averaged F1 over every record of the split; skipped records and questions
/// without candidates count as zero. Questions are scored on up to `workers`
/// threads; rows keep split order.
EvalReport evaluate(const QaSplit& split, const KbStore& store, const Model<float>& model, double margin,
                    int max_hops = 2, std::size_t workers = 1);

/// Tab-separated: id, predicted, gold, P, R, F1 (entity lists joined by '|').
void write_report(std::ostream& out, const EvalReport& report);

struct HeatMap {
    std::vector<std::string> tokens;
    Tensor<double> weights;  // 4 x n, rows in aspect order
};

/// Attention weights of every aspect over the question's tokens. Throws
/// std::logic_error for models without attention.
HeatMap heatmap(const Question& question, const CandidateAnswer& candidate, const Model<float>& model);

void write_heatmap_grid(std::ostream& out, const HeatMap& map);
HeatMap read_heatmap_grid(std::istream& in);
void write_heatmap_svg(std::ostream& out, const HeatMap& map, const std::string& title = {});

}  // namespace kbqa
