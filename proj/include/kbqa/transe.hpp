#pragma once

#include <span>
#include <vector>

#include "kbqa/autodiff.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/model.hpp"
#include "kbqa/random.hpp"

namespace kbqa {

struct TransEConfig {
    double margin = 1.0;
    std::size_t epochs_per_qa_epoch = 100;
    std::size_t batch_size = 50;
    double learning_rate = 0.01;
    bool normalize_entities = true;  // unit-norm entity rows after every epoch
};

/// ||s + p - o||^2
template <typename T>
T energy(std::span<const T> s, std::span<const T> p, std::span<const T> o);

/// Facts touching the topic entities or anything within two hops of them.
std::vector<Fact> filter_facts(const KbStore& store, std::span<const ResourceId> topics);

// Positive facts S with a membership index and the entity pool used for
// corruption.
struct TransETask {
    std::vector<Fact> facts;
    std::vector<Fact> sorted;
    std::vector<ResourceId> entities;

    static TransETask build(std::vector<Fact> facts);
    bool contains(const Fact& f) const;
    bool empty() const { return facts.empty(); }
};

/// Replaces the subject or the object (fair coin) with a uniformly drawn
/// entity. Draws that reproduce a fact of `task` are retried a bounded number
/// of times before an unfiltered corruption is returned.
Fact corrupt(const Fact& fact, Rng& rng, const TransETask& task);

inline constexpr int kMaxCorruptionDraws = 32;

/// [margin + E(pos) - E(neg)]_+ on the model's KB embedding table.
template <typename T>
Var transe_pair_loss(Tape<T>& tape, const Model<T>& model, const Fact& positive, const Fact& negative, double margin);

struct TransEEpochResult {
    double mean_loss = 0.0;
    std::size_t active_pairs = 0;
};

/// One shuffled mini-batch SGD pass over the task's facts. Touches only the
/// KB embedding table.
template <typename T>
TransEEpochResult transe_epoch(const TransETask& task, Model<T>& model, const TransEConfig& config, Rng& rng);

}  // namespace kbqa
