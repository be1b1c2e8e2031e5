#include "kbqa/transe.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace kbqa {

template <typename T>
T energy(std::span<const T> s, std::span<const T> p, std::span<const T> o) {
    if (s.size() != p.size() || s.size() != o.size()) throw ShapeError("energy: embeddings differ in dimension");
    T acc{0};
    for (std::size_t i = 0; i < s.size(); ++i) {
        const T x = s[i] + p[i] - o[i];
        acc += x * x;
    }
    return acc;
}

std::vector<Fact> filter_facts(const KbStore& store, std::span<const ResourceId> topics) {
    std::set<ResourceId> closure;
    std::vector<ResourceId> frontier;
    for (ResourceId t : topics) {
        if (store.is_entity(t) && closure.insert(t).second) frontier.push_back(t);
    }
    for (int hop = 0; hop < 2; ++hop) {
        std::vector<ResourceId> next;
        for (ResourceId e : frontier) {
            for (ResourceId n : store.neighbors(e)) {
                if (closure.insert(n).second) next.push_back(n);
            }
        }
        frontier = std::move(next);
    }
    std::vector<Fact> out;
    for (const Fact& f : store.facts()) {
        if (closure.contains(f.subject) || closure.contains(f.object)) out.push_back(f);
    }
    return out;
}

TransETask TransETask::build(std::vector<Fact> facts) {
    TransETask task;
    task.facts = std::move(facts);
    task.sorted = task.facts;
    std::sort(task.sorted.begin(), task.sorted.end());
    std::set<ResourceId> entities;
    for (const Fact& f : task.facts) {
        entities.insert(f.subject);
        entities.insert(f.object);
    }
    task.entities.assign(entities.begin(), entities.end());
    return task;
}

bool TransETask::contains(const Fact& f) const {
    return std::binary_search(sorted.begin(), sorted.end(), f);
}

Fact corrupt(const Fact& fact, Rng& rng, const TransETask& task) {
    if (task.entities.empty()) throw std::invalid_argument("corrupt: empty entity pool");
    const bool replace_head = std::bernoulli_distribution(0.5)(rng);
    Fact out = fact;
    for (int attempt = 0; attempt < kMaxCorruptionDraws; ++attempt) {
        out = fact;
        const ResourceId e = task.entities[uniform_index(rng, task.entities.size())];
        (replace_head ? out.subject : out.object) = e;
        if (out != fact && !task.contains(out)) return out;
    }
    return out;
}

template <typename T>
Var transe_pair_loss(Tape<T>& tape, const Model<T>& model, const Fact& positive, const Fact& negative,
                     double margin) {
    const Var table = tape.param(model.kb_embeddings());
    auto fact_energy = [&](const Fact& f) {
        const Var s = tape.gather(table, f.subject.value);
        const Var p = tape.gather(table, f.relation.value);
        const Var o = tape.gather(table, f.object.value);
        const Var diff = tape.sub(tape.add(s, p), o);
        return tape.dot(diff, diff);
    };
    const Var gap = tape.sub(fact_energy(positive), fact_energy(negative));
    return tape.relu(tape.add(tape.constant(static_cast<T>(margin)), gap));
}

template <typename T>
TransEEpochResult transe_epoch(const TransETask& task, Model<T>& model, const TransEConfig& config, Rng& rng) {
    if (task.empty()) throw std::invalid_argument("transe_epoch: no positive facts");
    if (config.margin <= 0) throw std::invalid_argument("transe_epoch: margin must be positive");
    if (config.batch_size == 0) throw std::invalid_argument("transe_epoch: batch size must be positive");

    std::vector<std::size_t> order(task.facts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(std::span<std::size_t>(order), rng);

    TransEEpochResult result;
    double total = 0.0;
    GradientSet<T> grads(model.params());
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        grads.clear();
        for (std::size_t i = start; i < end; ++i) {
            const Fact& pos = task.facts[order[i]];
            const Fact neg = corrupt(pos, rng, task);
            Tape<T> tape(&model.params());
            const Var loss = transe_pair_loss(tape, model, pos, neg, config.margin);
            const T value = tape.value(loss).item();
            total += value;
            if (value > T{0}) {
                ++result.active_pairs;
                tape.backward_into(loss, grads);
            }
        }
        sgd_step(model.params(), grads, static_cast<T>(config.learning_rate));
    }
    if (config.normalize_entities) {
        std::vector<std::size_t> rows;
        rows.reserve(task.entities.size());
        for (ResourceId e : task.entities) rows.push_back(e.value);
        l2_normalize_rows_inplace(model.params()[model.kb_embeddings()], std::span<const std::size_t>(rows));
    }
    result.mean_loss = total / static_cast<double>(task.facts.size());
    return result;
}

template float energy(std::span<const float>, std::span<const float>, std::span<const float>);
template double energy(std::span<const double>, std::span<const double>, std::span<const double>);
template Var transe_pair_loss(Tape<float>&, const Model<float>&, const Fact&, const Fact&, double);
template Var transe_pair_loss(Tape<double>&, const Model<double>&, const Fact&, const Fact&, double);
template TransEEpochResult transe_epoch(const TransETask&, Model<float>&, const TransEConfig&, Rng&);
template TransEEpochResult transe_epoch(const TransETask&, Model<double>&, const TransEConfig&, Rng&);

}  // namespace kbqa
