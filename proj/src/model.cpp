#include "kbqa/model.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kbqa/random.hpp"

namespace kbqa {

std::string_view mode_name(Mode mode) {
    switch (mode) {
        case Mode::kLstm: return "lstm";
        case Mode::kBiLstm: return "bilstm";
        case Mode::kBiLstmAtt: return "bilstm-att";
        case Mode::kBiLstmGki: return "bilstm-gki";
        case Mode::kBiLstmAttGki: return "bilstm-att-gki";
    }
    return "unknown";
}

std::optional<Mode> parse_mode(std::string_view name) {
    for (Mode m : {Mode::kLstm, Mode::kBiLstm, Mode::kBiLstmAtt, Mode::kBiLstmGki, Mode::kBiLstmAttGki}) {
        if (mode_name(m) == name) return m;
    }
    return std::nullopt;
}

bool uses_attention(Mode mode) { return mode == Mode::kBiLstmAtt || mode == Mode::kBiLstmAttGki; }
bool is_bidirectional(Mode mode) { return mode != Mode::kLstm; }
bool uses_gki(Mode mode) { return mode == Mode::kBiLstmGki || mode == Mode::kBiLstmAttGki; }

namespace {

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};

void validate_shape(const ModelShape& s) {
    if (s.dim == 0 || s.dim % 2 != 0) throw std::invalid_argument("embedding size d must be positive and even");
    if (s.word_vocab == 0 || s.kb_vocab == 0) throw std::invalid_argument("vocabularies must be non-empty");
}

}  // namespace

std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelShape& shape) {
    validate_shape(shape);
    const std::size_t d = shape.dim;
    const std::size_t h = shape.hidden();
    std::vector<std::pair<std::string, Shape>> out;
    out.emplace_back("word_embeddings", Shape{shape.word_vocab, d});
    out.emplace_back("kb_embeddings", Shape{shape.kb_vocab, d});
    std::vector<std::string> dirs = {"fwd"};
    if (is_bidirectional(shape.mode)) dirs.push_back("bwd");
    for (const auto& dir : dirs) {
        for (const char* g : kGateNames) {
            out.emplace_back("lstm." + dir + ".W_" + g, Shape{h, d + h});
            out.emplace_back("lstm." + dir + ".b_" + g, Shape{h});
        }
    }
    out.emplace_back("attention.W", Shape{2 * d});
    out.emplace_back("attention.b", Shape{1});
    return out;
}

template <typename T>
Model<T> Model<T>::init(const ModelShape& shape, std::uint64_t seed) {
    Model m;
    m.shape_ = shape;
    Rng rng(seed);
    for (auto& [name, dims] : parameter_layout(shape)) {
        m.params_.add(name, Tensor<T>::uniform(dims, static_cast<T>(-kInitRange), static_cast<T>(kInitRange), rng));
    }
    m.bind();
    return m;
}

template <typename T>
Model<T> Model<T>::from_params(const ModelShape& shape, ParamStore<T> params) {
    const auto layout = parameter_layout(shape);
    if (params.size() != layout.size()) {
        throw std::invalid_argument("parameter store has " + std::to_string(params.size()) + " tensors, expected " +
                                    std::to_string(layout.size()));
    }
    for (const auto& [name, dims] : layout) {
        auto id = params.find(name);
        if (!id) throw std::invalid_argument("missing parameter " + name);
        if (params[*id].shape() != dims) {
            throw std::invalid_argument("parameter " + name + " has shape " + shape_string(params[*id].shape()) +
                                        ", expected " + shape_string(dims));
        }
    }
    Model m;
    m.shape_ = shape;
    m.params_ = std::move(params);
    m.bind();
    return m;
}

template <typename T>
void Model<T>::bind() {
    auto id = [this](const std::string& name) { return *params_.find(name); };
    word_embeddings_ = id("word_embeddings");
    kb_embeddings_ = id("kb_embeddings");
    attention_weight_ = id("attention.W");
    attention_bias_ = id("attention.b");
    auto bind_dir = [&](const std::string& dir, LstmIds& out) {
        for (std::size_t g = 0; g < 4; ++g) {
            out.weight[g] = id("lstm." + dir + ".W_" + kGateNames[g]);
            out.bias[g] = id("lstm." + dir + ".b_" + kGateNames[g]);
        }
        out.input = shape_.dim;
        out.hidden = shape_.hidden();
    };
    bind_dir("fwd", forward_);
    if (is_bidirectional(shape_.mode)) bind_dir("bwd", backward_);
}

template class Model<float>;
template class Model<double>;

}  // namespace kbqa
