#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "kbqa/autodiff.hpp"

namespace kbqa {

// Configurations of the ablation study.
enum class Mode : std::uint8_t { kLstm, kBiLstm, kBiLstmAtt, kBiLstmGki, kBiLstmAttGki };

std::string_view mode_name(Mode mode);
std::optional<Mode> parse_mode(std::string_view name);
bool uses_attention(Mode mode);
bool is_bidirectional(Mode mode);
bool uses_gki(Mode mode);

struct ModelShape {
    std::size_t dim = 16;
    std::size_t word_vocab = 1;
    std::size_t kb_vocab = 2;
    Mode mode = Mode::kBiLstmAttGki;

    /// Hidden width per LSTM direction: dim/2 when bidirectional, dim otherwise.
    std::size_t hidden() const { return is_bidirectional(mode) ? dim / 2 : dim; }
};

enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2, kCellGate = 3 };

// Parameter ids of one LSTM direction. Each gate maps [x ; h_prev] through a
// hidden x (input + hidden) matrix plus bias.
struct LstmIds {
    std::array<ParamId, 4> weight{};
    std::array<ParamId, 4> bias{};
    std::size_t input = 0;
    std::size_t hidden = 0;
};

template <typename T>
class Model {
public:
    static constexpr double kInitRange = 0.08;

    /// Fresh parameters drawn uniformly from [-0.08, 0.08].
    static Model init(const ModelShape& shape, std::uint64_t seed);

    /// Adopts an existing parameter store; names and shapes are validated.
    static Model from_params(const ModelShape& shape, ParamStore<T> params);

    const ModelShape& shape() const { return shape_; }
    Mode mode() const { return shape_.mode; }
    std::size_t dim() const { return shape_.dim; }

    ParamStore<T>& params() { return params_; }
    const ParamStore<T>& params() const { return params_; }

    ParamId word_embeddings() const { return word_embeddings_; }
    ParamId kb_embeddings() const { return kb_embeddings_; }
    ParamId attention_weight() const { return attention_weight_; }
    ParamId attention_bias() const { return attention_bias_; }
    const LstmIds& forward_lstm() const { return forward_; }
    const LstmIds& backward_lstm() const { return backward_; }

    template <typename U>
    Model<U> cast() const {
        return Model<U>::from_params(shape_, params_.template cast<U>());
    }

private:
    Model() = default;
    void bind();

    ModelShape shape_;
    ParamStore<T> params_;
    ParamId word_embeddings_;
    ParamId kb_embeddings_;
    ParamId attention_weight_;
    ParamId attention_bias_;
    LstmIds forward_;
    LstmIds backward_;
};

/// Parameter names and shapes a model of `shape` carries, in store order.
std::vector<std::pair<std::string, Shape>> parameter_layout(const ModelShape& shape);

}  // namespace kbqa
