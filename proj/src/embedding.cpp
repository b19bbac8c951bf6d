#include "airtime/embedding.hpp"

#include <cmath>
#include <string>

#include "airtime/error.hpp"

namespace airtime {

void EmbeddingConfig::validate() const {
    if (width <= 0) throw ConfigError("embedding: width must be positive");
    if (gcn_hidden <= 0) throw ConfigError("embedding: gcn_hidden must be positive");
    if (gcn_layers < 1) throw ConfigError("embedding: gcn_layers must be at least 1");
    if (provider_width <= 0) throw ConfigError("embedding: provider_width must be positive");
}

nn::Var gcn_forward(const SequencePartitions& parts, const nn::Var& x, const std::vector<GcnLayer>& layers) {
    if (layers.empty()) throw UsageError("gcn_forward: no layers");
    nn::Var h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const GcnLayer& layer = layers[l];
        nn::Var sum;
        for (std::size_t p = 0; p < 3; ++p) {
            nn::Var term = nn::matmul(nn::block_diag_matmul(parts.subset[p], h), layer.weight[p]);
            sum = sum ? nn::add(sum, term) : term;
        }
        h = nn::add_rowvec(sum, layer.bias);
        if (l + 1 < layers.size()) h = nn::relu(h);
    }
    return nn::block_mean_rows(h, kNumJoints);
}

nn::Tensor positional_encoding(std::size_t length, int width) {
    if (width <= 0 || width % 2 != 0)
        throw ConfigError("positional encoding needs a positive even width, got " + std::to_string(width));
    nn::Tensor pe(length, static_cast<std::size_t>(width));
    for (std::size_t t = 0; t < length; ++t) {
        for (int k = 0; 2 * k < width; ++k) {
            const double rate = std::pow(10000.0, 2.0 * k / width);
            const double angle = static_cast<double>(t) / rate;
            pe(t, static_cast<std::size_t>(2 * k)) = std::sin(angle);
            pe(t, static_cast<std::size_t>(2 * k + 1)) = std::cos(angle);
        }
    }
    return pe;
}

nn::Var fixed_embedding(const nn::Tensor& table, std::size_t length, int width) {
    if (table.rows() != length)
        throw DataError("embedding table has " + std::to_string(table.rows()) + " rows for a video of " +
                        std::to_string(length) + " frames");
    if (table.cols() != static_cast<std::size_t>(width))
        throw DataError("embedding table width " + std::to_string(table.cols()) + " does not match configured width " +
                        std::to_string(width));
    return nn::leaf(table, false);
}

} // namespace airtime
