#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "gridadv/nn.hpp"
#include "gridadv/normalization.hpp"

namespace gridadv {

inline constexpr int kCheckpointFormatVersion = 1;

/// A trained model plus the input/target scaling it was trained under.
struct Checkpoint {
    Model model;
    std::optional<Normalization> normalization;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

/// JSON layout:
///
///   { "format_version": 1,
///     "family": "mlp" | "rnn",
///     "architecture": {...},
///     "dropout": p,
///     "parameters": [{"name", "shape", "values"}, ...]   // parameters() order
///     "normalization": null | {"features": [[lo, hi], ...], "target": [lo, hi]} }
///
/// Doubles are written in shortest round-trip form, so load(save(c)) == c.
nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json normalization_to_json(const Normalization& norm);
Normalization normalization_from_json(const nlohmann::json& doc);

}  // namespace gridadv
