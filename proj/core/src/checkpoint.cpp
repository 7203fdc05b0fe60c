#include "gridadv/checkpoint.hpp"

#include <fstream>

#include "gridadv/csv.hpp"
#include "gridadv/error.hpp"

namespace gridadv {

using nlohmann::json;

namespace {

std::vector<std::string> parameter_names(const Model& model) {
    std::vector<std::string> names;
    if (const auto* rnn = std::get_if<RnnModel>(&model)) {
        names = {"input_weights", "hidden_weights", "hidden_bias"};
        for (std::size_t l = 0; l < rnn->readout.size(); ++l) {
            names.push_back("readout." + std::to_string(l) + ".weight");
            names.push_back("readout." + std::to_string(l) + ".bias");
        }
    } else {
        const auto& mlp = std::get<MlpModel>(model);
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            names.push_back("layer." + std::to_string(l) + ".weight");
            names.push_back("layer." + std::to_string(l) + ".bias");
        }
    }
    return names;
}

json minmax_json(const MinMax& m) { return json::array({m.lo, m.hi}); }

MinMax minmax_from(const json& j) {
    if (!j.is_array() || j.size() != 2) throw ParseError("range must be [lo, hi]", 0);
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

json normalization_to_json(const Normalization& norm) {
    json features = json::array();
    for (const auto& f : norm.features) features.push_back(minmax_json(f));
    return {{"features", features}, {"target", minmax_json(norm.target)}};
}

Normalization normalization_from_json(const json& doc) {
    Normalization norm;
    for (const auto& f : doc.at("features")) norm.features.push_back(minmax_from(f));
    norm.target = minmax_from(doc.at("target"));
    return norm;
}

json checkpoint_to_json(const Checkpoint& ckpt) {
    json doc;
    doc["format_version"] = kCheckpointFormatVersion;
    if (const auto* mlp = std::get_if<MlpModel>(&ckpt.model)) {
        doc["family"] = "mlp";
        doc["architecture"] = {{"input_dim", mlp->arch.input_dim},
                               {"hidden", mlp->arch.hidden},
                               {"classes", mlp->arch.classes}};
        doc["dropout"] = mlp->arch.dropout;
    } else {
        const auto& rnn = std::get<RnnModel>(ckpt.model);
        doc["family"] = "rnn";
        doc["architecture"] = {{"features", rnn.arch.features},
                               {"hidden", rnn.arch.hidden},
                               {"readout", rnn.arch.readout},
                               {"steps", rnn.arch.steps}};
        doc["dropout"] = 0.0;
    }
    const auto names = parameter_names(ckpt.model);
    const auto params = parameters(ckpt.model);
    json arr = json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
        arr.push_back({{"name", names[i]},
                       {"shape", params[i]->shape()},
                       {"values", params[i]->values()}});
    }
    doc["parameters"] = std::move(arr);
    doc["normalization"] =
        ckpt.normalization ? normalization_to_json(*ckpt.normalization) : json(nullptr);
    return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
    try {
        if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw ParseError("unsupported checkpoint format_version " +
                                 doc.at("format_version").dump(),
                             0);
        }
        const auto family = doc.at("family").get<std::string>();
        const json& a = doc.at("architecture");
        Checkpoint ckpt;
        RandomSource scratch(0);
        if (family == "mlp") {
            MlpArchitecture arch{a.at("input_dim").get<std::size_t>(),
                                 a.at("hidden").get<std::vector<std::size_t>>(),
                                 a.at("classes").get<std::size_t>(),
                                 doc.at("dropout").get<double>()};
            ckpt.model = init_params(arch, scratch);
        } else if (family == "rnn") {
            RnnArchitecture arch{a.at("features").get<std::size_t>(),
                                 a.at("hidden").get<std::size_t>(),
                                 a.at("readout").get<std::vector<std::size_t>>(),
                                 a.at("steps").get<std::size_t>()};
            ckpt.model = init_params(arch, scratch);
        } else {
            throw ParseError("unknown model family '" + family + "'", 0);
        }

        auto params = parameters(ckpt.model);
        const json& arr = doc.at("parameters");
        if (arr.size() != params.size()) {
            throw ParseError("checkpoint has " + std::to_string(arr.size()) +
                                 " parameter tensors, architecture needs " +
                                 std::to_string(params.size()),
                             0);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto shape = arr[i].at("shape").get<Shape>();
            if (shape != params[i]->shape()) {
                throw ParseError("parameter " + std::to_string(i) + " has shape " +
                                     shape_string(shape) + ", expected " +
                                     shape_string(params[i]->shape()),
                                 0);
            }
            *params[i] = Tensor(std::move(shape), arr[i].at("values").get<std::vector<double>>());
        }
        if (!doc.at("normalization").is_null()) {
            ckpt.normalization = normalization_from_json(doc.at("normalization"));
        }
        return ckpt;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << checkpoint_to_json(ckpt).dump(1) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what(), 0);
    }
    return checkpoint_from_json(doc);
}

}  // namespace gridadv
