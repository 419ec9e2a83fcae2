#pragma once

// JSON form of a CircuitLayout:
//   {"architecture": "brickwall-open", "n": 4, "depth": 2, "param_count": 45,
//    "entangler_layers": 6,
//    "layers": [[{"kind": "universal2q", "qubits": [0, 1], "param_offset": 0}, ...], ...]}
// Fixed gates omit param_offset. Deserialization re-validates everything.

#include <nlohmann/json.hpp>

#include "mlevqc/ansatz.hpp"

namespace mlevqc {

inline nlohmann::json to_json(const CircuitLayout &layout) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &layer : layout.layers()) {
        nlohmann::json slots = nlohmann::json::array();
        for (const auto &s : layer) {
            nlohmann::json js{{"kind", name(s.kind)}};
            js["qubits"] = is_two_qubit(s.kind) ? nlohmann::json::array({s.qa, s.qb})
                                                : nlohmann::json::array({s.qa});
            if (s.param_offset >= 0) {
                js["param_offset"] = s.param_offset;
            }
            slots.push_back(std::move(js));
        }
        layers.push_back(std::move(slots));
    }
    return {{"architecture", name(layout.architecture())},
            {"n", layout.n_qubits()},
            {"depth", layout.depth()},
            {"param_count", layout.param_count()},
            {"entangler_layers", layout.entangler_layers()},
            {"layers", std::move(layers)}};
}

inline CircuitLayout layout_from_json(const nlohmann::json &j) {
    const auto arch = parse_architecture(j.at("architecture").get<std::string>());
    const int n = j.at("n").get<int>();
    const int depth = j.at("depth").get<int>();
    const int params = j.at("param_count").get<int>();
    std::vector<Layer> layers;
    for (const auto &jl : j.at("layers")) {
        Layer layer;
        for (const auto &js : jl) {
            GateSlot s{parse_gate_kind(js.at("kind").get<std::string>()), 0};
            const auto &q = js.at("qubits");
            if (q.size() != (is_two_qubit(s.kind) ? 2U : 1U)) {
                throw std::invalid_argument("slot qubit list has the wrong length");
            }
            s.qa = q.at(0).get<int>();
            s.qb = q.size() == 2 ? q.at(1).get<int>() : -1;
            s.param_offset = js.value("param_offset", -1);
            layer.push_back(s);
        }
        layers.push_back(std::move(layer));
    }
    auto layout = CircuitLayout::from_layers(arch, n, depth, std::move(layers), params);
    if (j.contains("entangler_layers") &&
        j.at("entangler_layers").get<int>() != layout.entangler_layers()) {
        throw std::invalid_argument("declared entangler_layers does not match the slots");
    }
    return layout;
}

} // namespace mlevqc
