// SPDX-License-Identifier: Apache-2.0
#include "moeplan/trace_io.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace moeplan {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return in;
}

json parse_document(const std::string& path) {
    std::ifstream in = open_in(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("schema", -1) != 1)
        throw std::runtime_error(path + ": missing or unsupported \"schema\" (expected 1)");
    return doc;
}

}  // namespace

void save_trace(const ActivationTrace& trace, const std::string& path,
                const nlohmann::json& config) {
    trace.validate();
    std::ofstream out = open_out(path);
    json header = {{"schema", 1},
                   {"num_experts", trace.num_experts},
                   {"experts_per_token", trace.experts_per_token},
                   {"batch", trace.batch()},
                   {"layers", trace.layer_count()},
                   {"iterations", int(trace.iterations.size())}};
    if (!config.is_null()) header["config"] = config;
    out << header.dump() << '\n';
    for (std::size_t it = 0; it < trace.iterations.size(); ++it) {
        const IterationTrace& iter = trace.iterations[it];
        for (std::size_t l = 0; l < iter.layers.size(); ++l) {
            for (std::size_t t = 0; t < iter.layers[l].size(); ++t) {
                json rec = {{"iter", it}, {"layer", l}, {"token", t},
                            {"experts", iter.layers[l][t]}};
                out << rec.dump() << '\n';
            }
        }
    }
}

ActivationTrace load_trace(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string line;
    std::size_t line_no = 0;

    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + msg);
    };
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    };
    auto parse_line = [&]() -> json {
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw fail("malformed line");
        return j;
    };

    if (!next_line()) throw std::runtime_error(path + ": empty trace file");
    json header = parse_line();
    if (header.value("schema", -1) != 1) throw fail("missing or unsupported \"schema\" (expected 1)");
    const int E = header.value("num_experts", 0);
    const int e = header.value("experts_per_token", 0);
    const int B = header.value("batch", 0);
    const int L = header.value("layers", 0);
    const int iters = header.value("iterations", 0);
    if (E < 1 || e < 1 || e > E || B < 1 || L < 1 || iters < 1)
        throw fail("invalid header dimensions");

    ActivationTrace trace;
    trace.num_experts = E;
    trace.experts_per_token = e;
    trace.iterations.assign(std::size_t(iters), IterationTrace{});
    for (IterationTrace& iter : trace.iterations)
        iter.layers.assign(std::size_t(L), LayerTokens(static_cast<std::size_t>(B)));
    std::vector<bool> seen(std::size_t(iters) * std::size_t(L) * std::size_t(B), false);

    while (next_line()) {
        json rec = parse_line();
        if (!rec.contains("iter") || !rec.contains("layer") || !rec.contains("token") ||
            !rec.contains("experts") || !rec["experts"].is_array())
            throw fail("malformed line");
        const int it = rec["iter"].get<int>();
        const int l = rec["layer"].get<int>();
        const int t = rec["token"].get<int>();
        if (it < 0 || it >= iters || l < 0 || l >= L || t < 0 || t >= B)
            throw fail("record index out of range");
        const std::size_t key = (std::size_t(it) * L + std::size_t(l)) * B + std::size_t(t);
        if (seen[key])
            throw fail("duplicate record for (iter,layer,token)=(" + std::to_string(it) + "," +
                       std::to_string(l) + "," + std::to_string(t) + ")");
        seen[key] = true;

        TokenExperts ids = rec["experts"].get<TokenExperts>();
        if (int(ids.size()) != e) throw fail("wrong expert-set size");
        std::sort(ids.begin(), ids.end());
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (ids[k] < 0 || ids[k] >= E) throw fail("expert id out of range");
            if (k > 0 && ids[k] == ids[k - 1]) throw fail("duplicate expert id");
        }
        trace.iterations[std::size_t(it)].layers[std::size_t(l)][std::size_t(t)] = std::move(ids);
    }
    for (std::size_t key = 0; key < seen.size(); ++key) {
        if (!seen[key])
            throw std::runtime_error(path + ": missing record #" + std::to_string(key));
    }
    trace.validate();
    return trace;
}

void save_placement(const Placement& placement, const std::string& path,
                    const nlohmann::json& config) {
    json doc;
    doc["schema"] = 1;
    if (!config.is_null()) doc["config"] = config;
    doc["strategy"] = to_string(placement.strategy);
    doc["num_experts"] = placement.layers.empty() ? 0 : placement.layers[0].num_experts;
    doc["num_nodes"] = placement.layers.empty() ? 0 : placement.layers[0].num_nodes;
    json layers = json::array();
    for (const LayerPlacement& lp : placement.layers) layers.push_back({{"P", lp.shares}});
    doc["layers"] = std::move(layers);
    open_out(path) << doc.dump(2) << '\n';
}

Placement load_placement(const std::string& path) {
    json doc = parse_document(path);
    Placement placement;
    placement.strategy = strategy_from_string(doc.at("strategy").get<std::string>());
    const int E = doc.at("num_experts").get<int>();
    const int D = doc.at("num_nodes").get<int>();
    if (E < 1 || D < 1) throw std::runtime_error(path + ": invalid placement dimensions");
    for (const json& jl : doc.at("layers")) {
        LayerPlacement lp(E, D);
        std::vector<double> shares = jl.at("P").get<std::vector<double>>();
        if (shares.size() != lp.shares.size())
            throw std::runtime_error(path + ": layer share array has wrong length");
        lp.shares = std::move(shares);
        placement.layers.push_back(std::move(lp));
    }
    if (placement.layers.empty()) throw std::runtime_error(path + ": placement has no layers");
    return placement;
}

void save_mapping(const NodeMapping& mapping, const std::string& path,
                  const nlohmann::json& config) {
    json doc = {{"schema", 1}, {"perm", mapping.to_physical}};
    if (!config.is_null()) doc["config"] = config;
    open_out(path) << doc.dump(2) << '\n';
}

NodeMapping load_mapping(const std::string& path) {
    json doc = parse_document(path);
    NodeMapping mapping;
    mapping.to_physical = doc.at("perm").get<std::vector<int>>();
    if (!mapping.is_bijection()) throw std::runtime_error(path + ": mapping is not a bijection");
    return mapping;
}

}  // namespace moeplan
