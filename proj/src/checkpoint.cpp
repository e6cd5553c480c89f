#include "translab/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "translab/errors.hpp"
#include "translab/tensor.hpp"

namespace translab {

using nlohmann::json;

void save_checkpoint(const std::string& path, const ParameterSet& params,
                     std::uint64_t seed) {
    json doc;
    doc["format_version"] = kCheckpointFormatVersion;
    doc["seed"] = seed;
    json entries = json::object();
    params.for_each([&](const std::string& name, const Tensor& t, const std::vector<double>&) {
        json e;
        e["shape"] = t.shape();
        e["values"] = t.values();
        entries[name] = std::move(e);
    });
    doc["params"] = std::move(entries);
    std::ofstream out(path);
    if (!out) throw state_error("cannot write checkpoint '" + path + "'");
    out << doc.dump(1) << "\n";
}

CheckpointInfo load_checkpoint(const std::string& path, ParameterSet& params) {
    std::ifstream in(path);
    if (!in) throw state_error("cannot open checkpoint '" + path + "'");
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw parse_error("checkpoint '" + path + "': " + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"].get<int>() != kCheckpointFormatVersion)
        throw parse_error("checkpoint '" + path + "': unsupported format version");
    if (!doc.contains("params") || !doc["params"].is_object())
        throw parse_error("checkpoint '" + path + "': missing params map");

    const json& entries = doc["params"];
    for (const std::string& name : params.names())
        if (!entries.contains(name))
            throw config_error("checkpoint '" + path + "': missing parameter '" + name + "'");
    for (auto it = entries.begin(); it != entries.end(); ++it)
        if (!params.contains(it.key()))
            throw config_error("checkpoint '" + path + "': unexpected parameter '" +
                               it.key() + "'");

    params.for_each([&](const std::string& name, Tensor& t, std::vector<double>&) {
        const json& e = entries.at(name);
        const auto shape = e.at("shape").get<std::vector<std::size_t>>();
        if (shape != t.shape())
            throw config_error("checkpoint '" + path + "': parameter '" + name +
                               "' has shape " + shape_str(shape) + ", expected " +
                               shape_str(t.shape()));
        auto values = e.at("values").get<std::vector<double>>();
        if (values.size() != t.size())
            throw config_error("checkpoint '" + path + "': parameter '" + name +
                               "' has wrong value count");
        t.values_mut() = std::move(values);
    });

    CheckpointInfo info;
    if (doc.contains("seed")) info.seed = doc["seed"].get<std::uint64_t>();
    return info;
}

}  // namespace translab
