#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carleman/errors.hpp"
#include "carleman/weights.hpp"

namespace carleman {

/// Environment variable overriding the weight-family registry path.
inline constexpr const char* kRegistryEnvVar = "CARLEMAN_WEIGHT_REGISTRY";

/** Named weight families. Builtins (factorial, gevrey2, gevrey3, power2)
 *  are always present; a JSON registry file with entries
 *  {name, kind, params, K} adds or overrides names. */
class WeightRegistry {
public:
    WeightRegistry() {
        add("factorial", WeightSequence::factorial(200));
        add("gevrey2", WeightSequence::gevrey(2.0, 120));
        add("gevrey3", WeightSequence::gevrey(3.0, 120));
        add("power2", WeightSequence::power(2.0, 200));
    }

    void add(const std::string& name, WeightSequence seq) {
        families_.insert_or_assign(name, std::move(seq));
    }

    /// Load entries from a JSON registry file (array of objects).
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open weight registry: " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw Error("weight registry " + path + ": " + e.what());
        }
        if (!doc.is_array()) throw Error("weight registry must be a JSON array: " + path);
        for (const auto& entry : doc) {
            const std::string name = entry.at("name").get<std::string>();
            const std::string kind = entry.at("kind").get<std::string>();
            const std::size_t K = entry.value("K", std::size_t{64});
            const auto params = entry.value("params", nlohmann::json::object());
            if (kind == "factorial") {
                add(name, WeightSequence::factorial(K));
            } else if (kind == "gevrey") {
                add(name, WeightSequence::gevrey(params.at("s").get<double>(), K));
            } else if (kind == "power") {
                add(name, WeightSequence::power(params.at("c").get<double>(), K));
            } else if (kind == "custom-prefix") {
                add(name, WeightSequence::custom_prefix(params.at("values").get<std::vector<double>>()));
            } else {
                throw Error("weight registry " + path + ": unknown kind '" + kind + "'");
            }
        }
    }

    /// Registry honoring the environment override and an optional explicit path.
    static WeightRegistry standard(const std::optional<std::string>& explicit_path = std::nullopt) {
        WeightRegistry reg;
        if (const char* env = std::getenv(kRegistryEnvVar)) reg.load_file(env);
        if (explicit_path) reg.load_file(*explicit_path);
        return reg;
    }

    const WeightSequence& find(const std::string& name) const {
        auto it = families_.find(name);
        if (it == families_.end()) {
            std::string known;
            for (const auto& [n, _] : families_) known += (known.empty() ? "" : ", ") + n;
            throw Error("unknown weight family '" + name + "' (known: " + known + ")");
        }
        return it->second;
    }

    const std::map<std::string, WeightSequence>& families() const { return families_; }

private:
    std::map<std::string, WeightSequence> families_;
};

} // namespace carleman
