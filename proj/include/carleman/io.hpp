#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carleman/dyadic.hpp"
#include "carleman/errors.hpp"
#include "carleman/flat.hpp"
#include "carleman/version.hpp"

namespace carleman {

using ordered_json = nlohmann::ordered_json;

inline ordered_json dyadic_json(const Dyadic& d) {
    ordered_json j;
    j["mantissa"] = d.mantissa().str();
    j["exp2"] = d.exp2();
    j["approx"] = d.to_double();
    return j;
}

/// Certificate report for a synthesized bump: widths, amplitude, bound
/// table and per-order margin between the target and constructive bounds.
inline ordered_json certificate_json(const FlatSpline& b) {
    ordered_json j;
    j["interval"] = {b.left(), b.right()};
    j["epsilon"] = b.epsilon();
    j["cascade_depth"] = b.cascade_depth();
    j["certified_order"] = b.certified_order();
    j["base_width"] = b.base_width();
    j["widths"] = b.widths();
    j["amplitude"] = b.amplitude();
    j["mass"] = b.mass();
    j["bound_table"] = b.bound_table();
    std::vector<double> margin;
    for (int k = 0; k <= b.certified_order(); ++k)
        margin.push_back(b.bound_table()[static_cast<std::size_t>(k)] /
                         b.cascade_bounds()[static_cast<std::size_t>(k)]);
    j["margin_per_order"] = margin;
    return j;
}

/// Report envelope: echoes inputs, version, and seed for reproducibility.
inline ordered_json report_envelope(const std::string& subcommand, const ordered_json& inputs,
                                    unsigned long long seed) {
    ordered_json j;
    j["tool"] = "carleman";
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["seed"] = seed;
    j["inputs"] = inputs;
    return j;
}

inline void write_json(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << j.dump(2) << "\n";
}

/// CSV with a header row; rows are flushed as given.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw Error("cannot write " + path);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
        out_.precision(17);
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << (i ? "," : "") << values[i];
        out_ << "\n";
    }
    void raw_row(const std::string& line) { out_ << line << "\n"; }

private:
    std::ofstream out_;
};

} // namespace carleman
